"""Command-line front end: fit, detect, baseline, simulate.

Every subcommand reads a contingency-table CSV, writes CSV outputs plus a
``manifest.json`` into ``--out``, and is fully reproducible from the
recorded (command, seed). Exit codes: 0 success, 2 usage, 3 validation,
4 I/O, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
import time

import numpy as np

from . import __version__, baselines, detection, simulation
from .dp_mcmc import ModelConfig, PosteriorDraws, run_chain
from .stochastic import RngStream, SliceConfig
from .tables import ContingencyTable, TableError, expected_counts, parse_table_csv
from .baselines import GpsFitError

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_NUMERIC = 5

_ARCHIVE_MAGIC = b"SRSDRAWS"
_ARCHIVE_VERSION = 1


def _fmt(x) -> str:
    """Deterministic shortest round-trip float formatting."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# draws archive: magic, version, dims header, row-major little-endian doubles


def write_draws_archive(path, draws: PosteriorDraws):
    arr = np.ascontiguousarray(draws.lambda_draws, dtype="<f8")
    n_draws, n_rows, n_cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_ARCHIVE_MAGIC)
        fh.write(struct.pack("<I", _ARCHIVE_VERSION))
        fh.write(struct.pack("<QQQ", n_draws, n_rows, n_cols))
        fh.write(arr.tobytes())


def read_draws_archive(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_ARCHIVE_MAGIC))
        if magic != _ARCHIVE_MAGIC:
            raise ValueError(f"'{path}' is not a draws archive")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _ARCHIVE_VERSION:
            raise ValueError(f"unsupported draws archive version {version}")
        n_draws, n_rows, n_cols = struct.unpack("<QQQ", fh.read(24))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n_draws * n_rows * n_cols:
        raise ValueError(f"draws archive '{path}' is truncated")
    return data.reshape(n_draws, n_rows, n_cols)


# ---------------------------------------------------------------------------
# manifest


class _Manifest:
    def __init__(self, argv, seed):
        self.start = time.time()
        self.payload = {
            "command": list(argv),
            "seed": seed,
            "version": __version__,
            "timings": {},
            "outputs": [],
        }
        self._stage_start = self.start

    def config(self, **kwargs):
        self.payload["config"] = kwargs

    def stage(self, name):
        now = time.time()
        self.payload["timings"][name] = round(now - self._stage_start, 6)
        self._stage_start = now

    def write(self, out_dir):
        self.payload["wall_clock_s"] = round(time.time() - self.start, 6)
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def add_output(self, path):
        self.payload["outputs"].append(os.path.basename(path))


def _write_matrix_csv(path, table: ContingencyTable, matrix, fmt=_fmt, header=None):
    """Matrix CSV mirroring the input table layout (labels + header row)."""
    cols = header or table.drug_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["Adverse Event", *cols]) + "\n")
        for name, row in zip(table.ae_names, matrix):
            fh.write(",".join([name, *(fmt(v) for v in row)]) + "\n")


def _load_table(path, reference_column=-1) -> ContingencyTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table_csv(fh.read(), reference_column)


def _chain_config_from_args(args) -> ModelConfig:
    truncation = None if args.K == "auto" else int(args.K)
    pi_fixed = None if args.pi_fixed == "none" else float(args.pi_fixed)
    return ModelConfig(
        likelihood=getattr(args, "model", "poisson"),
        truncation=truncation,
        psi_alpha=args.psi_alpha,
        psi_beta=args.psi_beta,
        psi_tau=args.psi_tau,
        pi_fixed=pi_fixed,
        slice_config=SliceConfig(),
        n_burn=args.burnin,
        n_keep=args.draws,
        thin=args.thin,
    )


def _add_chain_args(parser, with_model=True):
    if with_model:
        parser.add_argument("--model", choices=["poisson", "zip"], default="poisson")
    parser.add_argument("--burnin", type=int, default=5000)
    parser.add_argument("--draws", type=int, default=10000)
    parser.add_argument("--thin", type=int, default=1)
    parser.add_argument("--K", default="auto", help="DP truncation (integer or 'auto')")
    parser.add_argument("--pi-fixed", dest="pi_fixed", default="none",
                        help="fix the local proportion ('none' or a value in [0,1])")
    parser.add_argument("--psi-alpha", dest="psi_alpha", type=float, default=3.0)
    parser.add_argument("--psi-beta", dest="psi_beta", type=float, default=0.5)
    parser.add_argument("--psi-tau", dest="psi_tau", type=float, default=0.5)


def _grid_arg(text):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("empty grid")
    return values


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args, argv) -> int:
    manifest = _Manifest(argv, args.seed)
    table = _load_table(args.table, args.reference_column)
    config = _chain_config_from_args(args)
    manifest.config(
        table=args.table, model=config.likelihood, burnin=config.n_burn,
        draws=config.n_keep, thin=config.thin, K=args.K, pi_fixed=args.pi_fixed,
        psi_alpha=config.psi_alpha, psi_beta=config.psi_beta, psi_tau=config.psi_tau,
        stream=args.stream,
    )
    manifest.stage("load")
    draws = run_chain(table, config, RngStream(args.seed, args.stream))
    manifest.stage("mcmc")

    os.makedirs(args.out, exist_ok=True)
    lam = draws.lambda_draws
    med = np.median(lam, axis=0)
    mean = lam.mean(axis=0)
    q05 = np.quantile(lam, 0.05, axis=0)
    q95 = np.quantile(lam, 0.95, axis=0)
    q_null = (lam <= 1.0).mean(axis=0)
    E = expected_counts(table).values
    summary_path = os.path.join(args.out, "posterior_summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("ae,drug,n,expected,mean,median,q05,q95,null_prob\n")
        for i, ae in enumerate(table.ae_names):
            for j, drug in enumerate(table.drug_names):
                fh.write(",".join([
                    ae, drug, str(int(table.counts[i, j])), _fmt(E[i, j]),
                    _fmt(mean[i, j]), _fmt(med[i, j]), _fmt(q05[i, j]),
                    _fmt(q95[i, j]), _fmt(q_null[i, j]),
                ]) + "\n")
    manifest.add_output(summary_path)

    hyper_path = os.path.join(args.out, "hyperparameters.csv")
    with open(hyper_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("parameter,mean,sd,q05,q95\n")

        def row(name, trace):
            t = np.asarray(trace, dtype=np.float64)
            fh.write(",".join([
                name, _fmt(t.mean()), _fmt(t.std(ddof=0)),
                _fmt(np.quantile(t, 0.05)), _fmt(np.quantile(t, 0.95)),
            ]) + "\n")

        row("pi", draws.pi)
        row("tau", draws.tau)
        row("alpha_global", draws.alpha_global)
        row("beta_global", draws.beta_global)
        for jj, j in enumerate(table.nonreference_columns()):
            row(f"alpha[{table.drug_names[j]}]", draws.alpha_local[:, jj])
            row(f"beta[{table.drug_names[j]}]", draws.beta_local[:, jj])
        if draws.omega is not None:
            for j, drug in enumerate(table.drug_names):
                row(f"omega[{drug}]", draws.omega[:, j])
    manifest.add_output(hyper_path)

    archive_path = os.path.join(args.out, "draws.bin")
    write_draws_archive(archive_path, draws)
    manifest.add_output(archive_path)
    manifest.stage("write")
    manifest.write(args.out)
    return 0


def cmd_detect(args, argv) -> int:
    manifest = _Manifest(argv, None)
    table = _load_table(args.table, args.reference_column)
    lam = read_draws_archive(args.draws)
    if lam.shape[1:] != table.shape:
        raise TableError(
            f"draws archive shape {lam.shape[1:]} does not match table {table.shape}"
        )
    draws = PosteriorDraws(
        lambda_draws=lam, pi=np.empty(0), tau=np.empty(0),
        alpha_local=np.empty((0, 0)), beta_local=np.empty((0, 0)),
        alpha_global=np.empty(0), beta_global=np.empty(0),
        z_ones=np.empty((0, 0), dtype=np.int64),
    )
    manifest.config(
        table=args.table, draws=args.draws, alpha=args.alpha,
        p_grid=list(args.p_grid), k_grid=list(args.k_grid),
        count_filter=not args.no_count_filter,
    )
    manifest.stage("load")
    result = detection.grid_search_detect(
        draws, table, alpha=args.alpha, p_grid=args.p_grid, k_grid=args.k_grid,
        require_count_above_one=not args.no_count_filter,
    )
    manifest.stage("detect")

    os.makedirs(args.out, exist_ok=True)
    signals_path = os.path.join(args.out, "signals.csv")
    _write_matrix_csv(signals_path, table, result.signals, fmt=lambda v: str(int(v)))
    manifest.add_output(signals_path)
    q_path = os.path.join(args.out, "null_probabilities.csv")
    _write_matrix_csv(q_path, table, result.q)
    manifest.add_output(q_path)
    meta_path = os.path.join(args.out, "detection.csv")
    with open(meta_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("p_hat,k_hat,fdr_hat,fnr_hat,feasible,n_signals\n")
        fh.write(",".join([
            _fmt(result.p_hat), _fmt(result.k_hat), _fmt(result.fdr_hat),
            _fmt(result.fnr_hat), str(int(result.feasible)),
            str(int(result.signals.sum())),
        ]) + "\n")
    manifest.add_output(meta_path)
    manifest.stage("write")
    manifest.write(args.out)
    return 0


def cmd_baseline(args, argv) -> int:
    manifest = _Manifest(argv, args.seed)
    table = _load_table(args.table, args.reference_column)
    rng = RngStream(args.seed, args.stream)
    os.makedirs(args.out, exist_ok=True)
    manifest.config(table=args.table, method=args.method, alpha=args.alpha)
    manifest.stage("load")

    if args.method == "bcpnn":
        res = baselines.bcpnn_detect(table, alpha=args.alpha, n_mc=args.n_mc, rng=rng)
        signals = res.signals
        extra = os.path.join(args.out, "ic_summary.csv")
        with open(extra, "w", encoding="utf-8", newline="") as fh:
            fh.write("ae,drug,ic_mean,ic_q025,ic_q975,null_prob,adjusted_null_prob\n")
            for i, ae in enumerate(table.ae_names):
                for j, drug in enumerate(table.drug_names):
                    fh.write(",".join([
                        ae, drug, _fmt(res.ic_mean[i, j]), _fmt(res.ic_low[i, j]),
                        _fmt(res.ic_high[i, j]), _fmt(res.null_prob[i, j]),
                        _fmt(res.adjusted_null_prob[i, j]),
                    ]) + "\n")
        manifest.add_output(extra)
    elif args.method == "gps":
        hyper = baselines.gps_fit(table)
        res = baselines.gps_detect(table, hyper, alpha=args.alpha)
        signals = res.signals
        hyper_path = os.path.join(args.out, "gps_hyper.csv")
        with open(hyper_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("kappa,alpha1,beta1,alpha2,beta2\n")
            fh.write(",".join(_fmt(v) for v in (
                hyper.kappa, hyper.alpha1, hyper.beta1, hyper.alpha2, hyper.beta2,
            )) + "\n")
        manifest.add_output(hyper_path)
        eb_path = os.path.join(args.out, "eb05.csv")
        _write_matrix_csv(eb_path, table, res.eb05)
        manifest.add_output(eb_path)
    elif args.method == "lrt":
        res = baselines.pseudo_lrt_detect(
            table, alpha=args.alpha, n_boot=args.n_boot, rng=rng
        )
        signals = res.signals
        p_path = os.path.join(args.out, "p_values.csv")
        _write_matrix_csv(p_path, table, res.p_values)
        manifest.add_output(p_path)
        omega_path = os.path.join(args.out, "lrt_summary.csv")
        with open(omega_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("drug,omega_hat\n")
            for j, drug in enumerate(table.drug_names):
                fh.write(f"{drug},{_fmt(res.omega_hat[j])}\n")
            fh.write(f"__global_p__,{_fmt(res.global_p)}\n")
        manifest.add_output(omega_path)
    elif args.method == "dp-hu":
        config = _chain_config_from_args(args)
        result, _ = baselines.dp_hu_detect(table, config, alpha=args.alpha, rng=rng)
        signals = result.signals
        meta_path = os.path.join(args.out, "detection.csv")
        with open(meta_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("p_hat,k_hat,fdr_hat,fnr_hat,feasible,n_signals\n")
            fh.write(",".join([
                _fmt(result.p_hat), _fmt(result.k_hat), _fmt(result.fdr_hat),
                _fmt(result.fnr_hat), str(int(result.feasible)),
                str(int(result.signals.sum())),
            ]) + "\n")
        manifest.add_output(meta_path)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown method '{args.method}'")

    manifest.stage("method")
    signals_path = os.path.join(args.out, "signals.csv")
    _write_matrix_csv(signals_path, table, signals, fmt=lambda v: str(int(v)))
    manifest.add_output(signals_path)
    manifest.stage("write")
    manifest.write(args.out)
    return 0


def _parse_config_file(path):
    """Flat key=value study configuration; '#' starts a comment line."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got '{line}'")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def cmd_simulate(args, argv) -> int:
    manifest = _Manifest(argv, args.seed)
    cfg = _parse_config_file(args.config) if args.config else {}

    def pick(name, flag, cast=str):
        return cast(cfg[name]) if flag is None and name in cfg else flag

    table_path = pick("table", args.table)
    if table_path is None:
        raise argparse.ArgumentTypeError("a reference table is required (--table)")
    scenario_id = pick("scenario", args.scenario)
    if args.exclude_rows is None and "exclude_rows" in cfg:
        args.exclude_rows = cfg["exclude_rows"]
    if scenario_id is None:
        args.fixed_rows = int(pick("fixed_rows", args.fixed_rows) or 0)
        args.random_per_col = int(pick("random_per_col", args.random_per_col) or 0)
        args.zi_rate = float(pick("zi_rate", args.zi_rate) or 0.0)
    replicates = pick("replicates", args.replicates, int)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    lambdas = args.lambda_signal or [
        float(v) for v in cfg.get("lambda_signal", "2").split(",")
    ]
    methods = args.methods or cfg.get("methods", "dp-poisson").split(",")
    if replicates is None or replicates < 1:
        raise argparse.ArgumentTypeError("--replicates must be a positive integer")

    table = _load_table(table_path, args.reference_column)
    excluded = []
    for token in (args.exclude_rows.split(",") if args.exclude_rows else []):
        token = token.strip()
        if not token:
            continue
        if token in table.ae_names:
            excluded.append(table.ae_names.index(token))
        else:
            try:
                excluded.append(int(token))
            except ValueError:
                raise argparse.ArgumentTypeError(
                    f"--exclude-rows entry '{token}' is neither a row label nor an index"
                ) from None
    chain_config = _chain_config_from_args(args)
    threads = args.threads or int(os.environ.get("SRSMINE_THREADS", "1"))
    manifest.payload["seed"] = seed
    manifest.config(
        table=table_path, scenario=scenario_id, replicates=replicates,
        lambda_signal=lambdas, methods=list(methods), alpha=args.alpha,
        burnin=chain_config.n_burn, draws=chain_config.n_keep, K=args.K,
        threads=threads,
    )
    manifest.stage("load")

    os.makedirs(args.out, exist_ok=True)
    metrics_path = os.path.join(args.out, "metrics.csv")
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "method,lambda_signal,fdr,fdr_se,sensitivity,sensitivity_se,"
            "avg_type1,avg_type1_se,f_score,f_score_se,n_ok,n_failed\n"
        )
        for strength in lambdas:
            if scenario_id is not None:
                scenario = simulation.SimulationScenario.from_case(
                    scenario_id, strength, table, tuple(excluded)
                )
            else:
                scenario = simulation.SimulationScenario(
                    args.fixed_rows, args.random_per_col, args.zi_rate, strength,
                    table, tuple(excluded),
                )
            result = simulation.run_study(
                scenario, replicates, methods, RngStream(seed, args.stream),
                chain_config=chain_config, alpha=args.alpha, n_mc=args.n_mc,
                n_boot=args.n_boot, n_jobs=threads,
            )
            for method in methods:
                s = result.methods[method]
                fh.write(",".join([
                    method, _fmt(strength),
                    _fmt(s.mean.fdr), _fmt(s.se.fdr),
                    _fmt(s.mean.sensitivity), _fmt(s.se.sensitivity),
                    _fmt(s.mean.avg_type1), _fmt(s.se.avg_type1),
                    _fmt(s.mean.f_score), _fmt(s.se.f_score),
                    str(s.n_ok), str(s.n_failed),
                ]) + "\n")
    manifest.add_output(metrics_path)
    manifest.stage("study")
    manifest.write(args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srsmine",
        description="Adverse-event signal detection in SRS contingency tables",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", help="fit the local-global DP model by MCMC")
    p_fit.add_argument("--table", required=True)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--stream", type=int, default=0)
    p_fit.add_argument("--reference-column", type=int, default=-1)
    _add_chain_args(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_det = sub.add_parser("detect", help="grid-search signal detection from draws")
    p_det.add_argument("--draws", required=True, help="draws archive from 'fit'")
    p_det.add_argument("--table", required=True)
    p_det.add_argument("--out", required=True)
    p_det.add_argument("--alpha", type=float, default=0.05)
    p_det.add_argument("--p-grid", dest="p_grid", type=_grid_arg,
                       default=detection.DEFAULT_P_GRID)
    p_det.add_argument("--k-grid", dest="k_grid", type=_grid_arg,
                       default=detection.DEFAULT_K_GRID)
    p_det.add_argument("--no-count-filter", action="store_true",
                       help="allow rejection at cells with n <= 1")
    p_det.add_argument("--reference-column", type=int, default=-1)
    p_det.set_defaults(func=cmd_detect)

    p_base = sub.add_parser("baseline", help="run a comparison method")
    p_base.add_argument("--table", required=True)
    p_base.add_argument("--out", required=True)
    p_base.add_argument("--method", required=True,
                        choices=["bcpnn", "gps", "lrt", "dp-hu"])
    p_base.add_argument("--alpha", type=float, default=0.05)
    p_base.add_argument("--n-mc", dest="n_mc", type=int, default=100_000)
    p_base.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--stream", type=int, default=0)
    p_base.add_argument("--reference-column", type=int, default=-1)
    _add_chain_args(p_base, with_model=False)
    p_base.set_defaults(func=cmd_baseline)

    p_sim = sub.add_parser("simulate", help="replicated simulation study")
    p_sim.add_argument("--table", help="reference table supplying the margins")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--config", help="flat key=value study configuration file")
    p_sim.add_argument("--scenario", choices=sorted(simulation.CASE_CATALOG))
    p_sim.add_argument("--fixed-rows", dest="fixed_rows", type=int)
    p_sim.add_argument("--random-per-col", dest="random_per_col", type=int)
    p_sim.add_argument("--zi-rate", dest="zi_rate", type=float)
    p_sim.add_argument("--lambda-signal", dest="lambda_signal", type=_grid_arg)
    p_sim.add_argument("--exclude-rows", dest="exclude_rows",
                       help="comma-separated row labels or indices kept signal-free "
                            "(use for a collapsed 'Other AE' row)")
    p_sim.add_argument("--replicates", type=int)
    p_sim.add_argument("--methods", type=lambda s: s.split(","))
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--n-mc", dest="n_mc", type=int, default=100_000)
    p_sim.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--stream", type=int, default=0)
    p_sim.add_argument("--threads", type=int)
    p_sim.add_argument("--reference-column", type=int, default=-1)
    _add_chain_args(p_sim, with_model=False)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args, argv)
    except argparse.ArgumentTypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TableError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, GpsFitError) as exc:
        kind = "numeric" if isinstance(exc, (GpsFitError, ArithmeticError)) else "validation"
        print(f"{kind} error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if kind == "numeric" else EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
