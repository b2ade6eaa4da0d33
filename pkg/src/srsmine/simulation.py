"""Replicated simulation studies: truth construction, table generation,
detection metrics, and the multi-method study driver.

A scenario fixes how the true signal-strength matrix is built: a set of
fixed rows that carry signals in every non-reference column, additional
per-column random signals, and an optional per-column fraction of
structural-zero cells. Random contingency tables are then drawn by a
Dirichlet-multinomial scheme calibrated to a real reference table's
margins, with generated singleton counts at true-signal cells collapsed to
zero.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import kendalltau

from . import baselines, detection
from .dp_mcmc import ModelConfig, run_chain
from .stochastic import RngStream, sample_dirichlet, sample_multinomial
from .tables import ContingencyTable, TableError

__all__ = [
    "CASE_CATALOG",
    "METHOD_NAMES",
    "SimulationScenario",
    "TruthMatrix",
    "EvaluationMetrics",
    "MethodSummary",
    "StudyResult",
    "build_lambda0",
    "generate_table",
    "kendall_tau",
    "evaluate_detection",
    "run_study",
]

# case id -> (fixed-row signals, random signals per column, zero-inflation rate)
CASE_CATALOG = {
    "0a": (1, 30, 0.0),
    "0b": (1, 30, 0.3),
    "1a": (3, 20, 0.0),
    "1b": (3, 20, 0.3),
    "2a": (10, 10, 0.0),
    "2b": (10, 10, 0.3),
    "3a": (20, 3, 0.0),
    "3b": (20, 3, 0.3),
}

METHOD_NAMES = ("dp-poisson", "dp-zip", "dp-hu", "bcpnn", "gps", "lrt")


@dataclass(frozen=True)
class SimulationScenario:
    """Truth-matrix recipe tied to a reference table supplying the margins.

    ``excluded_rows`` lists rows ineligible for signal or structural-zero
    placement. A collapsed "Other AE" row must be excluded: it holds most
    of the row mass, so inflating its cells would distort every generated
    column margin instead of encoding cell-level signals.
    """

    n_fixed_rows: int
    n_random_per_col: int
    zi_rate: float
    signal_strength: float
    reference: ContingencyTable
    excluded_rows: tuple[int, ...] = ()

    def __post_init__(self):
        n_rows, _ = self.reference.shape
        object.__setattr__(self, "excluded_rows", tuple(sorted(set(self.excluded_rows))))
        if any(r < 0 or r >= n_rows for r in self.excluded_rows):
            raise ValueError("excluded row index out of range")
        n_eligible = n_rows - len(self.excluded_rows)
        if self.n_fixed_rows < 0 or self.n_random_per_col < 0:
            raise ValueError("signal counts must be nonnegative")
        if self.n_fixed_rows + self.n_random_per_col > n_eligible:
            raise ValueError("more signal rows requested than eligible table rows")
        if not 0.0 <= self.zi_rate < 1.0:
            raise ValueError("zi_rate must lie in [0, 1)")
        if self.signal_strength <= 1.0:
            raise ValueError("signal_strength must exceed 1")
        n_zero = int(round(self.zi_rate * n_rows))
        n_signal = self.n_fixed_rows + self.n_random_per_col
        if n_signal + n_zero > n_eligible:
            raise ValueError("zero-inflation cells exceed available non-signal rows")

    @classmethod
    def from_case(
        cls,
        case: str,
        signal_strength: float,
        reference: ContingencyTable,
        excluded_rows: tuple[int, ...] = (),
    ) -> "SimulationScenario":
        if case not in CASE_CATALOG:
            raise ValueError(f"unknown case '{case}' (choose from {sorted(CASE_CATALOG)})")
        fixed, random_per_col, zi = CASE_CATALOG[case]
        return cls(fixed, random_per_col, zi, signal_strength, reference, excluded_rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.reference.shape


@dataclass(frozen=True)
class TruthMatrix:
    """True strengths in {0, 1, signal_strength} plus the two cell masks."""

    lambda0: np.ndarray
    signal_mask: np.ndarray
    zero_mask: np.ndarray
    reference_column: int


def build_lambda0(scenario: SimulationScenario, rng: RngStream) -> TruthMatrix:
    """Place fixed-row, per-column random, and structural-zero cells.

    Fixed rows carry the signal in every non-reference column; each
    non-reference column independently adds random signals on rows outside
    the fixed set, then zeroes a ``zi_rate`` fraction of its non-signal
    cells. The reference column stays at 1 throughout.
    """
    gen = rng.generator
    n_rows, n_cols = scenario.shape
    ref = scenario.reference.reference_column
    cols = scenario.reference.nonreference_columns()
    s = scenario.signal_strength
    eligible = np.setdiff1d(np.arange(n_rows), np.array(scenario.excluded_rows, dtype=int))

    lam = np.ones((n_rows, n_cols))
    signal_mask = np.zeros((n_rows, n_cols), dtype=np.int8)
    zero_mask = np.zeros((n_rows, n_cols), dtype=np.int8)

    fixed = gen.choice(eligible, size=scenario.n_fixed_rows, replace=False)
    rest = np.setdiff1d(eligible, fixed)
    n_zero = int(round(scenario.zi_rate * n_rows))
    for j in cols:
        signal_mask[fixed, j] = 1
        if scenario.n_random_per_col:
            extra = gen.choice(rest, size=scenario.n_random_per_col, replace=False)
            signal_mask[extra, j] = 1
        if n_zero:
            nonsig = np.setdiff1d(
                np.where(signal_mask[:, j] == 0)[0], scenario.excluded_rows
            )
            zeroed = gen.choice(nonsig, size=n_zero, replace=False)
            zero_mask[zeroed, j] = 1
        lam[:, j] = np.where(signal_mask[:, j] == 1, s, 1.0)
        lam[zero_mask[:, j] == 1, j] = 0.0
    return TruthMatrix(lam, signal_mask, zero_mask, ref)


def generate_table(
    truth: TruthMatrix, reference: ContingencyTable, rng: RngStream
) -> ContingencyTable:
    """One random contingency table from the Dirichlet-multinomial scheme.

    Cell probabilities are proportional to lambda0 times the product of
    Dirichlet-drawn margin shares; counts are one multinomial draw of the
    reference grand total. Generated counts of exactly 1 at true-signal
    cells are collapsed to 0.
    """
    if truth.lambda0.shape != reference.shape:
        raise ValueError("truth and reference dimensions differ")
    p_row = sample_dirichlet(reference.row_totals.astype(np.float64), rng)
    p_col = sample_dirichlet(reference.col_totals.astype(np.float64), rng)
    weights = truth.lambda0 * np.outer(p_row, p_col)
    probs = (weights / weights.sum()).ravel()
    counts = sample_multinomial(reference.grand_total, probs, rng).reshape(
        reference.shape
    )
    counts[(truth.signal_mask == 1) & (counts == 1)] = 0
    return ContingencyTable(
        counts,
        reference.ae_names,
        reference.drug_names,
        reference.reference_column,
    )


def kendall_tau(x, y) -> float:
    """Tie-corrected (tau-b) Kendall rank correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("inputs must be equal-length vectors of length >= 2")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("kendall tau undefined for a constant vector")
    tau, _ = kendalltau(x, y)
    return float(tau)


def average_column_tau(lambda0: np.ndarray, columns) -> float:
    """Mean pairwise tau-b between the given columns of a truth matrix."""
    taus = []
    columns = list(columns)
    for a in range(len(columns)):
        for b in range(a + 1, len(columns)):
            taus.append(kendall_tau(lambda0[:, columns[a]], lambda0[:, columns[b]]))
    return float(np.mean(taus))


@dataclass(frozen=True)
class EvaluationMetrics:
    """Single-replicate detection metrics over the non-reference columns."""

    fdr: float
    sensitivity: float
    avg_type1: float
    f_score: float

    def as_tuple(self):
        return (self.fdr, self.sensitivity, self.avg_type1, self.f_score)


def evaluate_detection(signals: np.ndarray, truth: TruthMatrix) -> EvaluationMetrics:
    """Compare a binary signal matrix against the truth masks.

    Only non-reference columns count. Empty denominators follow the 0/0 ->
    0 convention.
    """
    if signals.shape != truth.lambda0.shape:
        raise ValueError("signal matrix shape differs from truth")
    cols = [j for j in range(truth.lambda0.shape[1]) if j != truth.reference_column]
    sig = signals[:, cols] > 0
    true_sig = truth.signal_mask[:, cols] > 0
    tp = int((sig & true_sig).sum())
    fp = int((sig & ~true_sig).sum())
    fn = int((~sig & true_sig).sum())
    tn = int((~sig & ~true_sig).sum())
    fdr = fp / (tp + fp) if (tp + fp) else 0.0
    sens = tp / (tp + fn) if (tp + fn) else 0.0
    type1 = fp / tn if tn else 0.0
    f_den = 2 * tp + fn + fp
    f_score = 2 * tp / f_den if f_den else 0.0
    return EvaluationMetrics(fdr, sens, type1, f_score)


@dataclass
class MethodSummary:
    """Across-replicate averages with Monte Carlo standard errors."""

    method: str
    n_ok: int
    n_failed: int
    mean: EvaluationMetrics
    se: EvaluationMetrics
    replicates: list[EvaluationMetrics] = field(default_factory=list)


@dataclass
class StudyResult:
    """Per-method summaries for one scenario and signal strength."""

    scenario: SimulationScenario
    n_replicates: int
    methods: dict[str, MethodSummary]


def _detect_one(method, table, truth, chain_config, alpha, n_mc, n_boot, stream):
    if method == "dp-poisson":
        draws = run_chain(table, replace(chain_config, likelihood="poisson"), stream)
        return detection.grid_search_detect(draws, table, alpha=alpha).signals
    if method == "dp-zip":
        draws = run_chain(table, replace(chain_config, likelihood="zip"), stream)
        return detection.grid_search_detect(draws, table, alpha=alpha).signals
    if method == "dp-hu":
        result, _ = baselines.dp_hu_detect(table, chain_config, alpha=alpha, rng=stream)
        return result.signals
    if method == "bcpnn":
        return baselines.bcpnn_detect(table, alpha=alpha, n_mc=n_mc, rng=stream).signals
    if method == "gps":
        hyper = baselines.gps_fit(table)
        return baselines.gps_detect(table, hyper, alpha=alpha).signals
    if method == "lrt":
        return baselines.pseudo_lrt_detect(
            table, alpha=alpha, n_boot=n_boot, rng=stream
        ).signals
    raise ValueError(f"unknown method '{method}'")


def _run_replicate(args):
    (scenario, methods, chain_config, alpha, n_mc, n_boot, seed, stream_id, index) = args
    stream = RngStream(seed, stream_id).child(index)
    truth = build_lambda0(scenario, stream.child(0))
    table = None
    for attempt in range(20):
        try:
            table = generate_table(truth, scenario.reference, stream.child(1).child(attempt))
            break
        except TableError:
            continue
    if table is None:
        return index, {m: ("error", "table generation produced a degenerate margin") for m in methods}

    out = {}
    for m_idx, method in enumerate(methods):
        try:
            signals = _detect_one(
                method,
                table,
                truth,
                chain_config,
                alpha,
                n_mc,
                n_boot,
                stream.child(2 + m_idx),
            )
            out[method] = ("ok", evaluate_detection(signals, truth))
        except Exception as exc:  # recorded, replicate excluded for this method
            out[method] = ("error", repr(exc))
    return index, out


def run_study(
    scenario: SimulationScenario,
    n_replicates: int,
    methods,
    rng: RngStream,
    chain_config: ModelConfig | None = None,
    alpha: float = 0.05,
    n_mc: int = 100_000,
    n_boot: int = 1000,
    n_jobs: int = 1,
) -> StudyResult:
    """Replicate the generate/fit/detect pipeline and average the metrics.

    Each replicate runs on an independent child stream of ``rng``, so
    results do not depend on ``n_jobs``. Per-replicate method failures are
    recorded and excluded from that method's average.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    methods = list(methods)
    unknown = set(methods) - set(METHOD_NAMES)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    chain_config = chain_config or ModelConfig()

    jobs = [
        (scenario, methods, chain_config, alpha, n_mc, n_boot, rng.seed, rng.stream_id, r)
        for r in range(n_replicates)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            raw = list(pool.map(_run_replicate, jobs))
    else:
        raw = [_run_replicate(j) for j in jobs]
    raw.sort(key=lambda item: item[0])

    summaries = {}
    for method in methods:
        oks = []
        failures = 0
        for _, per_method in raw:
            status, payload = per_method[method]
            if status == "ok":
                oks.append(payload)
            else:
                failures += 1
        if oks:
            arr = np.array([m.as_tuple() for m in oks])
            mean = EvaluationMetrics(*arr.mean(axis=0))
            se = EvaluationMetrics(*(arr.std(axis=0, ddof=1) / np.sqrt(len(oks))
                                     if len(oks) > 1 else np.zeros(4)))
        else:
            mean = EvaluationMetrics(0.0, 0.0, 0.0, 0.0)
            se = EvaluationMetrics(0.0, 0.0, 0.0, 0.0)
        summaries[method] = MethodSummary(
            method=method,
            n_ok=len(oks),
            n_failed=failures,
            mean=mean,
            se=se,
            replicates=oks,
        )
    return StudyResult(scenario=scenario, n_replicates=n_replicates, methods=summaries)
