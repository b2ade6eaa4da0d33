"""Adverse-event signal detection for spontaneous-reporting-system tables.

Fits local-global mixture Dirichlet-process Poisson/ZIP models to
drug-by-AE contingency tables by MCMC, selects an FDR-controlled,
FNR-optimized posterior-quantile test, and benchmarks against BCPNN, GPS,
a local-only DP model, and a ZIP pseudo likelihood-ratio test under a
replicated Dirichlet-multinomial simulation protocol.
"""

from importlib import resources

from .baselines import (
    BcpnnResult,
    GpsHyper,
    GpsResult,
    LrtResult,
    bcpnn_detect,
    dp_hu_detect,
    gps_detect,
    gps_fit,
    pseudo_lrt_detect,
)
from .detection import (
    DEFAULT_K_GRID,
    DEFAULT_P_GRID,
    DetectionResult,
    bh_adjust,
    grid_search_detect,
    null_probability_matrix,
    posterior_quantile_matrix,
)
from .dp_mcmc import (
    DpBlock,
    McmcState,
    ModelConfig,
    PosteriorDraws,
    default_truncation,
    run_chain,
)
from .simulation import (
    CASE_CATALOG,
    EvaluationMetrics,
    SimulationScenario,
    TruthMatrix,
    build_lambda0,
    evaluate_detection,
    generate_table,
    kendall_tau,
    run_study,
)
from .stochastic import RngStream, SliceConfig
from .tables import (
    ContingencyTable,
    ExpectedCounts,
    expected_counts,
    parse_table_csv,
    table_to_csv,
)

__version__ = "0.1.0"


def load_statin_table() -> ContingencyTable:
    """The bundled 47-row statin contingency table (46 AEs plus a collapsed
    "Other Pt" row; six statins plus the "Other" reference column)."""
    text = resources.files("srsmine").joinpath("data/statin46.csv").read_text("utf-8")
    return parse_table_csv(text)
