"""Gain/loss asymmetry toolkit: inverse statistics, scrambling surrogates,
equal-weight indices and up/down dependence measures."""

__version__ = "0.1.0"

from .dependence import (  # noqa: E402
    BinningSpec,
    DependenceReport,
    WindowPartition,
    dependence_sweep,
    mean_dependence,
    partition_updown,
    pearson_correlation,
    plugin_mutual_information,
)
from .index_builder import PricePanel, build_index, leave_one_out_index  # noqa: E402
from .inverse_stats import (  # noqa: E402
    Barrier,
    EmpiricalPmf,
    FptSamples,
    GenGammaFit,
    asymmetry_stat,
    empirical_pmf,
    first_passage_times,
    fit_gen_gamma,
    most_likely_time,
)
from .series_core import (  # noqa: E402
    PriceSeries,
    ReturnSeries,
    ScrambleSpec,
    log_returns,
    reconstruct,
    scramble,
)
from .synthetic import GbmSpec, RegimeSpec, generate_gbm, generate_regime_panel  # noqa: E402
