"""Energy storage in U.S. frequency regulation markets.

Signal analytics, storage simulation under ISO state-of-charge policies, and
pay-for-performance settlement.
"""

__version__ = "0.1.0"

from .dispatch import (
    DeploymentGroups,
    Policy,
    RemConfig,
    RtdConfig,
    agc_enhanced_allocation,
    ent_group_dispatch,
    rem_energy_dispatch,
    rtd_base_point,
    run_policy_simulation,
)
from .ess import EssSpec, PerformanceScore, SocTrajectory, accuracy_score, composite_score, follow_signal
from .market_data import PriceSeries, QuantileSummary, boxplot_stats, load_prices, payment_distribution
from .settlement import (
    AwardRecord,
    CreditResult,
    Market,
    PriceRecord,
    caiso_energy_settlement,
    credit_generic,
    credit_isone,
    credit_miso,
    credit_pjm,
    settle,
)
from .signal import (
    RegulationSignal,
    SignalAnalytics,
    energy_balance,
    energy_requirement,
    hourly_analytics,
    mileage,
    split_fast_slow,
    synthesize_ace,
    trinary_quantize,
)

__all__ = [
    "AwardRecord",
    "CreditResult",
    "DeploymentGroups",
    "EssSpec",
    "Market",
    "PerformanceScore",
    "Policy",
    "PriceRecord",
    "PriceSeries",
    "QuantileSummary",
    "RegulationSignal",
    "RemConfig",
    "RtdConfig",
    "SignalAnalytics",
    "SocTrajectory",
    "accuracy_score",
    "agc_enhanced_allocation",
    "boxplot_stats",
    "caiso_energy_settlement",
    "composite_score",
    "credit_generic",
    "credit_isone",
    "credit_miso",
    "credit_pjm",
    "energy_balance",
    "energy_requirement",
    "ent_group_dispatch",
    "follow_signal",
    "hourly_analytics",
    "load_prices",
    "mileage",
    "payment_distribution",
    "rem_energy_dispatch",
    "rtd_base_point",
    "run_policy_simulation",
    "settle",
    "split_fast_slow",
    "synthesize_ace",
    "trinary_quantize",
]
