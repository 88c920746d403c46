from .ReplicateSummary import ReplicateSummary, SummaryRow
from .replicates import ALL_ARMS, RcSpec, run_replicates, run_sensitivity
from .scenario import (
    REFERENCE_ORACLE_ATE,
    OracleAte,
    compare_reference_oracle,
    generate_scenario,
    is_default_scenario,
    oracle_ate,
    simulate_rows,
)
from .ScenarioConfig import ScenarioConfig

__all__ = [
    "ALL_ARMS",
    "OracleAte",
    "REFERENCE_ORACLE_ATE",
    "RcSpec",
    "ReplicateSummary",
    "ScenarioConfig",
    "SummaryRow",
    "compare_reference_oracle",
    "generate_scenario",
    "is_default_scenario",
    "oracle_ate",
    "run_replicates",
    "run_sensitivity",
    "simulate_rows",
]
