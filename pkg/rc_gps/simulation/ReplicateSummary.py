from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from rc_gps.util import write_csv_rows, write_json

SUMMARY_HEADER = [
    "arm",
    "method",
    "delta",
    "x_prime",
    "x",
    "oracle",
    "mean",
    "bias",
    "percent_bias",
    "sd",
    "mc_se",
    "coverage",
    "n_success",
    "n_failed",
]


@dataclass
class SummaryRow:
    """
    Monte Carlo summary of one contrast ``ATE(x_prime, x)`` for one exposure arm and GPS implementation.

    ``percent_bias`` is ``100 * bias / oracle`` (None for a zero oracle), ``mc_se`` the Monte Carlo standard error
    of ``mean``, and ``coverage`` the share of bootstrap intervals containing the oracle (None without bootstrap).
    ``delta`` is set in sensitivity runs.
    """

    arm: str
    method: str
    x_prime: int
    x: int
    oracle: float
    mean: float
    bias: float
    percent_bias: Optional[float]
    sd: float
    mc_se: float
    coverage: Optional[float]
    n_success: int
    n_failed: int
    delta: Optional[float] = None


@dataclass
class ReplicateSummary:
    """
    Summaries of a replicate study plus, optionally, the raw per-replicate estimates (one dict per replicate, arm,
    method and contrast) and the failure log.
    """

    rows: List[SummaryRow]
    raw: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    oracle: Optional[Dict[str, Any]] = None

    def get(self, arm: str, method: str, x_prime: int, x: int, delta: Optional[float] = None) -> SummaryRow:
        for row in self.rows:
            if (row.arm, row.method, row.x_prime, row.x, row.delta) == (arm, method, x_prime, x, delta):
                return row
        raise KeyError(f"No summary row for ({arm}, {method}, {x_prime}, {x}, delta={delta})")

    def extend(self, other: "ReplicateSummary") -> None:
        self.rows.extend(other.rows)
        self.raw.extend(other.raw)
        self.failures.extend(other.failures)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [asdict(row) for row in self.rows],
            "n_failures": len(self.failures),
            "failures": self.failures,
            "oracle": self.oracle,
        }

    def to_csv(self, path: str) -> None:
        write_csv_rows(path, SUMMARY_HEADER, ([getattr(row, name) for name in SUMMARY_HEADER] for row in self.rows))

    def to_json(self, path: str) -> None:
        write_json(path, self.to_dict())

    def raw_to_csv(self, path: str) -> None:
        header = ["replicate", "arm", "method", "delta", "x_prime", "x", "estimate", "ci_lower", "ci_upper"]
        write_csv_rows(path, header, ([entry.get(name) for name in header] for entry in self.raw))
