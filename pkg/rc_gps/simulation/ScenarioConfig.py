import logging
import math
import numbers
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from rc_gps.exceptions import ConfigError
from rc_gps.util import dataclass_from_dict

logger = logging.getLogger(__name__)

# gives corr(X, W) of about 0.85 in the default scenario
DEFAULT_W_NOISE_SD = 17.69


@dataclass
class ScenarioConfig:
    """
    Data-generating mechanism of the simulation study.

    Confounders: C1..C3 trivariate normal with covariance ``((2, 1, -1), (1, 1, -0.5), (-1, -0.5, 1))``, C4 uniform
    on the integers -2..2, C5 ~ Uniform(-3, 3), C6 ~ chi-squared(1). Calibration covariates: D1 = C1,
    D2 ~ Normal(0, 4), D3 ~ Uniform(-5, 5). Then::

        W = tau_0 + tau_{1:6}^T C + Normal(0, w_noise_sd^2)
        X = gamma1 W + gamma2^T D + gamma3 W^2 + Normal(0, rc_noise_sd^2)
        Y = beta1 X + beta2^T C + Normal(0, y_noise_sd^2)

    The validation study is the first ``n_validation`` rows of the main study.

    Use :meth:`preset` for the named settings: ``default``, ``large_exposure_confounding``, ``weak_correlation``,
    ``lack_of_fit``, ``quadratic``, ``small_effect``, ``large_outcome_confounding``.
    """

    tau: Tuple[float, ...] = field(
        default=(0.8, 0.8, 1.6, 1.2, 2.4, 1.6, 2.4), metadata={"help": "Intercept and C1..C6 slopes of W | C."}
    )
    gamma1: float = field(default=0.8, metadata={"help": "Slope of W in X | W, D."})
    gamma2: Tuple[float, ...] = field(default=(2.0, 1.0, 3.0), metadata={"help": "Slopes of D1..D3 in X | W, D."})
    gamma3: float = field(default=0.0, metadata={"help": "Coefficient of W^2 in X | W, D; 0 gives a linear model."})
    rc_noise_sd: float = field(default=1.0, metadata={"help": "Residual standard deviation of X | W, D."})
    beta1: float = field(default=1.0, metadata={"help": "Effect of X on Y."})
    beta2: Tuple[float, ...] = field(
        default=(3.0, 2.0, 1.0, 4.0, 2.0, 1.0), metadata={"help": "Slopes of C1..C6 in Y | X, C."}
    )
    y_noise_sd: float = field(default=1.0, metadata={"help": "Residual standard deviation of Y | X, C."})
    w_noise_sd: float = field(default=DEFAULT_W_NOISE_SD, metadata={"help": "Residual standard deviation of W | C."})
    n_main: int = field(default=2000, metadata={"help": "Size of the main study."})
    n_validation: int = field(default=500, metadata={"help": "Size of the internal validation study."})
    cutoffs: Tuple[float, ...] = field(default=(-5.0, 15.0), metadata={"help": "Exposure cut-off points."})
    n_replicates: int = field(default=1000, metadata={"help": "Number of Monte Carlo replicates."})
    seed: int = field(default=0, metadata={"help": "Base random seed."})

    def __post_init__(self):
        self.tau = self._vector("tau", self.tau, 7)
        self.gamma2 = self._vector("gamma2", self.gamma2, 3)
        self.beta2 = self._vector("beta2", self.beta2, 6)
        self.cutoffs = self._vector("cutoffs", self.cutoffs, None)
        for name in ("gamma1", "gamma3", "beta1"):
            setattr(self, name, self._finite(name, getattr(self, name)))
        for name in ("rc_noise_sd", "y_noise_sd", "w_noise_sd"):
            value = self._finite(name, getattr(self, name))
            if value < 0:
                raise ConfigError(name, f"must be nonnegative, got {value}")
            setattr(self, name, value)
        for name in ("n_main", "n_validation", "n_replicates"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real) or int(value) != value or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
            setattr(self, name, int(value))
        if self.n_validation > self.n_main:
            raise ConfigError("n_validation", f"validation study ({self.n_validation}) exceeds the main study")
        if not self.cutoffs or any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ConfigError("cutoffs", f"must be a nonempty, strictly increasing list, got {list(self.cutoffs)}")
        self.seed = int(self.seed)

    @staticmethod
    def _finite(name: str, value: Any) -> float:
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(name, f"must be a number, got {value!r}") from None
        if not math.isfinite(value):
            raise ConfigError(name, f"must be finite, got {value}")
        return value

    @classmethod
    def _vector(cls, name: str, values: Any, length: Optional[int] = None) -> Tuple[float, ...]:
        if isinstance(values, (str, bytes)) or not hasattr(values, "__iter__"):
            raise ConfigError(name, f"must be a list of numbers, got {values!r}")
        values = tuple(cls._finite(f"{name}[{idx}]", value) for idx, value in enumerate(values))
        if length is not None and len(values) != length:
            raise ConfigError(name, f"must have {length} entries, got {len(values)}")
        return values

    @property
    def n_categories(self) -> int:
        return len(self.cutoffs) + 1

    @staticmethod
    def presets() -> List[str]:
        return list(_PRESETS)

    @classmethod
    def preset(cls, name: str, **overrides) -> "ScenarioConfig":
        """The named setting, with ``overrides`` applied on top."""
        if name not in _PRESETS:
            raise ConfigError("preset", f"{name!r} is not one of {list(_PRESETS)}")
        return replace(cls(**_PRESETS[name]), **overrides)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        for name in ("tau", "gamma2", "beta2", "cutoffs"):
            values[name] = list(values[name])
        return values

    @classmethod
    def from_dict(cls, values: Dict[str, Any], field_path: str = "scenario") -> "ScenarioConfig":
        """
        Builds a scenario from a JSON object. A ``preset`` key selects the starting setting (``default`` otherwise);
        the remaining keys override its fields.
        """
        values = dict(values)
        name = values.pop("preset", "default")
        if name not in _PRESETS:
            raise ConfigError(f"{field_path}.preset", f"{name!r} is not one of {list(_PRESETS)}")
        return dataclass_from_dict(cls, {**_PRESETS[name], **values}, field_path)


_PRESETS: Dict[str, Dict[str, Any]] = {
    "default": {},
    "large_exposure_confounding": {"tau": (1.6, 1.6, 3.2, 2.4, 4.8, 3.2, 4.8)},
    "weak_correlation": {"gamma1": 0.2},
    "lack_of_fit": {"rc_noise_sd": math.sqrt(10.0)},
    "quadratic": {"gamma3": 0.05},
    "small_effect": {"beta1": 0.5},
    "large_outcome_confounding": {"beta2": (15.0, 10.0, 5.0, 20.0, 10.0, 5.0)},
}
