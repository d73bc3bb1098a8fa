import math
from dataclasses import dataclass, asdict, fields
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .exceptions import InvalidArgumentError


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class SideChannelParams:
    nbar: float = 0.0  # mean photon number injected by Eve
    m: float = 1.0     # modulation gain seen by the Trojan mode

    def __post_init__(self):
        nbar = _require_finite("nbar", self.nbar)
        m = _require_finite("m", self.m)
        if nbar < 0:
            raise InvalidArgumentError(f"nbar must be >= 0, got {nbar}")
        if m < 0:
            raise InvalidArgumentError(f"m must be >= 0, got {m}")
        object.__setattr__(self, "nbar", nbar)
        object.__setattr__(self, "m", m)

    @property
    def r(self) -> float:
        """TMSV squeezing with sinh^2 r = nbar."""
        return math.asinh(math.sqrt(self.nbar))


@dataclass(frozen=True)
class ChannelParams:
    eta: float         # transmittance, (0, 1]
    eps: float = 0.0   # excess noise, SNU at the channel input

    def __post_init__(self):
        eta = _require_finite("eta", self.eta)
        eps = _require_finite("eps", self.eps)
        if not 0.0 < eta <= 1.0:
            raise InvalidArgumentError(f"eta must lie in (0, 1], got {eta}")
        if eps < 0:
            raise InvalidArgumentError(f"eps must be >= 0, got {eps}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eps", eps)


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the side-channel-free attack with the same key rate."""
    k: float
    mu_eff: float
    eta_eff: float
    eps_eff: float

    def __post_init__(self):
        if self.k < 1.0:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class StageDeviation:
    stage: int
    mean_cond: float  # max |X_i|a - closed form|
    cov_cond: float   # max |V_i|a - closed form|
    cov_avg: float    # max |V_i - closed form|

    @property
    def worst(self) -> float:
        return max(self.mean_cond, self.cov_cond, self.cov_avg)


@dataclass(frozen=True)
class ReductionReport:
    mu: float
    sc: SideChannelParams
    alpha: Tuple[float, float]
    theta1: float
    r2: float
    r3: float
    stages: List[StageDeviation]
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(stage.worst for stage in self.stages)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


@dataclass(frozen=True)
class KeyRateBreakdown:
    i_ab: float
    holevo_eb: float
    rate: float
    effective: EffectiveParams


@dataclass(frozen=True)
class ThresholdPoint:
    eta: float
    eta_db: float
    eps_max: float
    sc: SideChannelParams
    flag: Optional[str] = None  # 'no-threshold' / 'singular-channel' when the solver gave up


@dataclass(frozen=True)
class SessionSample:
    alpha: Tuple[float, float]  # Alice's displacement (x, p)
    beta: Tuple[float, float]   # Bob's heterodyne outcome (x, p)


class SessionSamples:
    """Column-stored batch of prepare-and-measure rounds.

    Behaves as a read-only sequence of SessionSample while keeping the
    (n, 2) alpha and beta arrays available for vectorised statistics.
    """

    def __init__(self, alpha: np.ndarray, beta: np.ndarray):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if alpha.ndim != 2 or alpha.shape[1] != 2 or alpha.shape != beta.shape:
            raise InvalidArgumentError("alpha and beta must both have shape (n, 2)")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise InvalidArgumentError("session samples must be finite")
        self.alpha = alpha
        self.beta = beta

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def __getitem__(self, index: int) -> SessionSample:
        a, b = self.alpha[index], self.beta[index]
        return SessionSample(alpha=(float(a[0]), float(a[1])), beta=(float(b[0]), float(b[1])))

    def __iter__(self) -> Iterator[SessionSample]:
        for index in range(len(self)):
            yield self[index]


@dataclass(frozen=True)
class ChannelEstimate:
    eta_hat: float
    eps_hat: float
    i_ab_hat: float
    sample_count: int
    eta_se: float
    eps_se: float
    i_ab_se: float


SWEEP_VARIABLES = ("eta", "eta_db", "eps", "nbar", "m", "mu")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise InvalidArgumentError(
                f"variable must be one of {', '.join(SWEEP_VARIABLES)}, got {self.variable!r}")
        if self.scale not in ("linear", "log"):
            raise InvalidArgumentError(f"scale must be 'linear' or 'log', got {self.scale!r}")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 2:
            raise InvalidArgumentError(f"steps must be an integer >= 2, got {self.steps}")
        start = _require_finite("start", self.start)
        stop = _require_finite("stop", self.stop)
        if not start < stop:
            raise InvalidArgumentError(f"start must be < stop, got {start} >= {stop}")
        if self.scale == "log" and start <= 0:
            raise InvalidArgumentError("log scale requires positive endpoints")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "stop", stop)
        object.__setattr__(self, "steps", int(self.steps))

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class RunRecord:
    mode: str                 # 'asymptotic' or 'finite'
    eta: float
    eta_db: float
    eps: float
    nbar: float
    m: float
    mu: Optional[float]       # None in asymptotic mode
    rate: float
    i_ab: float
    holevo: float
    k: float
    mu_eff: float
    eta_eff: float
    eps_eff: float
    plob: Optional[float]     # None for a lossless channel
    tool_version: str
    timestamp: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        names = {f.name for f in fields(cls)}
        unknown = set(payload) - names
        if unknown:
            raise InvalidArgumentError(f"unknown RunRecord fields: {sorted(unknown)}")
        return cls(**payload)
