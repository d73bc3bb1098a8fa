import math
from typing import Iterable, List

from scipy.optimize import bisect

from .entities import ChannelParams, SideChannelParams, ThresholdPoint
from .exceptions import InvalidArgumentError, NoThresholdError, SingularChannelError
from .keyrate import NOMINAL_MU, key_rate_asymptotic

DEFAULT_TOL = 1e-10
MAX_DOUBLINGS = 60
FLAG_NO_THRESHOLD = "no-threshold"
FLAG_SINGULAR = "singular-channel"


def eta_to_db(eta: float) -> float:
    """Channel loss in dB (positive for eta < 1)."""
    if not eta > 0:
        raise InvalidArgumentError(f"eta must be > 0, got {eta}")
    # + 0.0 folds -0.0 at eta = 1
    return -10.0 * math.log10(eta) + 0.0


def db_to_eta(db: float) -> float:
    if not math.isfinite(db):
        raise InvalidArgumentError(f"dB value must be finite, got {db}")
    return 10.0 ** (-db / 10.0)


def _check_open_unit(eta: float) -> float:
    eta = float(eta)
    if not 0.0 < eta < 1.0:
        raise InvalidArgumentError(f"eta must lie in (0, 1), got {eta}")
    return eta


def epsilon_max(eta: float, sc: SideChannelParams, tol: float = DEFAULT_TOL,
                max_doublings: int = MAX_DOUBLINGS) -> float:
    """Largest excess noise with a non-negative asymptotic key rate."""
    eta = _check_open_unit(eta)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol}")
    if isinstance(max_doublings, bool) or int(max_doublings) != max_doublings or max_doublings < 0:
        raise InvalidArgumentError(f"max_doublings must be a non-negative integer, got {max_doublings}")

    def rate(eps: float) -> float:
        return key_rate_asymptotic(ChannelParams(eta=eta, eps=eps), NOMINAL_MU, sc).rate

    if rate(0.0) <= 0:
        return 0.0

    lo, hi = 0.0, 1.0
    for _ in range(int(max_doublings) + 1):
        value = rate(hi)
        if value == 0:
            return hi
        if value < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoThresholdError(
            f"key rate still positive at eps = {lo:g} after {max_doublings} doublings (eta = {eta:g})")

    return float(bisect(rate, lo, hi, xtol=tol, maxiter=400))


def threshold_curve(eta_grid: Iterable[float], sc: SideChannelParams, tol: float = DEFAULT_TOL,
                    max_doublings: int = MAX_DOUBLINGS) -> List[ThresholdPoint]:
    """epsilon_max over a grid, in grid order.

    Points where the solver gives up are returned with eps_max = 0 and a flag
    instead of aborting the whole curve.
    """
    grid = [_check_open_unit(eta) for eta in eta_grid]
    points = []
    for eta in grid:
        flag = None
        try:
            eps = epsilon_max(eta, sc, tol, max_doublings)
        except NoThresholdError:
            eps, flag = 0.0, FLAG_NO_THRESHOLD
        except SingularChannelError:
            eps, flag = 0.0, FLAG_SINGULAR
        points.append(ThresholdPoint(eta=eta, eta_db=eta_to_db(eta), eps_max=eps, sc=sc, flag=flag))
    return points
