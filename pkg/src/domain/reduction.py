"""
Reduction of the modulated Trojan-horse attack to a side-channel-free one.

Mode layout of the hacked source: 0 = signal, 1 = Trojan mode (modulated by
m*alpha), 2 = Eve's idler arm of the injected TMSV. Three symplectic stages
disentangle the Trojan mode, after which the signal carries k1*alpha, the idler
carries k2*Z*alpha and mode 1 is left in vacuum.
"""
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .entities import EffectiveParams, ReductionReport, SideChannelParams, StageDeviation
from .exceptions import InvalidArgumentError
from .gaussian import (
    IDENTITY_2,
    PAULI_Z,
    GaussianState,
    SymplecticTransform,
    apply,
    beamsplitter,
    displace,
    entropy,
    tensor,
    tmsv,
    two_mode_squeezer,
    vacuum,
)

SIGNAL, TROJAN, IDLER = 0, 1, 2
NUM_MODES = 3
DEFAULT_VERIFY_TOL = 1e-10


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not math.isfinite(mu) or mu < 0:
        raise InvalidArgumentError(f"mu must be a finite value >= 0, got {mu}")
    return mu


def _as_alpha(alpha: Sequence[float]) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (2,) or not np.all(np.isfinite(alpha)):
        raise InvalidArgumentError(f"alpha must be a finite real 2-vector, got {alpha!r}")
    return alpha


def _hyperbolic(sc: SideChannelParams) -> Tuple[float, float, float, float]:
    # sinh^2 r = nbar, so these are exact in nbar
    s = math.sqrt(sc.nbar)
    return s, math.sqrt(1.0 + sc.nbar), 2.0 * sc.nbar + 1.0, 2.0 * s * math.sqrt(1.0 + sc.nbar)


def _blocks(blocks: Dict[Tuple[int, int], np.ndarray]) -> np.ndarray:
    """Assemble a symmetric 6x6 matrix from its upper-triangle 2x2 blocks."""
    cov = np.zeros((2 * NUM_MODES, 2 * NUM_MODES))
    for (i, j), block in blocks.items():
        cov[2 * i:2 * i + 2, 2 * j:2 * j + 2] = block
        if i != j:
            cov[2 * j:2 * j + 2, 2 * i:2 * i + 2] = block.T
    return cov


def build_conditional_state(alpha: Sequence[float], sc: SideChannelParams) -> GaussianState:
    """|alpha> on the signal, m*alpha on the Trojan arm of a TMSV(r)."""
    alpha = _as_alpha(alpha)
    state = tensor(vacuum(1), tmsv(sc.r))
    state = displace(state, SIGNAL, alpha)
    return displace(state, TROJAN, sc.m * alpha)


def build_initial_state(mu: float, sc: SideChannelParams) -> GaussianState:
    """Conditional state averaged over alpha ~ N(0, mu/2 per quadrature)."""
    mu = _check_mu(mu)
    conditional = build_conditional_state((0.0, 0.0), sc)
    u = np.array([1.0, sc.m, 0.0])
    cov = conditional.cov + mu * np.kron(np.outer(u, u), IDENTITY_2)
    return GaussianState(np.zeros(2 * NUM_MODES), cov)


def stage_parameters(sc: SideChannelParams) -> Tuple[float, float, float]:
    """(theta1, r2, r3) of the beamsplitter and the two squeezers."""
    m = sc.m
    s, _, c2, _ = _hyperbolic(sc)
    big_m = m * m + 1.0
    theta1 = math.acos(1.0 / math.sqrt(big_m))
    # + 0.0 folds -0.0 at nbar = 0
    r2 = -math.asinh(math.sqrt(2.0) * s / math.sqrt(m * m * c2 + m * m + 2.0)) + 0.0
    r3 = -math.asinh(m * s / math.sqrt(big_m)) + 0.0
    return theta1, r2, r3


def reduction_circuit(sc: SideChannelParams) -> List[SymplecticTransform]:
    theta1, r2, r3 = stage_parameters(sc)
    return [
        beamsplitter(theta1, (SIGNAL, TROJAN), NUM_MODES),
        two_mode_squeezer(r2, (TROJAN, IDLER), NUM_MODES),
        two_mode_squeezer(r3, (SIGNAL, IDLER), NUM_MODES),
    ]


def reduced_modulation(sc: SideChannelParams) -> Tuple[float, float]:
    """Displacement gains (k1, k2) left on the signal and idler after the circuit."""
    s, _, _, _ = _hyperbolic(sc)
    k1 = math.sqrt(sc.m * sc.m * (1.0 + s * s) + 1.0)
    k2 = -sc.m * s
    return k1, k2


def fold_components(k1: float, k2: float) -> float:
    """Total modulation gain squared.

    Even in k2: flipping the idler's quadrature signs does not change it.
    """
    return k1 * k1 + k2 * k2


def _stage_closed_forms(mu: float, sc: SideChannelParams, alpha: np.ndarray):
    """Expected (mean|alpha, cov|alpha, averaged cov) after each stage."""
    m = sc.m
    s, _, c2, s2 = _hyperbolic(sc)
    big_m = m * m + 1.0
    root_m = math.sqrt(big_m)
    eye, z = IDENTITY_2, PAULI_Z
    zero = np.zeros((2, 2))

    mean_12 = np.concatenate([root_m * alpha, np.zeros(4)])
    pump = mu * big_m * _blocks({(SIGNAL, SIGNAL): eye})

    y1 = s2 / root_m
    cov1 = _blocks({
        (SIGNAL, SIGNAL): (m * m * c2 + 1.0) / big_m * eye,
        (SIGNAL, TROJAN): 2.0 * m * s * s / big_m * eye,
        (SIGNAL, IDLER): m * y1 * z,
        (TROJAN, TROJAN): (m * m + c2) / big_m * eye,
        (TROJAN, IDLER): y1 * z,
        (IDLER, IDLER): c2 * eye,
    })

    a = (m * m * c2 + 1.0) / big_m
    y2 = math.sqrt(2.0) * m * s * math.sqrt(m * m * c2 + m * m + 2.0) / big_m
    cov2 = _blocks({
        (SIGNAL, SIGNAL): a * eye,
        (SIGNAL, TROJAN): zero,
        (SIGNAL, IDLER): y2 * z,
        (TROJAN, TROJAN): eye,
        (TROJAN, IDLER): zero,
        (IDLER, IDLER): a * eye,
    })

    k1, k2 = reduced_modulation(sc)
    mean3 = np.concatenate([k1 * alpha, np.zeros(2), k2 * (z @ alpha)])
    x_plus = 0.5 * (m * m * mu * c2 + m * m * mu + 2.0 * mu + 2.0)
    x_minus = 0.5 * (m * m * mu * c2 - m * m * mu + 2.0)
    y3 = -mu * m * s * math.sqrt(m * m * c2 + m * m + 2.0) / math.sqrt(2.0)
    avg3 = _blocks({
        (SIGNAL, SIGNAL): x_plus * eye,
        (SIGNAL, TROJAN): zero,
        (SIGNAL, IDLER): y3 * z,
        (TROJAN, TROJAN): eye,
        (TROJAN, IDLER): zero,
        (IDLER, IDLER): x_minus * eye,
    })

    return [
        (mean_12, cov1, cov1 + pump),
        (mean_12, cov2, cov2 + pump),
        (mean3, np.eye(2 * NUM_MODES), avg3),
    ]


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def verify_reduction(mu: float, sc: SideChannelParams, alpha: Sequence[float],
                     tolerance: float = DEFAULT_VERIFY_TOL) -> ReductionReport:
    """Propagate conditional and averaged moments stage by stage and compare
    them with the closed forms. Never raises on a mismatch: the report
    carries the deviations."""
    mu = _check_mu(mu)
    alpha = _as_alpha(alpha)
    if not tolerance > 0:
        raise InvalidArgumentError(f"tolerance must be > 0, got {tolerance}")

    conditional = build_conditional_state(alpha, sc)
    averaged = build_initial_state(mu, sc)
    expected = _stage_closed_forms(mu, sc, alpha)

    stages = []
    for index, (stage, (mean_cf, cov_cf, avg_cf)) in enumerate(zip(reduction_circuit(sc), expected), start=1):
        conditional = apply(stage, conditional)
        averaged = apply(stage, averaged)
        stages.append(StageDeviation(
            stage=index,
            mean_cond=_max_abs(conditional.mean, mean_cf),
            cov_cond=_max_abs(conditional.cov, cov_cf),
            cov_avg=_max_abs(averaged.cov, avg_cf),
        ))

    theta1, r2, r3 = stage_parameters(sc)
    return ReductionReport(
        mu=mu,
        sc=sc,
        alpha=(float(alpha[0]), float(alpha[1])),
        theta1=theta1,
        r2=r2,
        r3=r3,
        stages=stages,
        tolerance=float(tolerance),
    )


def k_factor(sc: SideChannelParams) -> float:
    return math.sqrt(sc.m * sc.m * (2.0 * sc.nbar + 1.0) + 1.0)


def effective_params(mu: float, eta: float, eps: float, sc: SideChannelParams) -> EffectiveParams:
    """mu' = k^2 mu, eta' = eta / k^2, eps' = k^2 eps."""
    mu = _check_mu(mu)
    eta, eps = float(eta), float(eps)
    if not 0.0 < eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in (0, 1], got {eta}")
    if not math.isfinite(eps) or eps < 0:
        raise InvalidArgumentError(f"eps must be a finite value >= 0, got {eps}")
    k = k_factor(sc)
    k_sq = k * k
    return EffectiveParams(k=k, mu_eff=k_sq * mu, eta_eff=eta / k_sq, eps_eff=k_sq * eps)


def closed_form_psi0_eigenvalues(mu: float, nbar: float) -> Tuple[float, float, float]:
    """Symplectic spectrum of the averaged m=1 source state."""
    mu = _check_mu(mu)
    sc = SideChannelParams(nbar=nbar, m=1.0)
    c2 = 2.0 * sc.nbar + 1.0
    root = math.sqrt(1.0 + mu + mu * mu + mu * c2)
    # root - mu, without the cancellation at large mu
    v3 = (1.0 + mu + mu * c2) / (root + mu)
    return 1.0, mu + root, v3


def psi0_entropy(mu: float, sc: SideChannelParams) -> float:
    return entropy(build_initial_state(mu, sc))
