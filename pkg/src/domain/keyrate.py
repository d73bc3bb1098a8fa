"""
Reverse-reconciliation key rate of the heterodyne coherent-state protocol,
evaluated on the effective (side-channel-free) parameters.

Asymptotic formulas are the mu -> infinity closed forms; the finite path builds
the Alice-Bob covariance matrix and takes entropies numerically.
"""
import math
from typing import Tuple

import numpy as np

from .entities import ChannelParams, EffectiveParams, KeyRateBreakdown, SideChannelParams
from .exceptions import InfiniteCapacityError, InvalidArgumentError, SingularChannelError
from .gaussian import IDENTITY_2, PAULI_Z, GaussianState, entropy, entropy_g, heterodyne_condition
from .reduction import effective_params

NOMINAL_MU = 1.0
LN2 = math.log(2.0)
LOG2_E = 1.0 / LN2


def _check_effective(eff: EffectiveParams) -> None:
    if not eff.mu_eff > 0:
        raise InvalidArgumentError(f"effective modulation must be > 0, got {eff.mu_eff}")
    if not 0.0 < eff.eta_eff <= 1.0:
        raise InvalidArgumentError(f"effective transmittance must lie in (0, 1], got {eff.eta_eff}")
    if eff.eps_eff < 0:
        raise InvalidArgumentError(f"effective excess noise must be >= 0, got {eff.eps_eff}")


def _require_lossy(eta_eff: float) -> None:
    if eta_eff >= 1.0:
        raise SingularChannelError(
            "effective transmittance is 1: the asymptotic key rate diverges (no side channel, lossless link)")


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in (0, 1], got {eta}")
    return eta


def vab_covariance(eff: EffectiveParams) -> GaussianState:
    """Entanglement-based Alice/Bob state after the thermal-loss channel."""
    _check_effective(eff)
    mu, eta, eps = eff.mu_eff, eff.eta_eff, eff.eps_eff
    a = mu + 1.0
    b = eta * (mu + eps) + 1.0
    c = math.sqrt(eta * mu * (mu + 2.0))
    cov = np.block([[a * IDENTITY_2, c * PAULI_Z], [c * PAULI_Z, b * IDENTITY_2]])
    return GaussianState(np.zeros(4), cov)


def asymptotic_eigenvalues(eff: EffectiveParams) -> Tuple[float, float, float]:
    """(v_AB1, v_AB2, v_A|beta) to leading order in mu'."""
    _check_effective(eff)
    mu, eta, eps = eff.mu_eff, eff.eta_eff, eff.eps_eff
    _require_lossy(eta)
    return 1.0 + eps * eta / (1.0 - eta), mu * (1.0 - eta), 2.0 / eta + eps - 1.0


def mutual_info_ab(eff: EffectiveParams, asymptotic: bool) -> float:
    """Alice-Bob mutual information in bits, both quadratures."""
    _check_effective(eff)
    mu, eta, eps = eff.mu_eff, eff.eta_eff, eff.eps_eff
    snr = eta * mu / (eta * eps + 2.0)
    if asymptotic:
        return math.log2(snr)
    return math.log1p(snr) / LN2


def holevo_eb(eff: EffectiveParams, asymptotic: bool) -> float:
    """Holevo bound between Eve and Bob's outcomes, in bits.

    Eve purifies rho_AB, so S(E) = S(AB) and S(E|beta) = S(A|beta).
    """
    _check_effective(eff)
    if asymptotic:
        v1, v2, v3 = asymptotic_eigenvalues(eff)
        return math.log2(math.e * v2 / 2.0) + entropy_g(v1) - entropy_g(v3)
    state = vab_covariance(eff)
    return entropy(state) - entropy(heterodyne_condition(state, 1))


def _breakdown(eff: EffectiveParams, asymptotic: bool) -> KeyRateBreakdown:
    i_ab = mutual_info_ab(eff, asymptotic)
    holevo = holevo_eb(eff, asymptotic)
    return KeyRateBreakdown(i_ab=i_ab, holevo_eb=holevo, rate=i_ab - holevo, effective=eff)


def key_rate_asymptotic(ch: ChannelParams, mu: float, sc: SideChannelParams) -> KeyRateBreakdown:
    """mu cancels from the rate; it only sets the scale of i_ab and holevo_eb."""
    if not mu > 0:
        raise InvalidArgumentError(f"mu must be > 0, got {mu}")
    eff = effective_params(mu, ch.eta, ch.eps, sc)
    _require_lossy(eff.eta_eff)
    return _breakdown(eff, asymptotic=True)


def key_rate_finite(ch: ChannelParams, mu: float, sc: SideChannelParams) -> KeyRateBreakdown:
    if not mu > 0:
        raise InvalidArgumentError(f"mu must be > 0, got {mu}")
    return _breakdown(effective_params(mu, ch.eta, ch.eps, sc), asymptotic=False)


def key_rate_lossy(eta: float, sc: SideChannelParams) -> float:
    """Asymptotic rate on a pure-loss channel: -log2(1 - eta')/eta' - log2 e."""
    eta = _check_eta(eta)
    eta_eff = effective_params(NOMINAL_MU, eta, 0.0, sc).eta_eff
    _require_lossy(eta_eff)
    return -math.log1p(-eta_eff) / (eta_eff * LN2) - LOG2_E


def key_rate_longdistance(eta: float, sc: SideChannelParams) -> float:
    """Small-eta slope of the lossy rate, eta / (4 (nbar + 1) ln 2); m = 1 only."""
    eta = _check_eta(eta)
    if sc.m != 1.0:
        raise InvalidArgumentError(f"the long-distance approximation is defined for m = 1, got m = {sc.m}")
    return eta / (4.0 * (sc.nbar + 1.0) * LN2)


def ideal_longdistance_rate(eta: float) -> float:
    """Small-eta rate with no side channel, eta / (2 ln 2)."""
    return _check_eta(eta) / (2.0 * LN2)


def plob_bound(eta: float) -> float:
    """Repeaterless secret-key capacity -log2(1 - eta)."""
    eta = float(eta)
    if eta >= 1.0:
        raise InfiniteCapacityError(f"the repeaterless capacity is unbounded at eta = {eta}")
    if not eta > 0:
        raise InvalidArgumentError(f"eta must lie in (0, 1), got {eta}")
    return -math.log1p(-eta) / LN2


def input_noise_variance(eta: float, eps: float) -> float:
    """Total noise referred to the channel input: 1 + (1 - eta)/eta + eps."""
    ch = ChannelParams(eta=eta, eps=eps)
    return 1.0 + (1.0 - ch.eta) / ch.eta + ch.eps


def bob_conditional_variance(eta: float, eps: float) -> float:
    ch = ChannelParams(eta=eta, eps=eps)
    return ch.eta * ch.eps + 1.0


def bob_variance(mu: float, eta: float, eps: float) -> float:
    if not mu >= 0:
        raise InvalidArgumentError(f"mu must be >= 0, got {mu}")
    ch = ChannelParams(eta=eta, eps=eps)
    return ch.eta * (mu + ch.eps) + 1.0


def entangling_cloner_variance(eff: EffectiveParams) -> float:
    """Variance of Eve's thermal input in the entangling-cloner picture."""
    _require_lossy(eff.eta_eff)
    eta, eps = eff.eta_eff, eff.eps_eff
    return (eta * eps - eta + 1.0) / (1.0 - eta)
