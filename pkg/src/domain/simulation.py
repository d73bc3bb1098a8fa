import math
from typing import Callable

import numpy as np

from .entities import ChannelEstimate, ChannelParams, SessionSamples
from .exceptions import EstimationError, InvalidArgumentError
from .interfaces import INormalSource

MIN_ESTIMATION_SAMPLES = 100
# declared vs sampled modulation variance, in standard errors
MODULATION_MISMATCH_SIGMAS = 6.0


class ProtocolSimulator:
    """
    Prepare-and-measure rounds of the Gaussian-modulated coherent-state
    protocol, plus the parameter estimation Alice and Bob run on them.

    Only the Alice -> Bob statistics are generated. Eve's tap does not change
    them, so the side channel never enters here.
    """

    def __init__(self, source_factory: Callable[[int], INormalSource]):
        self.source_factory = source_factory

    def sample_session(self, mu: float, ch: ChannelParams, n: int, seed: int) -> SessionSamples:
        """
        Per quadrature: alpha ~ N(0, mu/2) and
        beta = sqrt(eta) alpha + N(0, (eta eps + 2)/2).

        Each round consumes four normals in the order
        (alpha_x, alpha_p, noise_x, noise_p).
        """
        if not mu > 0:
            raise InvalidArgumentError(f"mu must be > 0, got {mu}")
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise InvalidArgumentError(f"sample count must be a positive integer, got {n}")
        n = int(n)

        z = self.source_factory(seed).standard_normal(4 * n).reshape(n, 4)
        alpha = math.sqrt(mu / 2.0) * z[:, :2]
        noise_sd = math.sqrt((ch.eta * ch.eps + 2.0) / 2.0)
        beta = math.sqrt(ch.eta) * alpha + noise_sd * z[:, 2:]
        return SessionSamples(alpha, beta)

    def estimate_channel(self, samples: SessionSamples, mu: float) -> ChannelEstimate:
        """
        Linear-regression estimate of (eta, eps) and the Gaussian mutual
        information, pooling both quadratures.
        """
        n = len(samples)
        if n < MIN_ESTIMATION_SAMPLES:
            raise InvalidArgumentError(
                f"at least {MIN_ESTIMATION_SAMPLES} samples are needed for estimation, got {n}")
        if not mu > 0:
            raise InvalidArgumentError(f"mu must be > 0, got {mu}")

        a = samples.alpha.ravel()
        b = samples.beta.ravel()
        pooled = a.size

        # zero-mean model: second moments about the origin
        var_a = float(np.mean(a * a))
        var_b = float(np.mean(b * b))
        cov_ab = float(np.mean(a * b))
        if var_a <= 0 or var_b <= 0:
            raise EstimationError("sample variance vanished")

        expected_var_a = mu / 2.0
        if abs(var_a - expected_var_a) > MODULATION_MISMATCH_SIGMAS * expected_var_a * math.sqrt(2.0 / pooled):
            raise EstimationError(
                f"sampled modulation variance {var_a:.6g} does not match mu/2 = {expected_var_a:.6g}")

        slope = cov_ab / var_a
        residual = var_b - cov_ab * slope
        eta_hat = slope * slope
        if residual <= 0 or eta_hat <= 0:
            raise EstimationError("samples are degenerate: no residual noise or no correlation")

        eps_hat = (2.0 * residual - 2.0) / eta_hat
        i_ab_hat = math.log2(var_b / residual)

        se_slope = math.sqrt(residual / (pooled * var_a))
        eta_se = 2.0 * abs(slope) * se_slope
        se_residual = residual * math.sqrt(2.0 / (pooled - 2))
        eps_se = math.hypot(2.0 / eta_hat * se_residual, eps_hat / eta_hat * eta_se)
        rho = cov_ab / math.sqrt(var_a * var_b)
        i_ab_se = 2.0 * abs(rho) / (math.sqrt(pooled) * math.log(2.0))

        return ChannelEstimate(
            eta_hat=eta_hat,
            eps_hat=eps_hat,
            i_ab_hat=i_ab_hat,
            sample_count=n,
            eta_se=eta_se,
            eps_se=eps_se,
            i_ab_se=i_ab_se,
        )
