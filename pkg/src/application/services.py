import itertools
import sys
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src import __version__
from src.domain.entities import (
    ChannelEstimate,
    ChannelParams,
    ReductionReport,
    RunRecord,
    SessionSamples,
    SideChannelParams,
    SweepSpec,
)
from src.domain.exceptions import InfiniteCapacityError, InvalidArgumentError, SingularChannelError
from src.domain.keyrate import key_rate_asymptotic, key_rate_finite, plob_bound
from src.domain.reduction import k_factor, verify_reduction
from src.domain.simulation import ProtocolSimulator
from src.domain.threshold import FLAG_SINGULAR, db_to_eta, eta_to_db, threshold_curve
from src.infrastructure.config import Config

SWEEP_COLUMNS = ["eta", "eta_db", "nbar", "m", "eps", "rate", "plob", "k", "i_ab", "holevo", "flag"]
THRESHOLD_COLUMNS = ["eta_db", "eta", "nbar", "m", "eps_max", "flag"]
SAMPLE_COLUMNS = ["alpha_x", "alpha_p", "beta_x", "beta_p"]


def _debug(config: Config, message: str):
    if config.DEBUG_MODE:
        print(message, file=sys.stderr)


class AnalysisOrchestrator:
    def __init__(self, simulator: ProtocolSimulator, config: Config):
        self.simulator = simulator
        self.config = config

    def evaluate_rate(self, eta: float, eps: float, nbar: float, m: float,
                      mu: Optional[float] = None) -> RunRecord:
        """
        One key-rate evaluation:
        asymptotic (mu is None, i_ab/holevo reported at the nominal mu)
        or finite-modulation (numeric entropies at the given mu).
        """
        ch = ChannelParams(eta=eta, eps=eps)
        sc = SideChannelParams(nbar=nbar, m=m)
        if mu is None:
            mode = "asymptotic"
            breakdown = key_rate_asymptotic(ch, self.config.NOMINAL_MU, sc)
        else:
            mode = "finite"
            breakdown = key_rate_finite(ch, float(mu), sc)

        try:
            plob = plob_bound(ch.eta)
        except InfiniteCapacityError:
            plob = None

        eff = breakdown.effective
        return RunRecord(
            mode=mode,
            eta=ch.eta,
            eta_db=eta_to_db(ch.eta),
            eps=ch.eps,
            nbar=sc.nbar,
            m=sc.m,
            mu=None if mu is None else float(mu),
            rate=breakdown.rate,
            i_ab=breakdown.i_ab,
            holevo=breakdown.holevo_eb,
            k=eff.k,
            mu_eff=eff.mu_eff,
            eta_eff=eff.eta_eff,
            eps_eff=eff.eps_eff,
            plob=plob,
            tool_version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )

    def sweep(self, spec: SweepSpec, fixed: Dict[str, Sequence[Optional[float]]]) -> pd.DataFrame:
        """
        Rate table over `spec`'s grid, once per combination of the fixed
        parameter lists (family-major: the grid varies fastest).
        `fixed` maps eta, eps, nbar, m, mu to lists; mu = [None] means asymptotic.
        """
        grid = spec.grid()
        swept = "eta" if spec.variable == "eta_db" else spec.variable
        if swept != "eta" and not fixed.get("eta"):
            raise InvalidArgumentError("sweep needs --eta or --eta-db unless eta itself is swept")

        defaults = {
            "eta": [None],
            "eps": [self.config.DEFAULT_EPS],
            "nbar": [self.config.DEFAULT_NBAR],
            "m": [self.config.DEFAULT_M],
            "mu": [None],
        }
        names = [name for name in defaults if name != swept]
        families = list(itertools.product(*(fixed.get(name) or defaults[name] for name in names)))
        _debug(self.config, f"📈 Sweeping {spec.variable} over {len(grid)} points x {len(families)} families")

        rows = []
        for family in families:
            params = dict(zip(names, family))
            for value in grid:
                params[swept] = db_to_eta(value) if spec.variable == "eta_db" else float(value)
                try:
                    record = self.evaluate_rate(
                        eta=params["eta"],
                        eps=params["eps"],
                        nbar=params["nbar"],
                        m=params["m"],
                        mu=params["mu"],
                    )
                except SingularChannelError:
                    rows.append(self._singular_row(params))
                    continue
                rows.append({
                    "eta": record.eta,
                    "eta_db": record.eta_db,
                    "nbar": record.nbar,
                    "m": record.m,
                    "eps": record.eps,
                    "rate": record.rate,
                    "plob": record.plob,
                    "k": record.k,
                    "i_ab": record.i_ab,
                    "holevo": record.holevo,
                    "flag": "",
                })
        return pd.DataFrame(rows, columns=SWEEP_COLUMNS)

    @staticmethod
    def _singular_row(params: Dict[str, Optional[float]]) -> Dict[str, Any]:
        """Sweep row for a point where the asymptotic rate diverges (eta' = 1)."""
        ch = ChannelParams(eta=params["eta"], eps=params["eps"])
        sc = SideChannelParams(nbar=params["nbar"], m=params["m"])
        print(f"⚠️ {FLAG_SINGULAR} at eta={ch.eta:g} (nbar={sc.nbar:g}, m={sc.m:g})", file=sys.stderr)
        return {
            "eta": ch.eta,
            "eta_db": eta_to_db(ch.eta),
            "nbar": sc.nbar,
            "m": sc.m,
            "eps": ch.eps,
            "rate": None,
            "plob": None,
            "k": k_factor(sc),
            "i_ab": None,
            "holevo": None,
            "flag": FLAG_SINGULAR,
        }

    def threshold_table(self, db_grid: Sequence[float], nbars: Sequence[float], ms: Sequence[float],
                        tol: float) -> pd.DataFrame:
        etas = [db_to_eta(db) for db in db_grid]
        rows = []
        for nbar, m in itertools.product(nbars, ms):
            sc = SideChannelParams(nbar=nbar, m=m)
            _debug(self.config, f"🎯 Threshold curve nbar={sc.nbar:g} m={sc.m:g} ({len(etas)} points)")
            for point in threshold_curve(etas, sc, tol, self.config.MAX_DOUBLINGS):
                if point.flag:
                    print(f"⚠️ {point.flag} at {point.eta_db:g} dB (nbar={sc.nbar:g}, m={sc.m:g})", file=sys.stderr)
                rows.append({
                    "eta_db": point.eta_db,
                    "eta": point.eta,
                    "nbar": sc.nbar,
                    "m": sc.m,
                    "eps_max": point.eps_max,
                    "flag": point.flag or "",
                })
        return pd.DataFrame(rows, columns=THRESHOLD_COLUMNS)

    def verify(self, mus: Sequence[float], nbars: Sequence[float], ms: Sequence[float],
               alpha: Tuple[float, float], tol: float) -> List[ReductionReport]:
        reports = []
        for mu, nbar, m in itertools.product(mus, nbars, ms):
            reports.append(verify_reduction(mu, SideChannelParams(nbar=nbar, m=m), alpha, tol))
        failed = sum(not report.passed for report in reports)
        _debug(self.config, f"🔍 Verified {len(reports)} reduction cases, {failed} failed")
        return reports

    def simulate(self, mu: float, eta: float, eps: float, samples: int, seed: int,
                 nbar: float, m: float) -> Tuple[ChannelEstimate, SessionSamples, Dict[str, float]]:
        """
        Run a session, estimate the channel and compare the finite key rate
        from the estimates against the true one.
        """
        ch = ChannelParams(eta=eta, eps=eps)
        sc = SideChannelParams(nbar=nbar, m=m)
        session = self.simulator.sample_session(mu, ch, samples, seed)
        estimate = self.simulator.estimate_channel(session, mu)

        # estimates may stray just outside the physical range
        estimated_ch = ChannelParams(eta=min(estimate.eta_hat, 1.0), eps=max(estimate.eps_hat, 0.0))
        rates = {
            "rate_estimated": key_rate_finite(estimated_ch, mu, sc).rate,
            "rate_true": key_rate_finite(ch, mu, sc).rate,
        }
        _debug(self.config, f"🎲 Simulated {len(session)} rounds (seed {seed})")
        return estimate, session, rates

    @staticmethod
    def samples_table(session: SessionSamples) -> pd.DataFrame:
        return pd.DataFrame({
            "alpha_x": session.alpha[:, 0],
            "alpha_p": session.alpha[:, 1],
            "beta_x": session.beta[:, 0],
            "beta_p": session.beta[:, 1],
        }, columns=SAMPLE_COLUMNS)
