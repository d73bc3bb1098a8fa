import math
import sys
from functools import wraps
from typing import Any, Dict, List, Optional

import fire

from src.application.services import AnalysisOrchestrator
from src.domain.entities import SweepSpec
from src.domain.exceptions import (
    EstimationError,
    InvalidArgumentError,
    NoThresholdError,
    NumericalError,
    SingularChannelError,
)
from src.domain.simulation import ProtocolSimulator
from src.domain.threshold import db_to_eta
from src.infrastructure.config import Config
from src.infrastructure.monitoring import monitor
from src.infrastructure.rng import PhiloxNormalSource
from src.infrastructure.writers import CsvTableWriter, JsonRecordWriter

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

# fire reserves a bare "-" as its command separator
STDOUT_TARGETS = ("stdout",)

# Keys whose config-file values stay strings
_STRING_KEYS = {"variable", "scale", "dump_samples"}


def _parse_text(text: str) -> Any:
    """Config-file value -> float, tuple of floats or string, the way flags are read."""
    if "," in text:
        return tuple(_parse_number(part, text) for part in text.split(",") if part.strip())
    try:
        return float(text)
    except ValueError:
        return text


def _parse_number(part: str, whole: str) -> float:
    try:
        return float(part)
    except ValueError:
        raise InvalidArgumentError(f"not a number list: {whole!r}")


def _as_floats(value: Any, name: str) -> List[float]:
    """Flag value (number, '0,1,3', tuple or list) -> list of floats."""
    if isinstance(value, str):
        value = _parse_text(value)
    items = value if isinstance(value, (list, tuple)) else [value]
    result = []
    for item in items:
        if isinstance(item, bool):
            raise InvalidArgumentError(f"--{name} expects numbers, got {value!r}")
        try:
            number = float(item)
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"--{name} expects numbers, got {value!r}")
        if not math.isfinite(number):
            raise InvalidArgumentError(f"--{name} must be finite, got {item!r}")
        result.append(number)
    if not result:
        raise InvalidArgumentError(f"--{name} is empty")
    return result


def _as_float(value: Any, name: str) -> float:
    values = _as_floats(value, name)
    if len(values) != 1:
        raise InvalidArgumentError(f"--{name} takes a single value, got {value!r}")
    return values[0]


def _as_int(value: Any, name: str) -> int:
    number = _as_float(value, name)
    if number != int(number):
        raise InvalidArgumentError(f"--{name} must be an integer, got {value!r}")
    return int(number)


def _optional_floats(value: Any, name: str) -> Optional[List[float]]:
    return None if value is None else _as_floats(value, name)


USAGE_ERRORS = (InvalidArgumentError, EstimationError)
DOMAIN_ERRORS = (SingularChannelError, NoThresholdError, NumericalError)


def _command(func):
    """Times the command and turns library errors into exit codes."""
    timed = monitor.time_function(func)

    @wraps(func)
    def wrapper(self, *args, **kwargs):
        try:
            code = timed(self, *args, **kwargs)
        except USAGE_ERRORS as e:
            print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
            code = EXIT_USAGE
        except DOMAIN_ERRORS as e:
            print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
            code = EXIT_DOMAIN
        if Config.DEBUG_MODE:
            print(f"⏱️ {monitor.get_system_stats()}", file=sys.stderr)
        if code:
            raise SystemExit(code)
        return None
    return wrapper


class QkdCommands:
    """Trojan-horse CV-QKD analysis: key rates, sweeps, thresholds, reduction checks, simulation."""

    def __init__(self):
        self._config = Config
        self._orchestrator = AnalysisOrchestrator(
            simulator=ProtocolSimulator(source_factory=PhiloxNormalSource),
            config=self._config,
        )

    def _resolve(self, config: Optional[str], flags: Dict[str, Any]) -> Dict[str, Any]:
        """flag > config file > None (the caller applies Config defaults)."""
        if config is None:
            return flags
        from_file = self._config.load_file(str(config), allowed=set(flags))
        merged = dict(flags)
        for key, text in from_file.items():
            if merged.get(key) is None:
                merged[key] = text if key in _STRING_KEYS else _parse_text(text)
        return merged

    @staticmethod
    def _eta_values(opts: Dict[str, Any]) -> Optional[List[float]]:
        if opts.get("eta") is not None and opts.get("eta_db") is not None:
            raise InvalidArgumentError("--eta and --eta-db are mutually exclusive")
        if opts.get("eta_db") is not None:
            return [db_to_eta(db) for db in _as_floats(opts["eta_db"], "eta-db")]
        return _optional_floats(opts.get("eta"), "eta")

    @_command
    def rate(self, eta=None, eta_db=None, eps=None, nbar=None, m=None, mu=None, config=None):
        """Key rate at one operating point. Without --mu the asymptotic rate is reported."""
        opts = self._resolve(config, dict(eta=eta, eta_db=eta_db, eps=eps, nbar=nbar, m=m, mu=mu))
        etas = self._eta_values(opts)
        if etas is None:
            raise InvalidArgumentError("one of --eta or --eta-db is required")
        record = self._orchestrator.evaluate_rate(
            eta=_as_float(etas, "eta"),
            eps=self._scalar(opts, "eps", self._config.DEFAULT_EPS),
            nbar=self._scalar(opts, "nbar", self._config.DEFAULT_NBAR),
            m=self._scalar(opts, "m", self._config.DEFAULT_M),
            mu=None if opts.get("mu") is None else _as_float(opts["mu"], "mu"),
        )
        JsonRecordWriter().write_record(record.to_dict())
        return EXIT_OK

    @_command
    def sweep(self, variable=None, start=None, stop=None, steps=None, scale=None,
              eta=None, eta_db=None, eps=None, nbar=None, m=None, mu=None, config=None):
        """Rate table over a grid of one parameter; fixed parameters may be comma-separated lists."""
        opts = self._resolve(config, dict(
            variable=variable, start=start, stop=stop, steps=steps, scale=scale,
            eta=eta, eta_db=eta_db, eps=eps, nbar=nbar, m=m, mu=mu))
        for required in ("variable", "start", "stop", "steps"):
            if opts.get(required) is None:
                raise InvalidArgumentError(f"--{required} is required")
        spec = SweepSpec(
            variable=str(opts["variable"]),
            start=_as_float(opts["start"], "start"),
            stop=_as_float(opts["stop"], "stop"),
            steps=_as_int(opts["steps"], "steps"),
            scale=str(opts.get("scale") or "linear"),
        )
        fixed = {
            "eta": self._eta_values(opts),
            "eps": _optional_floats(opts.get("eps"), "eps"),
            "nbar": _optional_floats(opts.get("nbar"), "nbar"),
            "m": _optional_floats(opts.get("m"), "m"),
            "mu": _optional_floats(opts.get("mu"), "mu"),
        }
        table = self._orchestrator.sweep(spec, fixed)
        CsvTableWriter(float_format=self._config.FLOAT_FORMAT).write_table(table)
        return EXIT_OK

    @_command
    def threshold(self, db_start=None, db_stop=None, steps=None, nbar=None, m=None, tol=None, config=None):
        """Maximal tolerable excess noise over a linear grid of channel loss in dB."""
        opts = self._resolve(config, dict(db_start=db_start, db_stop=db_stop, steps=steps, nbar=nbar, m=m, tol=tol))
        spec = SweepSpec(
            variable="eta_db",
            start=self._scalar(opts, "db_start", self._config.THRESHOLD_DB_START),
            stop=self._scalar(opts, "db_stop", self._config.THRESHOLD_DB_STOP),
            steps=_as_int(opts["steps"], "steps") if opts.get("steps") is not None else self._config.THRESHOLD_STEPS,
        )
        table = self._orchestrator.threshold_table(
            db_grid=spec.grid(),
            nbars=_optional_floats(opts.get("nbar"), "nbar") or [self._config.DEFAULT_NBAR],
            ms=_optional_floats(opts.get("m"), "m") or [self._config.DEFAULT_M],
            tol=self._scalar(opts, "tol", self._config.THRESHOLD_TOL),
        )
        CsvTableWriter(float_format=self._config.FLOAT_FORMAT).write_table(table)
        return EXIT_OK

    @_command
    def verify(self, mu=None, nbar=None, m=None, alpha=None, tol=None, config=None):
        """Check the reduction circuit against its closed forms; exit 1 on any deviation >= tol."""
        opts = self._resolve(config, dict(mu=mu, nbar=nbar, m=m, alpha=alpha, tol=tol))
        alpha_values = _as_floats(opts["alpha"], "alpha") if opts.get("alpha") is not None \
            else list(self._config.VERIFY_ALPHA)
        if len(alpha_values) != 2:
            raise InvalidArgumentError(f"--alpha takes two values ax,ap, got {alpha_values}")
        reports = self._orchestrator.verify(
            mus=_optional_floats(opts.get("mu"), "mu") or list(self._config.VERIFY_MU),
            nbars=_optional_floats(opts.get("nbar"), "nbar") or list(self._config.VERIFY_NBAR),
            ms=_optional_floats(opts.get("m"), "m") or list(self._config.VERIFY_M),
            alpha=(alpha_values[0], alpha_values[1]),
            tol=self._scalar(opts, "tol", self._config.VERIFY_TOL),
        )
        for report in reports:
            print(f"mu={report.mu:g} nbar={report.sc.nbar:g} m={report.sc.m:g} "
                  f"alpha=({report.alpha[0]:g}, {report.alpha[1]:g})")
            print(f"  theta1={report.theta1:.15g} r2={report.r2:.15g} r3={report.r3:.15g}")
            for stage in report.stages:
                print(f"  stage {stage.stage}: mean|alpha={stage.mean_cond:.3e} "
                      f"cov|alpha={stage.cov_cond:.3e} cov={stage.cov_avg:.3e}")
            status = "PASS" if report.passed else "FAIL"
            print(f"  max deviation {report.max_deviation:.3e} (tol {report.tolerance:g}) {status}")

        failed = [report for report in reports if not report.passed]
        print(f"{len(reports) - len(failed)}/{len(reports)} cases passed")
        if failed:
            print(f"❌ {len(failed)} reduction case(s) exceeded the tolerance", file=sys.stderr)
            return EXIT_VERIFY_FAILED
        return EXIT_OK

    @_command
    def simulate(self, mu=None, eta=None, eps=None, samples=None, seed=None, nbar=None, m=None,
                 dump_samples=None, config=None):
        """Monte Carlo session plus channel estimation; --dump-samples PATH (or stdout) writes the raw rounds."""
        opts = self._resolve(config, dict(mu=mu, eta=eta, eps=eps, samples=samples, seed=seed,
                                          nbar=nbar, m=m, dump_samples=dump_samples))
        for required in ("mu", "eta"):
            if opts.get(required) is None:
                raise InvalidArgumentError(f"--{required} is required")
        mu_value = _as_float(opts["mu"], "mu")
        seed_value = _as_int(opts["seed"], "seed") if opts.get("seed") is not None else self._config.DEFAULT_SEED
        sample_count = _as_int(opts["samples"], "samples") if opts.get("samples") is not None \
            else self._config.DEFAULT_SAMPLES

        estimate, session, rates = self._orchestrator.simulate(
            mu=mu_value,
            eta=_as_float(opts["eta"], "eta"),
            eps=self._scalar(opts, "eps", self._config.DEFAULT_EPS),
            samples=sample_count,
            seed=seed_value,
            nbar=self._scalar(opts, "nbar", self._config.DEFAULT_NBAR),
            m=self._scalar(opts, "m", self._config.DEFAULT_M),
        )
        payload = {
            "mu": mu_value,
            "seed": seed_value,
            "eta_hat": estimate.eta_hat,
            "eps_hat": estimate.eps_hat,
            "i_ab_hat": estimate.i_ab_hat,
            "sample_count": estimate.sample_count,
            "eta_se": estimate.eta_se,
            "eps_se": estimate.eps_se,
            "i_ab_se": estimate.i_ab_se,
            **rates,
        }

        dump = opts.get("dump_samples")
        json_stream = sys.stdout
        if dump is not None:
            dump = str(dump)
            table = self._orchestrator.samples_table(session)
            if dump in STDOUT_TARGETS:
                CsvTableWriter(float_format=self._config.FLOAT_FORMAT).write_table(table)
                json_stream = sys.stderr
            else:
                CsvTableWriter(target=dump, float_format=self._config.FLOAT_FORMAT).write_table(table)
        JsonRecordWriter(stream=json_stream).write_record(payload)
        return EXIT_OK

    @staticmethod
    def _scalar(opts: Dict[str, Any], key: str, default: float) -> float:
        value = opts.get(key)
        return default if value is None else _as_float(value, key.replace("_", "-"))


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    try:
        fire.Fire(QkdCommands, command=argv, name="qkd-trojan")
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return EXIT_OK
