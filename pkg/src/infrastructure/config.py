import os
from typing import Dict, Optional

try:
    from dotenv import dotenv_values, load_dotenv
    load_dotenv()
except ImportError:
    dotenv_values = None

from src.domain.exceptions import InvalidArgumentError
from src.domain.keyrate import NOMINAL_MU
from src.domain.reduction import DEFAULT_VERIFY_TOL
from src.domain.threshold import DEFAULT_TOL, MAX_DOUBLINGS


class Config:
    # Side channel / channel defaults
    DEFAULT_EPS = 0.0
    DEFAULT_NBAR = 0.0
    DEFAULT_M = 1.0

    # Asymptotic mode evaluates i_ab and holevo at this modulation (mu cancels in the rate)
    NOMINAL_MU = NOMINAL_MU

    # Solvers
    THRESHOLD_TOL = DEFAULT_TOL
    VERIFY_TOL = DEFAULT_VERIFY_TOL
    MAX_DOUBLINGS = MAX_DOUBLINGS

    # Threshold grid (channel loss in dB)
    THRESHOLD_DB_START = 0.5
    THRESHOLD_DB_STOP = 30.0
    THRESHOLD_STEPS = 60

    # Reduction verification grid
    VERIFY_MU = (0.0, 1.0, 10.0)
    VERIFY_NBAR = (0.0, 0.5, 2.0)
    VERIFY_M = (0.5, 1.0, 2.0)
    VERIFY_ALPHA = (1.0, 0.3)

    # Simulation
    DEFAULT_SAMPLES = 100000
    DEFAULT_SEED = 0

    # Output
    FLOAT_FORMAT = os.environ.get("QKD_FLOAT_FORMAT", "%.15g")

    DEBUG_MODE = os.environ.get("QKD_DEBUG", "false").lower() == "true"

    @classmethod
    def as_dict(cls):
        return {k: v for k, v in cls.__dict__.items() if k.isupper() and not callable(v)}

    @staticmethod
    def load_file(path: str, allowed: Optional[set] = None) -> Dict[str, str]:
        """
        Read a flat key=value file (# comments, blank lines ignored).
        Keys are normalised to snake_case; unknown keys are rejected when
        `allowed` is given. Values stay strings, the caller coerces them.
        """
        if dotenv_values is None:
            raise InvalidArgumentError("python-dotenv is required to read --config files")
        if not os.path.isfile(path):
            raise InvalidArgumentError(f"config file not found: {path}")

        values = {}
        for key, value in dotenv_values(path).items():
            name = key.strip().replace("-", "_").lower()
            if value is None:
                raise InvalidArgumentError(f"config key '{key}' has no value")
            values[name] = value.strip()

        if allowed is not None:
            unknown = sorted(set(values) - set(allowed))
            if unknown:
                raise InvalidArgumentError(f"unknown config keys: {', '.join(unknown)}")
        return values
