import json

import numpy as np
import pytest

from src.application.services import AnalysisOrchestrator
from src.domain.entities import SideChannelParams
from src.domain.simulation import ProtocolSimulator
from src.infrastructure.config import Config
from src.infrastructure.monitoring import monitor
from src.infrastructure.rng import PhiloxNormalSource
from src.presentation.cli.app import main

NO_SIDE_CHANNEL = SideChannelParams(nbar=0.0, m=0.0)
LEAKAGE = SideChannelParams(nbar=0.0, m=1.0)


@pytest.fixture
def simulator():
    return ProtocolSimulator(source_factory=PhiloxNormalSource)


@pytest.fixture
def orchestrator(simulator):
    return AnalysisOrchestrator(simulator=simulator, config=Config)


@pytest.fixture(autouse=True)
def fresh_monitor():
    monitor.reset()
    yield
    monitor.reset()


@pytest.fixture
def run_cli(capsys):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    def _run(*argv):
        code = main([str(arg) for arg in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return _run


@pytest.fixture
def run_cli_json(run_cli):
    def _run(*argv):
        code, out, err = run_cli(*argv)
        assert code == 0, err
        return json.loads(out)
    return _run


def symplectic_check(matrix: np.ndarray) -> float:
    n = matrix.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return float(np.max(np.abs(matrix @ omega @ matrix.T - omega)))
