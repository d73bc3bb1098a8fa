"""
Multimode Gaussian states in shot-noise units (vacuum variance = 1).

Quadratures are ordered (x1, p1, x2, p2, ...) and the symplectic form is the
block-diagonal sum of [[0, 1], [-1, 0]]. Entropies are in bits.
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag

from .exceptions import InvalidArgumentError, NumericalError

SYMMETRY_RTOL = 1e-12
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10
ENTROPY_FLOOR = 1e-12
# multiples of eps * ||V|| lost when V itself is rounded to doubles
NORM_ROUNDING_FACTOR = 2.0

IDENTITY_2 = np.eye(2)
PAULI_Z = np.diag([1.0, -1.0])
_OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_form(num_modes: int) -> np.ndarray:
    return np.kron(np.eye(num_modes), _OMEGA_1)


def _check_num_modes(num_modes) -> int:
    if isinstance(num_modes, bool) or int(num_modes) != num_modes or num_modes < 1:
        raise InvalidArgumentError(f"num_modes must be a positive integer, got {num_modes}")
    return int(num_modes)


def _check_mode(mode, num_modes: int) -> int:
    if isinstance(mode, bool) or int(mode) != mode or not 0 <= mode < num_modes:
        raise InvalidArgumentError(f"mode {mode} out of range for {num_modes} modes")
    return int(mode)


def _check_mode_pair(modes: Sequence[int], total_modes: int) -> Tuple[int, int]:
    total_modes = _check_num_modes(total_modes)
    if len(modes) != 2:
        raise InvalidArgumentError(f"expected a pair of modes, got {modes}")
    i, j = (_check_mode(mode, total_modes) for mode in modes)
    if i == j:
        raise InvalidArgumentError(f"a two-mode gate needs distinct modes, got ({i}, {j})")
    return i, j


def _check_square_even(matrix: np.ndarray, what: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"{what} must be a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] == 0 or matrix.shape[0] % 2:
        raise InvalidArgumentError(f"{what} must have even, nonzero dimension, got {matrix.shape[0]}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError(f"{what} must be finite")


def _check_symmetric(cov: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
        raise InvalidArgumentError("covariance matrix is not symmetric")


def _mode_indices(modes: Sequence[int]) -> List[int]:
    return [q for mode in modes for q in (2 * mode, 2 * mode + 1)]


def physicality_tolerance(cov: np.ndarray) -> float:
    """How far below 1 a symplectic eigenvalue may sit and still count as 1."""
    return PHYSICALITY_TOL + NORM_ROUNDING_FACTOR * np.finfo(float).eps * float(np.linalg.norm(cov, 2))


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic spectrum of a positive-definite covariance matrix, descending.

    With V = L L^T, i L^T Omega L is Hermitian with eigenvalues +-nu. Values
    below 1 by at most physicality_tolerance(V) are reported as exactly 1.
    """
    cov = np.asarray(cov, dtype=float)
    _check_square_even(cov, "covariance")
    _check_symmetric(cov)
    num_modes = cov.shape[0] // 2
    try:
        lower = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError("covariance matrix is not positive definite") from exc
    spectrum = np.linalg.eigvalsh(1j * (lower.T @ symplectic_form(num_modes) @ lower))
    nu = spectrum[num_modes:][::-1].copy()
    nu[(nu < 1.0) & (nu >= 1.0 - physicality_tolerance(cov))] = 1.0
    return nu


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        _check_square_even(cov, "covariance")
        if mean.shape != (cov.shape[0],):
            raise InvalidArgumentError(
                f"mean has shape {mean.shape}, expected ({cov.shape[0]},)")
        if not np.all(np.isfinite(mean)):
            raise InvalidArgumentError("mean must be finite")
        nu = symplectic_eigenvalues(cov)
        if nu[-1] < 1.0:
            raise InvalidArgumentError(
                f"covariance violates the uncertainty principle (smallest symplectic eigenvalue {nu[-1]:.3e})")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def num_modes(self) -> int:
        return self.cov.shape[0] // 2


@dataclass(frozen=True, eq=False)
class SymplecticTransform:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        _check_square_even(matrix, "symplectic matrix")
        omega = symplectic_form(matrix.shape[0] // 2)
        scale = max(1.0, float(np.max(np.abs(matrix))) ** 2)
        if np.max(np.abs(matrix @ omega @ matrix.T - omega)) > SYMPLECTIC_TOL * scale:
            raise InvalidArgumentError("matrix does not preserve the symplectic form")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def num_modes(self) -> int:
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, num_modes: int) -> "SymplecticTransform":
        return cls(np.eye(2 * _check_num_modes(num_modes)))

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        """Composition: (self @ other) applies `other` first."""
        if self.matrix.shape != other.matrix.shape:
            raise InvalidArgumentError("cannot compose transforms acting on different mode counts")
        return SymplecticTransform(self.matrix @ other.matrix)

    def inverse(self) -> "SymplecticTransform":
        omega = symplectic_form(self.num_modes)
        return SymplecticTransform(-omega @ self.matrix.T @ omega)


def _two_mode_gate(diag_i: np.ndarray, off_ij: np.ndarray, off_ji: np.ndarray, diag_j: np.ndarray,
                   modes: Sequence[int], total_modes: int) -> SymplecticTransform:
    i, j = _check_mode_pair(modes, total_modes)
    matrix = np.eye(2 * int(total_modes))
    bi, bj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
    matrix[bi, bi] = diag_i
    matrix[bi, bj] = off_ij
    matrix[bj, bi] = off_ji
    matrix[bj, bj] = diag_j
    return SymplecticTransform(matrix)


def beamsplitter(theta: float, modes: Sequence[int], total_modes: int) -> SymplecticTransform:
    """[[cos t, sin t], [-sin t, cos t]] (x) 1 on the selected pair."""
    c, s = math.cos(theta), math.sin(theta)
    return _two_mode_gate(c * IDENTITY_2, s * IDENTITY_2, -s * IDENTITY_2, c * IDENTITY_2, modes, total_modes)


def two_mode_squeezer(r: float, modes: Sequence[int], total_modes: int) -> SymplecticTransform:
    """cosh r on the diagonal blocks, sinh r * Z off the diagonal."""
    ch, sh = math.cosh(r), math.sinh(r)
    return _two_mode_gate(ch * IDENTITY_2, sh * PAULI_Z, sh * PAULI_Z, ch * IDENTITY_2, modes, total_modes)


def vacuum(num_modes: int) -> GaussianState:
    num_modes = _check_num_modes(num_modes)
    return GaussianState(np.zeros(2 * num_modes), np.eye(2 * num_modes))


def thermal(variance: float) -> GaussianState:
    if variance < 1.0:
        raise InvalidArgumentError(f"thermal variance must be >= 1, got {variance}")
    return GaussianState(np.zeros(2), variance * IDENTITY_2)


def tmsv(r: float) -> GaussianState:
    if not math.isfinite(r):
        raise InvalidArgumentError(f"squeezing must be finite, got {r}")
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    cov = np.block([[c * IDENTITY_2, s * PAULI_Z], [s * PAULI_Z, c * IDENTITY_2]])
    return GaussianState(np.zeros(4), cov)


def displace(state: GaussianState, mode: int, alpha: Sequence[float]) -> GaussianState:
    mode = _check_mode(mode, state.num_modes)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (2,):
        raise InvalidArgumentError(f"displacement must be a real 2-vector, got shape {alpha.shape}")
    mean = state.mean.copy()
    mean[2 * mode:2 * mode + 2] += alpha
    return GaussianState(mean, state.cov)


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    return GaussianState(np.concatenate([a.mean, b.mean]), block_diag(a.cov, b.cov))


def apply(t: SymplecticTransform, state: GaussianState) -> GaussianState:
    if t.matrix.shape != state.cov.shape:
        raise InvalidArgumentError(
            f"transform acts on {t.num_modes} modes, state has {state.num_modes}")
    cov = t.matrix @ state.cov @ t.matrix.T
    return GaussianState(t.matrix @ state.mean, 0.5 * (cov + cov.T))


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state on `keep`, in the order given."""
    keep = list(keep)
    if not keep:
        raise InvalidArgumentError("partial_trace needs at least one mode to keep")
    keep = [_check_mode(mode, state.num_modes) for mode in keep]
    if len(set(keep)) != len(keep):
        raise InvalidArgumentError(f"duplicate modes in {keep}")
    idx = _mode_indices(keep)
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


def heterodyne_condition(state: GaussianState, measured_mode: int) -> GaussianState:
    """State of the other modes after heterodyning `measured_mode`.

    Only the conditional covariance A - C (B + 1)^-1 C^T is meaningful; the
    kept means are returned without the outcome-dependent shift.
    """
    if state.num_modes < 2:
        raise InvalidArgumentError("heterodyne conditioning needs at least two modes")
    measured_mode = _check_mode(measured_mode, state.num_modes)
    kept = [mode for mode in range(state.num_modes) if mode != measured_mode]
    k_idx, m_idx = _mode_indices(kept), _mode_indices([measured_mode])
    a = state.cov[np.ix_(k_idx, k_idx)]
    b = state.cov[np.ix_(m_idx, m_idx)]
    c = state.cov[np.ix_(k_idx, m_idx)]
    try:
        gain = np.linalg.solve(b + IDENTITY_2, c.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"heterodyne conditioning matrix is not invertible: {exc}") from exc
    cov = a - c @ gain
    return GaussianState(state.mean[k_idx], 0.5 * (cov + cov.T))


def entropy_g(x: float) -> float:
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue x."""
    x = float(x)
    if x < 1.0 - PHYSICALITY_TOL:
        raise InvalidArgumentError(f"symplectic eigenvalue must be >= 1, got {x}")
    if x <= 1.0 + ENTROPY_FLOOR:
        return 0.0
    a, b = (x + 1.0) / 2.0, (x - 1.0) / 2.0
    # a log2 a - b log2 b, rearranged to avoid cancellation at large x
    return math.log2(a) + b * math.log1p(1.0 / b) / math.log(2.0)


def entropy(state: GaussianState) -> float:
    return float(sum(entropy_g(nu) for nu in symplectic_eigenvalues(state.cov)))
