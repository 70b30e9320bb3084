"""
Dense complex linear algebra over truncated tensor-product Hilbert spaces.

Every Hamiltonian is carried in angular-frequency units (H/ħ, rad/s), so a
propagator is exp(-i h t).  The basis order is spin ⊗ axial ⊗ cyclotron ⊗
magnetron with spin index 0 = ↑ and 1 = ↓.
"""

import logging
import math
import typing as t
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as la

from . import constants
from .errors import ContractViolationError, InvalidDimensionError, TruncationWarning
from .types import ComplexArray, HamiltonianBuilder, RealArray

log = logging.getLogger("geoniumlogger")


class Mode(str, Enum):
    SPIN = "spin"
    AXIAL = "axial"
    CYCLOTRON = "cyclotron"
    MAGNETRON = "magnetron"


MODE_ORDER = (Mode.SPIN, Mode.AXIAL, Mode.CYCLOTRON, Mode.MAGNETRON)

SPIN_UP = 0
SPIN_DOWN = 1

# Spin matrices in the (↑, ↓) basis; σ₊ = |↑><↓|.
SIGMA_X: ComplexArray = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y: ComplexArray = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z: ComplexArray = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS: ComplexArray = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS: ComplexArray = np.array([[0, 0], [1, 0]], dtype=complex)


def _frozen(array: t.Any) -> ComplexArray:
    result = np.array(array, dtype=complex)
    result.flags.writeable = False
    return result


def is_hermitian(matrix: ComplexArray, tol: float = constants.HERMITIAN_TOL) -> bool:
    """
    Relative hermiticity test: max|M - M^H| <= tol * max(1, max|M|).
    """
    if matrix.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(matrix))))
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= tol * scale)


@dataclass(frozen=True)
class HilbertSpec:
    """
    Which modes are present and where each one is truncated.  A mode of
    dimension 1 is frozen in its ground state.
    """

    axial_dim: int = constants.DEFAULT_AXIAL_DIM
    cyclotron_dim: int = constants.DEFAULT_CYCLOTRON_DIM
    magnetron_dim: int = 1
    spin_dim: int = 2

    def __post_init__(self) -> None:
        if self.spin_dim != 2:
            raise InvalidDimensionError(f"spin_dim must be 2, not {self.spin_dim}")
        if self.axial_dim < 2:
            raise InvalidDimensionError(
                f"axial_dim must be at least 2, not {self.axial_dim}"
            )
        if self.cyclotron_dim < 1 or self.magnetron_dim < 1:
            raise InvalidDimensionError(
                "cyclotron_dim and magnetron_dim must be at least 1"
            )

    @property
    def dims(self) -> t.Tuple[int, int, int, int]:
        return (self.spin_dim, self.axial_dim, self.cyclotron_dim, self.magnetron_dim)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def mode_dim(self, mode: t.Union[Mode, str]) -> int:
        return self.dims[MODE_ORDER.index(Mode(mode))]

    def index(self, spin: int, n_z: int = 0, n_c: int = 0, n_m: int = 0) -> int:
        """
        Flat index of |spin, n_z, n_c, n_m>.
        """
        levels = (spin, n_z, n_c, n_m)
        for level, size, mode in zip(levels, self.dims, MODE_ORDER):
            if not 0 <= level < size:
                raise InvalidDimensionError(
                    f"{mode.value} level {level} is outside 0..{size - 1}"
                )
        return int(np.ravel_multi_index(levels, self.dims))

    def basis_state(
        self, spin: int, n_z: int = 0, n_c: int = 0, n_m: int = 0
    ) -> "StateVector":
        amplitudes = np.zeros(self.dim, dtype=complex)
        amplitudes[self.index(spin, n_z, n_c, n_m)] = 1.0
        return StateVector(self, amplitudes)


@dataclass(frozen=True, eq=False)
class StateVector:
    spec: HilbertSpec
    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        amplitudes = _frozen(self.amplitudes).reshape(-1)
        if amplitudes.shape[0] != self.spec.dim:
            raise InvalidDimensionError(
                f"state has {amplitudes.shape[0]} amplitudes, spec needs {self.spec.dim}"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        norm = self.norm()
        if norm == 0:
            raise ContractViolationError("cannot normalize the zero vector")
        return StateVector(self.spec, self.amplitudes / norm)

    def tensor(self) -> ComplexArray:
        """
        Amplitudes reshaped to (spin, axial, cyclotron, magnetron).
        """
        return self.amplitudes.reshape(self.spec.dims)

    def populations(self, mode: t.Union[Mode, str]) -> RealArray:
        """
        Marginal level populations of one mode.
        """
        axis = MODE_ORDER.index(Mode(mode))
        probabilities = np.abs(self.tensor()) ** 2
        others = tuple(i for i in range(len(MODE_ORDER)) if i != axis)
        return np.asarray(probabilities.sum(axis=others), dtype=float)

    def amplitude(self, spin: int, n_z: int = 0, n_c: int = 0, n_m: int = 0) -> complex:
        return complex(self.amplitudes[self.spec.index(spin, n_z, n_c, n_m)])


@dataclass(frozen=True, eq=False)
class Operator:
    spec: HilbertSpec
    matrix: ComplexArray
    hermitian_hint: bool = False

    def __post_init__(self) -> None:
        matrix = _frozen(self.matrix)
        if matrix.shape != (self.spec.dim, self.spec.dim):
            raise InvalidDimensionError(
                f"operator shape {matrix.shape} does not match dimension {self.spec.dim}"
            )
        if self.hermitian_hint and not is_hermitian(matrix):
            raise ContractViolationError("operator flagged hermitian is not hermitian")
        object.__setattr__(self, "matrix", matrix)

    def _check(self, other: "Operator") -> None:
        if other.spec != self.spec:
            raise InvalidDimensionError("operators live on different Hilbert spaces")

    def dagger(self) -> "Operator":
        return Operator(self.spec, self.matrix.conj().T, self.hermitian_hint)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(
            self.spec,
            self.matrix + other.matrix,
            self.hermitian_hint and other.hermitian_hint,
        )

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(
            self.spec,
            self.matrix - other.matrix,
            self.hermitian_hint and other.hermitian_hint,
        )

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(
            self.spec,
            scalar * self.matrix,
            self.hermitian_hint and complex(scalar).imag == 0,
        )

    __rmul__ = __mul__

    @t.overload
    def __matmul__(self, other: "Operator") -> "Operator": ...

    @t.overload
    def __matmul__(self, other: StateVector) -> StateVector: ...

    def __matmul__(
        self, other: t.Union["Operator", StateVector]
    ) -> t.Union["Operator", StateVector]:
        if other.spec != self.spec:
            raise InvalidDimensionError("operands live on different Hilbert spaces")
        if isinstance(other, StateVector):
            return StateVector(self.spec, self.matrix @ other.amplitudes)
        return Operator(self.spec, self.matrix @ other.matrix)

    def commutator(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(
            self.spec, self.matrix @ other.matrix - other.matrix @ self.matrix
        )


def lowering_block(dim: int) -> ComplexArray:
    # A frozen mode has the 1x1 zero lowering operator.
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def ladder(dim: int) -> t.Tuple[ComplexArray, ComplexArray]:
    """
    Truncated annihilation and creation operators on `dim` Fock levels.
    """
    if dim < 2:
        raise InvalidDimensionError(f"ladder operators need dim >= 2, not {dim}")
    lowering = lowering_block(dim)
    return lowering, lowering.conj().T


def number_block(dim: int) -> ComplexArray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def embed_many(
    blocks: t.Mapping[t.Union[Mode, str], ComplexArray], spec: HilbertSpec
) -> Operator:
    """
    Kronecker product of per-mode blocks in mode order, identity on the
    modes not named.
    """
    named = {Mode(mode): np.asarray(block, dtype=complex) for mode, block in blocks.items()}
    matrix = np.ones((1, 1), dtype=complex)
    for mode, size in zip(MODE_ORDER, spec.dims):
        block = named.get(mode)
        if block is None:
            block = np.eye(size, dtype=complex)
        elif block.shape != (size, size):
            raise InvalidDimensionError(
                f"{mode.value} block has shape {block.shape}, spec needs ({size}, {size})"
            )
        matrix = np.kron(matrix, block)
    return Operator(
        spec,
        matrix,
        hermitian_hint=all(is_hermitian(block) for block in named.values()),
    )


def embed(op: ComplexArray, mode: t.Union[Mode, str], spec: HilbertSpec) -> Operator:
    return embed_many({mode: op}, spec)


def identity(spec: HilbertSpec) -> Operator:
    return Operator(spec, np.eye(spec.dim, dtype=complex), hermitian_hint=True)


def mode_lowering(mode: t.Union[Mode, str], spec: HilbertSpec) -> Operator:
    """
    The lowering operator of a motional mode embedded in the full space.
    Frozen modes give the zero operator.
    """
    mode = Mode(mode)
    if mode is Mode.SPIN:
        return embed(SIGMA_MINUS, Mode.SPIN, spec)
    return embed(lowering_block(spec.mode_dim(mode)), mode, spec)


def mode_number(mode: t.Union[Mode, str], spec: HilbertSpec) -> Operator:
    return embed(number_block(spec.mode_dim(mode)), mode, spec)


def _require_hermitian(h: Operator) -> None:
    if not h.hermitian_hint and not is_hermitian(h.matrix):
        raise ContractViolationError("Hamiltonian is not hermitian")


def matrix_function(
    matrix: ComplexArray, f: t.Callable[[RealArray], t.Any]
) -> ComplexArray:
    """
    V f(Λ) V^H for a hermitian matrix with eigendecomposition V Λ V^H.
    """
    if not is_hermitian(matrix):
        raise ContractViolationError("matrix function needs a hermitian argument")
    eigenvalues, vectors = la.eigh(matrix)
    values = np.asarray(f(eigenvalues), dtype=complex)
    return np.asarray((vectors * values) @ vectors.conj().T, dtype=complex)


def hermitian_matrix_function(
    h: Operator, f: t.Callable[[RealArray], t.Any]
) -> Operator:
    result = matrix_function(h.matrix, f)
    return Operator(h.spec, result, hermitian_hint=is_hermitian(result, 1e-10))


def propagator(h: Operator, duration: float) -> Operator:
    """
    U = exp(-i h duration) for a hermitian h in angular-frequency units.
    """
    _require_hermitian(h)
    if duration < 0:
        raise ContractViolationError(f"duration must be non-negative, not {duration}")
    eigenvalues, vectors = la.eigh(h.matrix)
    phases = np.exp(-1j * eigenvalues * duration)
    return Operator(h.spec, (vectors * phases) @ vectors.conj().T)


def evolve_timedep(
    h_of_t: HamiltonianBuilder,
    state: StateVector,
    t0: float,
    t1: float,
    step: float,
) -> StateVector:
    """
    Midpoint piecewise-constant propagation from t0 to t1.  The interval is
    split into the fewest equal steps no longer than `step`.
    """
    if t1 < t0:
        raise ContractViolationError(f"t1 = {t1} precedes t0 = {t0}")
    if step <= 0:
        raise ContractViolationError(f"step must be positive, not {step}")
    if t1 == t0:
        return state
    count = max(1, math.ceil((t1 - t0) / step - 1e-9))
    dt = (t1 - t0) / count
    log.debug(f"integrating {count} steps of {dt:.6g} s")
    psi = np.array(state.amplitudes)
    for k in range(count):
        h = h_of_t(t0 + (k + 0.5) * dt)
        if h.spec != state.spec:
            raise InvalidDimensionError("Hamiltonian and state live on different spaces")
        _require_hermitian(h)
        eigenvalues, vectors = la.eigh(h.matrix)
        psi = vectors @ (np.exp(-1j * eigenvalues * dt) * (vectors.conj().T @ psi))
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    if drift > 1e-6:
        log.warning(f"norm drifted by {drift:.3g} over {count} steps")
    return StateVector(state.spec, psi)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.spec != b.spec:
        raise InvalidDimensionError("states live on different Hilbert spaces")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def tail_population(
    state: StateVector,
    mode: t.Union[Mode, str],
    levels: int = constants.TRUNCATION_LEVELS,
) -> float:
    return float(state.populations(mode)[-levels:].sum())


def check_truncation(
    state: StateVector, tol: float = constants.TRUNCATION_TOL
) -> t.Dict[Mode, float]:
    """
    Warn about every motional mode whose top two levels hold more than `tol`.
    Modes too small to have levels beyond the register are skipped.
    """
    tails = {}
    for mode in MODE_ORDER[1:]:
        if state.spec.mode_dim(mode) - constants.TRUNCATION_LEVELS < 2:
            continue
        tail = tail_population(state, mode)
        tails[mode] = tail
        if tail > tol:
            message = (
                f"{mode.value} truncation at {state.spec.mode_dim(mode)} levels: "
                f"top {constants.TRUNCATION_LEVELS} levels hold {tail:.3g} population"
            )
            log.warning(message)
            warnings.warn(message, TruncationWarning, stacklevel=2)
    return tails
