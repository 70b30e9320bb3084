import logging
import math
import multiprocessing
import typing as t
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import partial

import numpy as np
import pydantic_xml as pxml
from scipy import stats

from . import constants
from .errors import ContractViolationError, InvalidInputError, TruncationWarning
from .hamiltonians import CarrierExpansion, HamiltonianKind, carrier_antinode
from .linalg import (
    SPIN_DOWN,
    SPIN_UP,
    HilbertSpec,
    Mode,
    StateVector,
    fidelity,
    propagator,
    tail_population,
)
from .pulses import LabContext, Pulse, PulseSequence, SimulationMode, run
from .trap import ModeFrequencies, derive_frequencies, reference_trap
from .types import Amplitudes, ComplexArray

log = logging.getLogger("geoniumlogger")

# Register B: (n_z, spin) in the order |0↓>, |0↑>, |1↓>, |1↑>.
REGISTER_LEVELS = ((0, SPIN_DOWN), (0, SPIN_UP), (1, SPIN_DOWN), (1, SPIN_UP))
REGISTER_LABELS = ("0dn", "0up", "1dn", "1up")

# Textbook CN: target (spin) flips when the control (axial) is 1.
CN_IDEAL: ComplexArray = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
# What the carrier-plus-compensation sequence produces: CN with a −i on the flip.
CN_SEQUENCE_MATRIX: ComplexArray = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1j], [0, 0, -1j, 0]], dtype=complex
)
HADAMARD_TARGET_IDEAL: ComplexArray = np.kron(
    np.eye(2), np.array([[1, 1], [1, -1]]) / math.sqrt(2)
).astype(complex)


@dataclass(frozen=True)
class QubitRegisterBasis:
    spec: HilbertSpec
    indices: t.Tuple[int, int, int, int]

    @classmethod
    def for_spec(cls, spec: HilbertSpec) -> "QubitRegisterBasis":
        indices = tuple(spec.index(spin, n_z) for n_z, spin in REGISTER_LEVELS)
        return cls(spec, t.cast(t.Tuple[int, int, int, int], indices))

    def state(self, j: int) -> StateVector:
        n_z, spin = REGISTER_LEVELS[j]
        return self.spec.basis_state(spin, n_z)

    def restrict(self, state: StateVector) -> ComplexArray:
        return np.asarray(state.amplitudes[list(self.indices)], dtype=complex)


def register_basis(spec: HilbertSpec) -> QubitRegisterBasis:
    return QubitRegisterBasis.for_spec(spec)


def register_state(amplitudes: Amplitudes, spec: HilbertSpec) -> StateVector:
    """α|0↓> + β|0↑> + γ|1↓> + δ|1↑>"""
    psi = np.zeros(spec.dim, dtype=complex)
    for index, amplitude in zip(register_basis(spec).indices, amplitudes):
        psi[index] = amplitude
    return StateVector(spec, psi)


@dataclass(frozen=True, eq=False)
class GateReport:
    truth_table: ComplexArray
    subspace_unitarity_defect: float
    leakage: float
    fidelity_vs_ideal: float
    global_phase: complex


class MatrixEntry(pxml.BaseXmlModel, tag="entry"):
    row: int = pxml.attr()
    col: int = pxml.attr()
    re: float = pxml.attr()
    im: float = pxml.attr()


class GateReportDocument(pxml.BaseXmlModel, tag="gate-report"):
    fidelity: float = pxml.attr()
    leakage: float = pxml.attr()
    defect: float = pxml.attr(name="unitarity-defect")
    phase_re: float = pxml.attr(name="global-phase-re")
    phase_im: float = pxml.attr(name="global-phase-im")
    entries: t.List[MatrixEntry] = pxml.element(tag="entry", default=[])

    def truth_table(self) -> ComplexArray:
        table = np.zeros((4, 4), dtype=complex)
        for entry in self.entries:
            table[entry.row, entry.col] = complex(entry.re, entry.im)
        return table


def gate_report_xml(report: GateReport) -> str:
    document = GateReportDocument(
        fidelity=report.fidelity_vs_ideal,
        leakage=report.leakage,
        defect=report.subspace_unitarity_defect,
        phase_re=report.global_phase.real,
        phase_im=report.global_phase.imag,
        entries=[
            MatrixEntry(row=i, col=j, re=value.real, im=value.imag)
            for (i, j), value in np.ndenumerate(report.truth_table)
        ],
    )
    return t.cast(str, document.to_xml(pretty_print=True, encoding="unicode"))


def unitarity_defect(m: ComplexArray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def extract_gate(
    seq: PulseSequence,
    mode: t.Union[SimulationMode, str] = SimulationMode.EFFECTIVE,
    spec: t.Optional[HilbertSpec] = None,
    lab: t.Optional[LabContext] = None,
    ideal: ComplexArray = CN_SEQUENCE_MATRIX,
) -> GateReport:
    """
    Run `seq` on each register basis state and restrict the result to the
    register.  Leakage is the worst population lost from the register; the
    fidelity |tr(M^H U)|²/16 is insensitive to a global phase.
    """
    spec = spec or HilbertSpec()
    basis = register_basis(spec)
    columns = []
    leakage = 0.0
    for j in range(4):
        output = run(seq, basis.state(j), mode, lab)
        column = basis.restrict(output)
        columns.append(column)
        leakage = max(leakage, 1 - float(np.sum(np.abs(column) ** 2)))
    m = np.column_stack(columns)
    overlap = complex(np.trace(ideal.conj().T @ m))
    report = GateReport(
        truth_table=m,
        subspace_unitarity_defect=unitarity_defect(m),
        leakage=max(0.0, leakage),
        fidelity_vs_ideal=min(1.0, abs(overlap) ** 2 / 16),
        global_phase=overlap / abs(overlap) if abs(overlap) > 0 else 1.0 + 0j,
    )
    log.debug(
        f"gate fidelity {report.fidelity_vs_ideal:.12g}, leakage {report.leakage:.3g}"
    )
    return report


@dataclass(frozen=True, eq=False)
class PhaseEquivalence:
    equivalent: bool
    deviation: float
    left: t.Optional[ComplexArray] = None
    right: t.Optional[ComplexArray] = None

    def __bool__(self) -> bool:
        return self.equivalent


def phase_equivalent(
    m: ComplexArray,
    ideal: ComplexArray,
    tol: float = 1e-6,
    unitarity_tol: float = 1e-6,
) -> PhaseEquivalence:
    """
    Whether diagonal phase gates D1, D2 exist with D1·m·D2 = ideal.

    Each nonzero entry of `ideal` fixes x_i + y_j = arg(ideal_ij) − arg(m_ij);
    the phases are propagated along the bipartite graph of nonzero entries and
    then checked on the whole matrix.  Basis permutations are never accepted.
    """
    for name, matrix in (("m", m), ("ideal", ideal)):
        defect = unitarity_defect(matrix)
        if defect > unitarity_tol:
            raise ContractViolationError(
                f"{name} is not unitary (defect {defect:.3g})"
            )
    rows, cols = ideal.shape
    support = np.abs(ideal) > 1e-9
    if np.any(np.abs(m[support]) < tol):
        return PhaseEquivalence(False, float(np.max(np.abs(m - ideal))))

    x: t.List[t.Optional[float]] = [None] * rows
    y: t.List[t.Optional[float]] = [None] * cols
    for start in range(rows):
        if x[start] is not None:
            continue
        x[start] = 0.0
        queue: t.List[t.Tuple[str, int]] = [("row", start)]
        while queue:
            side, k = queue.pop()
            if side == "row":
                for j in np.flatnonzero(support[k]):
                    if y[j] is None:
                        y[j] = float(np.angle(ideal[k, j]) - np.angle(m[k, j])) - t.cast(
                            float, x[k]
                        )
                        queue.append(("col", int(j)))
            else:
                for i in np.flatnonzero(support[:, k]):
                    if x[i] is None:
                        x[i] = float(np.angle(ideal[i, k]) - np.angle(m[i, k])) - t.cast(
                            float, y[k]
                        )
                        queue.append(("row", int(i)))
    left = np.exp(1j * np.array([v or 0.0 for v in x]))
    right = np.exp(1j * np.array([v or 0.0 for v in y]))
    deviation = float(np.max(np.abs(left[:, None] * m * right[None, :] - ideal)))
    if deviation < tol:
        return PhaseEquivalence(True, deviation, left, right)
    return PhaseEquivalence(False, deviation)


class RwaCase(str, Enum):
    SIDEBAND_MINUS = "sideband-minus"
    SIDEBAND_PLUS = "sideband-plus"
    CARRIER = "carrier"


@dataclass(frozen=True)
class RwaPoint:
    scale: float
    infidelity: float
    axial_tail: float = 0.0

    @property
    def truncated(self) -> bool:
        return self.axial_tail > constants.TRUNCATION_TOL


@dataclass(frozen=True)
class RwaBenchmark:
    case: RwaCase
    lamb_dicke: float
    points: t.Tuple[RwaPoint, ...]
    slope: float
    slope_stderr: float
    prefactor: float

    @property
    def slope_ok(self) -> bool:
        return abs(self.slope - constants.RWA_SLOPE) <= constants.RWA_SLOPE_TOL


def _rwa_setup(
    case: RwaCase,
    scale: float,
    freqs: ModeFrequencies,
    lamb_dicke: float,
    axial_dim: int,
) -> t.Tuple[HilbertSpec, StateVector, Pulse, t.Any]:
    spec = HilbertSpec(axial_dim=axial_dim, cyclotron_dim=1)
    strength = scale * freqs.omega_z
    if case is RwaCase.CARRIER:
        # One full spin flip on n_z = 0 under the exact-diagonal carrier, rounded
        # to whole periods of the 2ω_z terms so every scale ends on the same
        # phase of the off-resonant n_z -> n_z ± 2 motion.
        flip = math.pi / (4 * strength * math.exp(-(lamb_dicke**2) / 2))
        period = math.pi / freqs.omega_z
        duration = max(1, round(flip / period)) * period
        pulse = Pulse(
            kind=HamiltonianKind.CARRIER_ANTINODE,
            duration=duration,
            strength=strength,
            lamb_dicke=lamb_dicke,
        )
        effective = carrier_antinode(
            spec, strength, lamb_dicke, 0.0, expansion=CarrierExpansion.EXACT
        )
        return spec, spec.basis_state(SPIN_DOWN), pulse, effective
    # One complete transfer, ηt = π/2.
    minus = case is RwaCase.SIDEBAND_MINUS
    pulse = Pulse(
        kind=HamiltonianKind.SIDEBAND_MINUS if minus else HamiltonianKind.SIDEBAND_PLUS,
        duration=math.pi / (2 * strength),
        strength=strength,
    )
    start = spec.basis_state(SPIN_UP if minus else SPIN_DOWN)
    return spec, start, pulse, pulse.hamiltonian(spec)


def rwa_point(
    scale: float,
    case: RwaCase,
    freqs: ModeFrequencies,
    lamb_dicke: float,
    axial_dim: int = constants.RWA_AXIAL_DIM,
    points_per_period: int = constants.POINTS_PER_PERIOD,
) -> RwaPoint:
    """
    Infidelity between the lab-frame and rotating-wave evolutions of one start state
    at coupling / ω_z = `scale`.
    """
    spec, start, pulse, effective = _rwa_setup(case, scale, freqs, lamb_dicke, axial_dim)
    expected = propagator(effective, pulse.duration) @ start
    lab = LabContext(freqs, lamb_dicke, points_per_period=points_per_period)
    frame = lab.frame_for(pulse, spec)
    assert frame is not None
    actual = frame.evolve(start, 0.0, pulse.duration, points_per_period=points_per_period)
    # Travels with the point; rwa_benchmark warns in the calling process.
    tail = (
        tail_population(actual, Mode.AXIAL)
        if axial_dim - constants.TRUNCATION_LEVELS >= 2
        else 0.0
    )
    infidelity = max(1 - fidelity(expected, actual), 0.0)
    log.debug(f"{case.value} at scale {scale:.3g}: infidelity {infidelity:.6g}")
    return RwaPoint(scale, infidelity, tail)


def rwa_benchmark(
    resonance: t.Union[RwaCase, str],
    coupling_scales: t.Sequence[float] = constants.RWA_SCALES,
    freqs: t.Optional[ModeFrequencies] = None,
    lamb_dicke: t.Optional[float] = None,
    axial_dim: int = constants.RWA_AXIAL_DIM,
    points_per_period: int = constants.POINTS_PER_PERIOD,
    workers: int = 1,
) -> RwaBenchmark:
    """
    Sweep coupling / ω_z and fit log(infidelity) against log(scale).  The
    rotating-wave error is second order, so the slope should be close to 2.
    Points are evaluated in a process pool when `workers` > 1; the table keeps
    the order of `coupling_scales`.
    """
    case = RwaCase(resonance)
    scales = [float(s) for s in coupling_scales]
    if not scales:
        raise InvalidInputError("the scale list is empty")
    if any(not s > 0 for s in scales):
        raise InvalidInputError("coupling scales must be positive")
    freqs = freqs or derive_frequencies(reference_trap())
    if lamb_dicke is None:
        lamb_dicke = (
            constants.RWA_CARRIER_LAMB_DICKE
            if case is RwaCase.CARRIER
            else constants.RWA_SIDEBAND_LAMB_DICKE
        )
    evaluate = partial(
        rwa_point,
        case=case,
        freqs=freqs,
        lamb_dicke=lamb_dicke,
        axial_dim=axial_dim,
        points_per_period=points_per_period,
    )
    if workers > 1 and len(scales) > 1:
        with multiprocessing.Pool(min(workers, len(scales))) as pool:
            points = pool.map(evaluate, scales)
    else:
        points = [evaluate(s) for s in scales]
    for point in points:
        if point.truncated:
            message = (
                f"axial truncation at {axial_dim} levels: top "
                f"{constants.TRUNCATION_LEVELS} levels hold {point.axial_tail:.3g} "
                f"population at scale {point.scale:.3g}"
            )
            log.warning(message)
            warnings.warn(message, TruncationWarning, stacklevel=2)

    if len(points) >= 2:
        floor = np.finfo(float).tiny
        fit = stats.linregress(
            np.log([p.scale for p in points]),
            np.log([max(p.infidelity, floor) for p in points]),
        )
        slope, stderr, prefactor = (
            float(fit.slope),
            float(fit.stderr),
            float(np.exp(fit.intercept)),
        )
    else:
        slope = stderr = prefactor = float("nan")
    log.info(f"{case.value}: log-log slope {slope:.4g} +/- {stderr:.2g}")
    return RwaBenchmark(case, lamb_dicke, tuple(points), slope, stderr, prefactor)


def carrier_truncation_infidelity(
    lamb_dicke: float = 0.1, zeta: float = 1.0, axial_dim: int = 6
) -> float:
    """
    Worst register-state infidelity between the second-order antinode carrier
    and the exact-diagonal one over one CN carrier time t* = π/(4ζλ²).
    """
    if not lamb_dicke > 0 or not zeta > 0:
        raise InvalidInputError("lamb_dicke and zeta must be positive")
    spec = HilbertSpec(axial_dim=axial_dim, cyclotron_dim=1)
    duration = math.pi / (4 * zeta * lamb_dicke**2)
    truncated = propagator(carrier_antinode(spec, zeta, lamb_dicke, 0.0), duration)
    exact = propagator(
        carrier_antinode(spec, zeta, lamb_dicke, 0.0, expansion=CarrierExpansion.EXACT),
        duration,
    )
    basis = register_basis(spec)
    return max(
        1 - fidelity(truncated @ basis.state(j), exact @ basis.state(j))
        for j in range(4)
    )
