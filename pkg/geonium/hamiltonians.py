"""
Hamiltonian builders.  Effective models are written in the rotating frame
R(t) = exp(-i H_free t) of the free Hamiltonian, which is also the frame in
which `LabFrame` returns its integrated states, so the two can be compared
directly.
"""

import logging
import math
import typing as t
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import eval_laguerre

from . import constants
from .errors import InvalidDimensionError, InvalidInputError
from .linalg import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    HilbertSpec,
    Mode,
    Operator,
    StateVector,
    lowering_block,
    embed,
    embed_many,
    evolve_timedep,
    matrix_function,
    number_block,
)
from .trap import DriveConfig, ModeFrequencies, TrapConfig, derive_couplings
from .trap import SpinDriveConfig, derive_frequencies
from .types import ComplexArray, RealArray

log = logging.getLogger("geoniumlogger")


class HamiltonianKind(str, Enum):
    FREE_MOTION = "free-motion"
    SPIN_DRIVE = "spin-drive"
    SIDEBAND_MINUS = "sideband-minus"
    SIDEBAND_PLUS = "sideband-plus"
    CARRIER_ANTINODE = "carrier-antinode"
    EFFECTIVE_CN = "effective-cn"
    TRANSFER = "transfer"
    FULL_LAB_FRAME = "full-lab-frame"


class CarrierExpansion(str, Enum):
    # 1 - λ²/2 - λ² n, the second-order antinode coefficient
    LAMB_DICKE = "lamb-dicke"
    # e^{-λ²/2} L_n(λ²), the full n_z-diagonal of cos(kẑ)
    EXACT = "exact"


def _hermitian_pair(spec: HilbertSpec, m: ComplexArray) -> Operator:
    # M + M^H is hermitian to the last bit.
    return Operator(spec, m + m.conj().T, hermitian_hint=True)


def free_energies(
    spec: HilbertSpec, freqs: ModeFrequencies, include_magnetron: bool = False
) -> RealArray:
    """
    Diagonal of H_free = ω_z n_z + ω_c n_c − ω_m n_m + (ω_s/2)σ_z.
    """
    if include_magnetron and spec.magnetron_dim == 1:
        raise InvalidDimensionError("magnetron requested but magnetron_dim is 1")
    spin = np.array([0.5, -0.5]) * freqs.omega_s
    axial = np.arange(spec.axial_dim) * freqs.omega_z
    cyclotron = np.arange(spec.cyclotron_dim) * freqs.omega_c
    magnetron = np.arange(spec.magnetron_dim) * (
        -freqs.omega_m if include_magnetron else 0.0
    )
    grid = np.add.outer(
        np.add.outer(np.add.outer(spin, axial), cyclotron), magnetron
    )
    return np.asarray(grid.reshape(-1), dtype=float)


def free_motion(
    spec: HilbertSpec, freqs: ModeFrequencies, include_magnetron: bool = False
) -> Operator:
    energies = free_energies(spec, freqs, include_magnetron)
    return Operator(spec, np.diag(energies).astype(complex), hermitian_hint=True)


def spin_drive(spec: HilbertSpec, rabi_s: float, theta: float) -> Operator:
    """
    (ϖ_s/2)[σ₊e^{−iθ} + σ₋e^{iθ}] = (ϖ_s/2)(σ_x cos θ + σ_y sin θ)
    """
    if rabi_s < 0:
        raise InvalidInputError(f"rabi_s must not be negative, not {rabi_s}")
    m = embed(SIGMA_PLUS * (rabi_s / 2) * np.exp(-1j * theta), Mode.SPIN, spec)
    return _hermitian_pair(spec, np.array(m.matrix))


def sideband_minus(spec: HilbertSpec, eta: float, varphi: float) -> Operator:
    """
    Red sideband (Jaynes-Cummings): η[σ₊a_z e^{−iϕ̄} + σ₋a_z†e^{iϕ̄}].
    """
    a = lowering_block(spec.axial_dim)
    m = embed_many({Mode.SPIN: SIGMA_PLUS, Mode.AXIAL: a}, spec).matrix
    return _hermitian_pair(spec, eta * np.exp(-1j * varphi) * m)


def sideband_plus(spec: HilbertSpec, eta: float, varphi: float) -> Operator:
    """
    Blue sideband (anti-Jaynes-Cummings): η[σ₊a_z†e^{−iϕ̄} + σ₋a_z e^{iϕ̄}].
    """
    a_dag = lowering_block(spec.axial_dim).conj().T
    m = embed_many({Mode.SPIN: SIGMA_PLUS, Mode.AXIAL: a_dag}, spec).matrix
    return _hermitian_pair(spec, eta * np.exp(-1j * varphi) * m)


def carrier_diagonal(
    axial_dim: int,
    lamb_dicke: float,
    expansion: t.Union[CarrierExpansion, str] = CarrierExpansion.LAMB_DICKE,
) -> RealArray:
    n = np.arange(axial_dim, dtype=float)
    x = lamb_dicke**2
    if CarrierExpansion(expansion) is CarrierExpansion.EXACT:
        return np.asarray(math.exp(-x / 2) * eval_laguerre(n, x), dtype=float)
    return 1 - x / 2 - x * n


def carrier_antinode(
    spec: HilbertSpec,
    zeta: float,
    lamb_dicke: float,
    varphi: float,
    expansion: t.Union[CarrierExpansion, str] = CarrierExpansion.LAMB_DICKE,
) -> Operator:
    """
    Carrier drive with the electron at an antinode of the standing wave:
    −2ζ[σ₊e^{−iϕ̄} + σ₋e^{iϕ̄}]·[1 − λ²/2 − λ² a_z†a_z].
    The spin flip rate depends on n_z, which is what makes the CN gate work.
    """
    diagonal = np.diag(carrier_diagonal(spec.axial_dim, lamb_dicke, expansion))
    m = embed_many({Mode.SPIN: SIGMA_PLUS, Mode.AXIAL: diagonal}, spec).matrix
    return _hermitian_pair(spec, -2 * zeta * np.exp(-1j * varphi) * m)


def effective_cn(spec: HilbertSpec, kappa: float) -> Operator:
    """κ a_z†a_z σ_x"""
    return embed_many(
        {Mode.SPIN: kappa * SIGMA_X, Mode.AXIAL: number_block(spec.axial_dim)}, spec
    )


def transfer(spec: HilbertSpec, g_strength: float) -> Operator:
    """
    Axial to cyclotron beam splitter ig(a_c†a_z − a_c a_z†), with
    g = ε k √(ħ/2mω_z).
    """
    if spec.cyclotron_dim < 2:
        raise InvalidDimensionError("transfer needs a cyclotron mode (cyclotron_dim >= 2)")
    a_z = lowering_block(spec.axial_dim)
    a_c = lowering_block(spec.cyclotron_dim)
    m = embed_many({Mode.AXIAL: a_z, Mode.CYCLOTRON: a_c.conj().T}, spec).matrix
    return _hermitian_pair(spec, 1j * g_strength * m)


def trig_operators(
    axial_dim: int,
    lamb_dicke: float,
    phi: float,
    work_dim: t.Optional[int] = None,
) -> t.Tuple[ComplexArray, ComplexArray]:
    """
    cos(kẑ + φ) and sin(kẑ + φ) on the first `axial_dim` Fock levels, computed
    on an enlarged space and restricted, with kẑ = λ(a_z + a_z†).
    """
    work = max(work_dim or constants.TRIG_WORK_DIM, 2 * axial_dim)
    a = lowering_block(work)
    phase = lamb_dicke * (a + a.conj().T)
    cos = matrix_function(phase, lambda w: np.cos(w + phi))
    sin = matrix_function(phase, lambda w: np.sin(w + phi))
    return cos[:axial_dim, :axial_dim], sin[:axial_dim, :axial_dim]


def axial_phase(spec: HilbertSpec, lamb_dicke: float) -> Operator:
    """kẑ = λ(a_z + a_z†) embedded in the full space."""
    a = lowering_block(spec.axial_dim)
    return embed(lamb_dicke * (a + a.conj().T), Mode.AXIAL, spec)


@dataclass(frozen=True, eq=False)
class RotatingFrame:
    """
    R(t) = exp(−i H_free t).  States in this frame are the ones every effective
    model evolves.
    """

    spec: HilbertSpec
    energies: RealArray

    @classmethod
    def from_frequencies(
        cls, spec: HilbertSpec, freqs: ModeFrequencies
    ) -> "RotatingFrame":
        return cls(spec, free_energies(spec, freqs))

    def operator(self, t: float) -> Operator:
        return Operator(self.spec, np.diag(np.exp(-1j * self.energies * t)))

    def to_frame(self, state: StateVector, t: float) -> StateVector:
        return StateVector(self.spec, np.exp(1j * self.energies * t) * state.amplitudes)

    def to_lab(self, state: StateVector, t: float) -> StateVector:
        return StateVector(
            self.spec, np.exp(-1j * self.energies * t) * state.amplitudes
        )


@dataclass(frozen=True, eq=False)
class DriveTerm:
    """
    One drive W e^{iΩt} + h.c.; `detunings` holds Ω + E_j − E_k, the frequency
    of entry (j, k) in the interaction picture.
    """

    coupling: ComplexArray
    Omega: float  # noqa: N815
    detunings: RealArray

    def significant_frequency(self, threshold: float) -> float:
        magnitude = np.abs(self.coupling)
        peak = float(magnitude.max()) if magnitude.size else 0.0
        if peak == 0:
            return 0.0
        mask = magnitude > threshold * peak
        return float(np.max(np.abs(self.detunings[mask])))


@dataclass(frozen=True, eq=False)
class LabFrame:
    """
    The lab-frame Hamiltonian H(t) = H_free + Σ [W e^{iΩt} + h.c.] of one drive
    configuration.  Integration runs in the interaction picture of H_free,
    which is an exact change of frame and returns states in `RotatingFrame`.
    """

    spec: HilbertSpec
    energies: RealArray
    terms: t.Tuple[DriveTerm, ...]

    @classmethod
    def build(
        cls,
        spec: HilbertSpec,
        freqs: ModeFrequencies,
        drives: t.Sequence[t.Tuple[ComplexArray, float]],
    ) -> "LabFrame":
        energies = free_energies(spec, freqs)
        terms = tuple(
            DriveTerm(
                coupling=np.asarray(coupling, dtype=complex),
                Omega=Omega,
                detunings=Omega + np.subtract.outer(energies, energies),
            )
            for coupling, Omega in drives
            if np.any(coupling)
        )
        return cls(spec, energies, terms)

    @property
    def frame(self) -> RotatingFrame:
        return RotatingFrame(self.spec, self.energies)

    def free(self) -> Operator:
        return Operator(
            self.spec, np.diag(self.energies).astype(complex), hermitian_hint=True
        )

    def hamiltonian(self, t: float) -> Operator:
        m = sum(
            (term.coupling * np.exp(1j * term.Omega * t) for term in self.terms),
            np.zeros((self.spec.dim, self.spec.dim), dtype=complex),
        )
        return Operator(
            self.spec,
            np.diag(self.energies) + m + m.conj().T,
            hermitian_hint=True,
        )

    def interaction(self, t: float) -> Operator:
        m = sum(
            (term.coupling * np.exp(1j * term.detunings * t) for term in self.terms),
            np.zeros((self.spec.dim, self.spec.dim), dtype=complex),
        )
        return _hermitian_pair(self.spec, m)

    def fastest_frequency(self, threshold: float = constants.SIGNIFICANT_ENTRY) -> float:
        return max(
            (term.significant_frequency(threshold) for term in self.terms),
            default=0.0,
        )

    def evolve(
        self,
        state: StateVector,
        t0: float,
        t1: float,
        step: t.Optional[float] = None,
        points_per_period: int = constants.POINTS_PER_PERIOD,
    ) -> StateVector:
        """
        Integrate a rotating-frame state from t0 to t1.  Without an explicit
        step, the fastest significant oscillation gets `points_per_period`
        samples; a drive with only resonant entries is exact in one step.
        """
        if t1 <= t0:
            return state
        if step is None:
            fastest = self.fastest_frequency()
            step = (
                t1 - t0
                if fastest == 0
                else constants.TWO_PI / (points_per_period * fastest)
            )
        return evolve_timedep(self.interaction, state, t0, t1, step)


def standing_wave(
    spec: HilbertSpec,
    freqs: ModeFrequencies,
    epsilon: float,
    zeta: float,
    lamb_dicke: float,
    Omega: float,  # noqa: N803
    phi: float,
    varphi: float,
) -> LabFrame:
    """
    The standing-wave drive:
    ε[a_c e^{iϕ̄+iΩt} + h.c.]cos(kẑ+φ) + ζ[σ₋e^{iϕ̄+iΩt} + h.c.]sin(kẑ+φ).
    """
    cos, sin = trig_operators(spec.axial_dim, lamb_dicke, phi)
    phase = np.exp(1j * varphi)
    drives = []
    if spec.cyclotron_dim > 1 and epsilon:
        cyclotron = embed_many(
            {Mode.AXIAL: cos, Mode.CYCLOTRON: lowering_block(spec.cyclotron_dim)}, spec
        )
        drives.append((phase * epsilon * np.array(cyclotron.matrix), Omega))
    if zeta:
        spin = embed_many({Mode.SPIN: SIGMA_MINUS, Mode.AXIAL: sin}, spec)
        drives.append((phase * zeta * np.array(spin.matrix), Omega))
    return LabFrame.build(spec, freqs, drives)


def magnetic_drive(
    spec: HilbertSpec, freqs: ModeFrequencies, rabi_s: float, theta: float
) -> LabFrame:
    """
    A field of strength ϖ_s rotating at ω_s in the x-y plane, starting along θ.
    """
    coupling = embed(SIGMA_MINUS * (rabi_s / 2) * np.exp(1j * theta), Mode.SPIN, spec)
    return LabFrame.build(spec, freqs, [(np.array(coupling.matrix), freqs.omega_s)])


def lab_frame(spec: HilbertSpec, cfg: TrapConfig, drv: DriveConfig) -> LabFrame:
    freqs = derive_frequencies(cfg)
    couplings = derive_couplings(cfg, drv, SpinDriveConfig())
    return standing_wave(
        spec,
        freqs,
        epsilon=couplings.epsilon,
        zeta=couplings.zeta,
        lamb_dicke=couplings.lamb_dicke,
        Omega=drv.Omega,
        phi=drv.phi,
        varphi=drv.varphi,
    )


def full_lab_frame(
    spec: HilbertSpec, cfg: TrapConfig, drv: DriveConfig, t: float
) -> Operator:
    """
    H(t) of the standing-wave drive in the lab frame, magnetron left out.
    """
    return lab_frame(spec, cfg, drv).hamiltonian(t)


def spin_projector_up(spec: HilbertSpec) -> Operator:
    """σ₊σ₋ = |↑><↑|"""
    return embed(SIGMA_PLUS @ SIGMA_MINUS, Mode.SPIN, spec)


def spin_z(spec: HilbertSpec) -> Operator:
    return embed(SIGMA_Z, Mode.SPIN, spec)


BUILDERS: t.Dict[HamiltonianKind, t.Callable[..., t.Any]] = {
    HamiltonianKind.FREE_MOTION: free_motion,
    HamiltonianKind.SPIN_DRIVE: spin_drive,
    HamiltonianKind.SIDEBAND_MINUS: sideband_minus,
    HamiltonianKind.SIDEBAND_PLUS: sideband_plus,
    HamiltonianKind.CARRIER_ANTINODE: carrier_antinode,
    HamiltonianKind.EFFECTIVE_CN: effective_cn,
    HamiltonianKind.TRANSFER: transfer,
    HamiltonianKind.FULL_LAB_FRAME: full_lab_frame,
}
