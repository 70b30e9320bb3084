import logging
import math
import typing as t
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pydantic_xml as pxml
from pydantic import ConfigDict, ValidationInfo, field_validator

from . import constants
from .errors import (
    InfeasibleCompensationError,
    InvalidInputError,
    UnsupportedPulseError,
)
from .hamiltonians import (
    HamiltonianKind,
    LabFrame,
    carrier_antinode,
    effective_cn,
    magnetic_drive,
    sideband_minus,
    sideband_plus,
    spin_drive,
    standing_wave,
    transfer,
)
from .linalg import (
    SPIN_DOWN,
    HilbertSpec,
    Operator,
    StateVector,
    check_truncation,
    propagator,
)
from .trap import (
    Couplings,
    DriveConfig,
    ModeFrequencies,
    SpinDriveConfig,
    TrapConfig,
    derive_couplings,
    derive_frequencies,
    epsilon_per_zeta,
)
from .types import Amplitudes

log = logging.getLogger("geoniumlogger")


class SimulationMode(str, Enum):
    EFFECTIVE = "effective"
    FULL = "full"


class Pulse(pxml.BaseXmlModel, tag="pulse"):
    """
    A timed application of one Hamiltonian.  `strength` is the coupling the
    kind calls for: ϖ_s for spin drives, η for sidebands, ζ for the carrier,
    κ for the effective CN, g for transfer, and the spin-drive amplitude for a
    raw lab-frame drive.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: HamiltonianKind = pxml.attr()
    duration: float = pxml.attr(name="duration_s")
    strength: float = pxml.attr(default=0.0)
    theta: float = pxml.attr(default=0.0)
    varphi: float = pxml.attr(default=0.0)
    phi: float = pxml.attr(default=0.0)
    Omega: float = pxml.attr(default=0.0)  # noqa: N815
    lamb_dicke: float = pxml.attr(name="lamb-dicke", default=0.0)

    @field_validator("duration", "strength")
    @classmethod
    def non_negative_validator(cls, v: float, info: ValidationInfo) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must not be negative")
        return v

    def hamiltonian(self, spec: HilbertSpec) -> Operator:
        """
        The rotating-frame Hamiltonian of this pulse.
        """
        if self.kind is HamiltonianKind.FREE_MOTION:
            # Free evolution is the identity in the rotating frame.
            return Operator(
                spec, np.zeros((spec.dim, spec.dim)), hermitian_hint=True
            )
        if self.kind is HamiltonianKind.SPIN_DRIVE:
            return spin_drive(spec, self.strength, self.theta)
        if self.kind is HamiltonianKind.SIDEBAND_MINUS:
            return sideband_minus(spec, self.strength, self.varphi)
        if self.kind is HamiltonianKind.SIDEBAND_PLUS:
            return sideband_plus(spec, self.strength, self.varphi)
        if self.kind is HamiltonianKind.CARRIER_ANTINODE:
            return carrier_antinode(spec, self.strength, self.lamb_dicke, self.varphi)
        if self.kind is HamiltonianKind.EFFECTIVE_CN:
            return effective_cn(spec, self.strength)
        if self.kind is HamiltonianKind.TRANSFER:
            return transfer(spec, self.strength)
        raise UnsupportedPulseError(
            f"{self.kind.value} pulses have no rotating-wave form; run them in full mode"
        )


class PulseSequence(pxml.BaseXmlModel, tag="sequence"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    pulses: t.List[Pulse] = pxml.element(tag="pulse", default=[])

    @property
    def total_duration(self) -> float:
        return sum(pulse.duration for pulse in self.pulses)

    def then(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(pulses=[*self.pulses, *other.pulses])

    def kinds(self) -> t.List[HamiltonianKind]:
        return [pulse.kind for pulse in self.pulses]


@dataclass(frozen=True)
class LabContext:
    """
    What it takes to realize effective pulses as lab-frame drives: the mode
    frequencies, the Lamb-Dicke parameter of the standing wave, and ε/ζ for
    the cyclotron part of the same wave.
    """

    freqs: ModeFrequencies
    lamb_dicke: float
    epsilon_per_zeta: float = 0.0
    points_per_period: int = constants.POINTS_PER_PERIOD
    step: t.Optional[float] = None

    @classmethod
    def from_configs(
        cls,
        cfg: TrapConfig,
        drv: DriveConfig,
        points_per_period: int = constants.POINTS_PER_PERIOD,
        step: t.Optional[float] = None,
    ) -> "LabContext":
        couplings = derive_couplings(cfg, drv, SpinDriveConfig())
        return cls(
            freqs=derive_frequencies(cfg),
            lamb_dicke=couplings.lamb_dicke,
            epsilon_per_zeta=epsilon_per_zeta(cfg, drv),
            points_per_period=points_per_period,
            step=step,
        )

    def _standing_wave(
        self,
        spec: HilbertSpec,
        zeta: float,
        lamb_dicke: float,
        Omega: float,  # noqa: N803
        phi: float,
        varphi: float,
    ) -> LabFrame:
        return standing_wave(
            spec,
            self.freqs,
            epsilon=self.epsilon_per_zeta * zeta,
            zeta=zeta,
            lamb_dicke=lamb_dicke,
            Omega=Omega,
            phi=phi,
            varphi=varphi,
        )

    def frame_for(self, pulse: Pulse, spec: HilbertSpec) -> t.Optional[LabFrame]:
        """
        The lab-frame drive whose rotating-wave limit is `pulse`; None for
        free evolution.
        """
        freqs = self.freqs
        kind = pulse.kind
        if kind is HamiltonianKind.FREE_MOTION:
            return None
        if kind is HamiltonianKind.SPIN_DRIVE:
            return magnetic_drive(spec, freqs, pulse.strength, pulse.theta)
        if kind is HamiltonianKind.FULL_LAB_FRAME:
            return self._standing_wave(
                spec,
                pulse.strength,
                pulse.lamb_dicke or self.lamb_dicke,
                pulse.Omega,
                pulse.phi,
                pulse.varphi,
            )
        if kind is HamiltonianKind.EFFECTIVE_CN:
            raise UnsupportedPulseError(
                "the effective CN Hamiltonian has no single lab-frame drive; "
                "use cn_sequence"
            )
        if kind is HamiltonianKind.CARRIER_ANTINODE:
            # Antinode (φ = −π/2); the spin-drive amplitude is 2ζ.
            return self._standing_wave(
                spec,
                2 * pulse.strength,
                pulse.lamb_dicke or self.lamb_dicke,
                freqs.omega_s,
                -math.pi / 2,
                pulse.varphi,
            )
        if not self.lamb_dicke > 0:
            raise InvalidInputError(
                f"{kind.value} pulses need a positive Lamb-Dicke parameter in full mode"
            )
        if kind is HamiltonianKind.TRANSFER:
            epsilon = pulse.strength / self.lamb_dicke
            zeta = epsilon / self.epsilon_per_zeta if self.epsilon_per_zeta else 0.0
            return standing_wave(
                spec,
                freqs,
                epsilon=epsilon,
                zeta=zeta,
                lamb_dicke=self.lamb_dicke,
                Omega=freqs.omega_c - freqs.omega_z,
                phi=-math.pi / 2,
                varphi=-math.pi / 2,
            )
        Omega = (  # noqa: N806
            freqs.omega_s - freqs.omega_z
            if kind is HamiltonianKind.SIDEBAND_MINUS
            else freqs.omega_s + freqs.omega_z
        )
        return self._standing_wave(
            spec,
            pulse.strength / self.lamb_dicke,
            self.lamb_dicke,
            Omega,
            0.0,
            pulse.varphi,
        )


def run(
    seq: PulseSequence,
    state: StateVector,
    mode: t.Union[SimulationMode, str] = SimulationMode.EFFECTIVE,
    lab: t.Optional[LabContext] = None,
) -> StateVector:
    """
    Apply the pulses of `seq` left to right.  In full mode each pulse is
    integrated as a lab-frame drive on one clock starting at t = 0, and the
    result is returned in the rotating frame.
    """
    mode = SimulationMode(mode)
    if not seq.pulses:
        return state
    if mode is SimulationMode.FULL and lab is None:
        raise InvalidInputError("full-mode runs need a LabContext")
    spec = state.spec
    clock = 0.0
    for pulse in seq.pulses:
        if pulse.duration == 0:
            continue
        if mode is SimulationMode.EFFECTIVE:
            state = propagator(pulse.hamiltonian(spec), pulse.duration) @ state
        else:
            assert lab is not None
            frame = lab.frame_for(pulse, spec)
            if frame is not None:
                state = frame.evolve(
                    state,
                    clock,
                    clock + pulse.duration,
                    step=lab.step,
                    points_per_period=lab.points_per_period,
                )
            clock += pulse.duration
    drift = abs(state.norm() - 1.0)
    if drift > 1e-6:
        log.warning(f"sequence changed the norm by {drift:.3g}")
    check_truncation(state)
    return state


def compensation_time(
    couplings: Couplings, carrier_time: float, compensation_n: int = 0
) -> t.Tuple[float, int]:
    """
    Spin-drive time τ that undoes the n_z = 0 carrier rotation:
    τϖ_s = 4ζ(1 − λ²/2)t* ± 2πn, taking the shortest τ >= 0 over both signs
    and n >= compensation_n.  Returns τ and the signed n (negative for the
    minus branch).
    """
    if not couplings.rabi_s > 0:
        raise InvalidInputError("compensation needs a positive spin Rabi frequency")
    angle = 4 * couplings.zeta * (1 - couplings.lamb_dicke**2 / 2) * carrier_time
    two_pi = constants.TWO_PI
    candidates = []
    n_plus = max(compensation_n, math.ceil(-angle / two_pi))
    candidates.append((angle + two_pi * n_plus, n_plus))
    n_minus = math.floor(angle / two_pi)
    if n_minus >= compensation_n:
        candidates.append((angle - two_pi * n_minus, -n_minus))
    feasible = [(value, n) for value, n in candidates if value >= 0]
    if not feasible:
        raise InfeasibleCompensationError(
            f"no non-negative compensation time for n >= {compensation_n}"
        )
    value, n = min(feasible)
    log.debug(f"compensation angle {value:.6g} rad with n = {n}")
    return value / couplings.rabi_s, n


def cn_sequence(couplings: Couplings, compensation_n: int = 0) -> PulseSequence:
    """
    The controlled-NOT of the register: an antinode carrier pulse for
    t* = π/2κ, then a θ = 0 spin drive that cancels its n_z = 0 rotation.
    """
    if not couplings.kappa > 0:
        raise InvalidInputError("the CN gate needs kappa > 0")
    if not couplings.rabi_s > 0:
        raise InvalidInputError("the CN gate needs rabi_s > 0")
    carrier_time = math.pi / (2 * couplings.kappa)
    tau, _ = compensation_time(couplings, carrier_time, compensation_n)
    return PulseSequence(
        pulses=[
            Pulse(
                kind=HamiltonianKind.CARRIER_ANTINODE,
                duration=carrier_time,
                strength=couplings.zeta,
                lamb_dicke=couplings.lamb_dicke,
                varphi=0.0,
            ),
            Pulse(
                kind=HamiltonianKind.SPIN_DRIVE,
                duration=tau,
                strength=couplings.rabi_s,
                theta=0.0,
            ),
        ]
    )


def spin_rotation(angle: float, theta: float, rabi_s: float) -> PulseSequence:
    """
    Rotate the spin by `angle` about the axis at azimuth θ.
    """
    if not rabi_s > 0:
        raise InvalidInputError("a spin rotation needs rabi_s > 0")
    if angle < 0:
        raise InvalidInputError("rotation angle must not be negative")
    return PulseSequence(
        pulses=[
            Pulse(
                kind=HamiltonianKind.SPIN_DRIVE,
                duration=angle / rabi_s,
                strength=rabi_s,
                theta=theta,
            )
        ]
    )


def target_hadamard(rabi_s: float) -> PulseSequence:
    """
    Hadamard on the spin qubit, up to single-qubit phase settings.
    """
    return spin_rotation(math.pi / 2, math.pi / 2, rabi_s)


def concurrence(amplitudes: Amplitudes) -> float:
    alpha, beta, gamma, delta = amplitudes
    return 2 * abs(alpha * delta - beta * gamma)


@dataclass(frozen=True)
class PreparationPlan:
    sequence: PulseSequence
    reachable: bool
    leakage: float
    ordering: str
    concurrence: float


def _angle(z: complex) -> float:
    return float(np.angle(z)) if abs(z) > constants.AMPLITUDE_TOL else 0.0


def _plan(
    amplitudes: Amplitudes, ordering: str
) -> t.Optional[t.Tuple[float, t.List[t.Tuple[HamiltonianKind, float, float]]]]:
    """
    Closed-form three-pulse plan from |0↓>.  Returns the leakage and the pulses
    as (kind, rotation angle, phase), or None when the ordering cannot place
    the amplitudes at all.

    "minus-plus": spin drive, red sideband, blue sideband.  The blue pulse also
    drives |1↓> -> |2↑> at √2 the rate, so γ is pre-scaled by 1/cos(√2 z).
    "plus-minus": spin drive, blue sideband, red sideband, where the red pulse
    drives |1↑> -> |2↓> and δ is pre-scaled instead.
    """
    tol = constants.AMPLITUDE_TOL
    alpha, beta, gamma, delta = amplitudes
    global_phase = -_angle(alpha)
    rotate = complex(np.exp(1j * global_phase))
    beta_p, gamma_p, delta_p = beta * rotate, gamma * rotate, delta * rotate
    a0, b0, g0, d0 = abs(alpha), abs(beta), abs(gamma), abs(delta)

    if ordering == "minus-plus":
        first = math.atan2(d0, a0)
        damping = math.cos(math.sqrt(2) * first)
        if g0 > tol and abs(damping) < 1e-9:
            return None
        scaled = g0 / abs(damping) if g0 > tol else 0.0
        weight = a0**2 + b0**2 + d0**2 + scaled**2
        a = math.sqrt((a0**2 + d0**2) / weight)
        b = math.sqrt((b0**2 + scaled**2) / weight)
        red = math.atan2(scaled, b0)
        blue = first
    else:
        first = math.atan2(g0, b0)
        damping = math.cos(math.sqrt(2) * first)
        if d0 > tol and abs(damping) < 1e-9:
            return None
        scaled = d0 / abs(damping) if d0 > tol else 0.0
        weight = a0**2 + b0**2 + g0**2 + scaled**2
        a = math.sqrt((a0**2 + scaled**2) / weight)
        b = math.sqrt((b0**2 + g0**2) / weight)
        red = first
        blue = math.atan2(scaled, a0)

    flip = 2 * math.atan2(b, a)
    theta = -math.pi / 2 - _angle(beta_p) if b0 > tol else 0.0
    red_phase = _angle(gamma_p) - math.pi + theta
    blue_phase = -math.pi / 2 - _angle(delta_p)
    if damping < 0:
        if ordering == "minus-plus":
            red_phase -= math.pi
        else:
            blue_phase += math.pi
    leakage = max(0.0, 1 - 1 / weight)
    spin = (HamiltonianKind.SPIN_DRIVE, flip, theta)
    minus = (HamiltonianKind.SIDEBAND_MINUS, red, red_phase)
    plus = (HamiltonianKind.SIDEBAND_PLUS, blue, blue_phase)
    steps = [spin, minus, plus] if ordering == "minus-plus" else [spin, plus, minus]
    return leakage, steps


def prepare_state(
    target: Amplitudes, couplings: Couplings
) -> PreparationPlan:
    """
    Plan a pulse sequence taking |0>_z|↓> to α|0↓> + β|0↑> + γ|1↓> + δ|1↑>.

    Targets with γδ = 0 are reached exactly.  Otherwise one of the sidebands
    necessarily pushes population to n_z = 2 and the plan reports that
    leakage; the ordering with less leakage is chosen.
    """
    norm = sum(abs(a) ** 2 for a in target)
    if abs(norm - 1) > 1e-9:
        raise InvalidInputError(f"target amplitudes have norm^2 {norm:.12g}, not 1")

    plans = {}
    for ordering in ("minus-plus", "plus-minus"):
        plan = _plan(target, ordering)
        if plan is not None:
            plans[ordering] = plan
    if not plans:
        raise InvalidInputError("no pulse ordering can place these amplitudes")
    ordering = min(plans, key=lambda name: plans[name][0])
    leakage, steps = plans[ordering]
    log.debug(f"planner chose {ordering} ordering with leakage {leakage:.3g}")

    pulses = []
    for kind, angle, phase in steps:
        if angle <= constants.AMPLITUDE_TOL:
            continue
        if kind is HamiltonianKind.SPIN_DRIVE:
            if not couplings.rabi_s > 0:
                raise InvalidInputError("this target needs a spin drive (rabi_s > 0)")
            pulses.append(
                Pulse(
                    kind=kind,
                    duration=angle / couplings.rabi_s,
                    strength=couplings.rabi_s,
                    theta=phase,
                )
            )
        else:
            if not couplings.eta > 0:
                raise InvalidInputError("this target needs sideband pulses (eta > 0)")
            pulses.append(
                Pulse(
                    kind=kind,
                    duration=angle / couplings.eta,
                    strength=couplings.eta,
                    varphi=phase,
                )
            )
    reachable = leakage <= constants.AMPLITUDE_TOL
    if not reachable:
        log.warning(
            f"target is not reachable without leakage; {leakage:.3g} of the "
            "population ends outside the register"
        )
    return PreparationPlan(
        sequence=PulseSequence(pulses=pulses),
        reachable=reachable,
        leakage=leakage,
        ordering=ordering,
        concurrence=concurrence(target),
    )


def initial_state(spec: HilbertSpec) -> StateVector:
    """|0>_z|↓> with every motional mode in its ground state."""
    return spec.basis_state(SPIN_DOWN)
