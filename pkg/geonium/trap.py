import logging
import math
import typing as t
from dataclasses import dataclass

import pydantic_xml as pxml
import scipy.constants as const
from pydantic import ConfigDict, ValidationInfo, field_validator

from . import constants
from .errors import InvalidConfigError

log = logging.getLogger("geoniumlogger")


class TrapConfig(pxml.BaseXmlModel, tag="trap"):
    """
    SI inputs of the trap.  The physical constants default to CODATA values
    but can be overridden (e.g. to work in units with ħ = 1).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)
    B: float = pxml.attr()
    V0: float = pxml.attr()
    d: float = pxml.attr()
    g_factor: float = pxml.attr(name="g-factor", default=constants.G_FACTOR)
    electron_charge_mag: float = pxml.attr(name="charge", default=const.e)
    electron_mass: float = pxml.attr(name="mass", default=const.m_e)
    hbar: float = pxml.attr(default=const.hbar)

    @field_validator(
        "B", "V0", "d", "g_factor", "electron_charge_mag", "electron_mass", "hbar"
    )
    @classmethod
    def positive_validator(cls, v: float, info: ValidationInfo) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v


class DriveConfig(pxml.BaseXmlModel, tag="drive"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    # Vector-potential amplitude |α| of the standing wave, in V·s/m.
    alpha_mag: float = pxml.attr(name="alpha", default=0.0)
    k: float = pxml.attr(default=1.0)
    Omega: float = pxml.attr(default=0.0)  # noqa: N815
    phi: float = pxml.attr(default=0.0)
    varphi: float = pxml.attr(default=0.0)

    @field_validator("alpha_mag", "Omega")
    @classmethod
    def non_negative_validator(cls, v: float, info: ValidationInfo) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must not be negative")
        return v

    @field_validator("k")
    @classmethod
    def k_validator(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("k must be positive")
        return v


class SpinDriveConfig(pxml.BaseXmlModel, tag="spin-drive"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    b: float = pxml.attr(default=0.0)
    theta: float = pxml.attr(default=0.0)

    @field_validator("b")
    @classmethod
    def b_validator(cls, v: float) -> float:
        if v < 0:
            raise ValueError("b must not be negative")
        return v


@dataclass(frozen=True)
class ModeFrequencies:
    omega_z: float
    omega_c: float
    omega_m: float
    omega_s: float

    @property
    def hierarchy_ok(self) -> bool:
        return self.omega_m < self.omega_z < self.omega_c


@dataclass(frozen=True)
class Couplings:
    epsilon: float
    zeta: float
    eta: float
    kappa: float
    lamb_dicke: float
    rabi_s: float

    @classmethod
    def from_strengths(
        cls,
        zeta: float,
        lamb_dicke: float,
        rabi_s: float = 0.0,
        epsilon: float = 0.0,
    ) -> "Couplings":
        """
        Couplings in angular-frequency units with η and κ tied to ζ and λ.
        """
        return cls(
            epsilon=epsilon,
            zeta=zeta,
            eta=lamb_dicke * zeta,
            kappa=2 * zeta * lamb_dicke**2,
            lamb_dicke=lamb_dicke,
            rabi_s=rabi_s,
        )

    @property
    def transfer_strength(self) -> float:
        # g = ε k ℓ
        return self.epsilon * self.lamb_dicke


@dataclass(frozen=True)
class HierarchyReport:
    ratio_zc: float
    ratio_mz: float
    ok: bool


def _require_positive(cfg: TrapConfig) -> None:
    # model_construct skips the validators, so derivations check again.
    for name in ("B", "V0", "d", "g_factor", "electron_charge_mag", "electron_mass"):
        value = getattr(cfg, name)
        if not value > 0:
            raise InvalidConfigError(f"trap {name} must be positive, not {value}")
    if not cfg.hbar > 0:
        raise InvalidConfigError(f"trap hbar must be positive, not {cfg.hbar}")


def derive_frequencies(cfg: TrapConfig) -> ModeFrequencies:
    _require_positive(cfg)
    e, m = cfg.electron_charge_mag, cfg.electron_mass
    omega_z = math.sqrt(e * cfg.V0 / (m * cfg.d**2))
    omega_c = e * cfg.B / m
    freqs = ModeFrequencies(
        omega_z=omega_z,
        omega_c=omega_c,
        omega_m=omega_z**2 / (2 * omega_c),
        omega_s=cfg.g_factor * e * cfg.B / (2 * m),
    )
    if not freqs.hierarchy_ok:
        log.warning(
            "mode hierarchy omega_m < omega_z < omega_c is violated: "
            f"omega_m = {freqs.omega_m:.6g}, omega_z = {freqs.omega_z:.6g}, "
            f"omega_c = {freqs.omega_c:.6g} rad/s"
        )
    return freqs


def oscillator_length(cfg: TrapConfig, omega_z: float) -> float:
    """ℓ = √(ħ / 2 m ω_z)"""
    if not omega_z > 0:
        raise InvalidConfigError("omega_z must be positive")
    return math.sqrt(cfg.hbar / (2 * cfg.electron_mass * omega_z))


def epsilon_per_zeta(cfg: TrapConfig, drv: DriveConfig) -> float:
    """
    ε / ζ, fixed by the trap and the wavevector since both couplings are
    linear in |α|.
    """
    e, m = cfg.electron_charge_mag, cfg.electron_mass
    per_alpha_epsilon = math.sqrt(2 * e**3 * cfg.B / (cfg.hbar * m**2))
    per_alpha_zeta = cfg.g_factor * e * drv.k / (2 * m)
    return per_alpha_epsilon / per_alpha_zeta


def derive_couplings(
    cfg: TrapConfig, drv: DriveConfig, spin: SpinDriveConfig
) -> Couplings:
    freqs = derive_frequencies(cfg)
    if freqs.omega_z == 0:
        raise InvalidConfigError("omega_z vanishes; couplings are undefined")
    e, m = cfg.electron_charge_mag, cfg.electron_mass
    ell = oscillator_length(cfg, freqs.omega_z)
    epsilon = math.sqrt(2 * e**3 * cfg.B / (cfg.hbar * m**2)) * drv.alpha_mag
    zeta = cfg.g_factor * e * drv.alpha_mag * drv.k / (2 * m)
    return Couplings(
        epsilon=epsilon,
        zeta=zeta,
        eta=drv.k * zeta * ell,
        kappa=cfg.hbar * zeta * drv.k**2 / (m * freqs.omega_z),
        lamb_dicke=drv.k * ell,
        rabi_s=cfg.g_factor * e * spin.b / (2 * m),
    )


def exact_radial_frequencies(cfg: TrapConfig) -> t.Tuple[float, float]:
    """
    Trap-modified cyclotron and exact magnetron frequencies
    ω_± = (ω_c ± √(ω_c² − 2ω_z²)) / 2.
    """
    freqs = derive_frequencies(cfg)
    discriminant = freqs.omega_c**2 - 2 * freqs.omega_z**2
    if discriminant < 0:
        raise InvalidConfigError(
            "radial motion is unstable: omega_c^2 < 2 omega_z^2"
        )
    root = math.sqrt(discriminant)
    return (freqs.omega_c + root) / 2, (freqs.omega_c - root) / 2


def hierarchy_report(freqs: ModeFrequencies) -> HierarchyReport:
    return HierarchyReport(
        ratio_zc=freqs.omega_z / freqs.omega_c,
        ratio_mz=freqs.omega_m / freqs.omega_z,
        ok=freqs.hierarchy_ok,
    )


def frequency_band(omega: float) -> str:
    """
    The unit band (Hz, kHz, MHz, GHz, THz) of ω / 2π.
    """
    hertz = abs(omega) / constants.TWO_PI
    for floor, band in constants.FREQUENCY_BANDS:
        if hertz >= floor:
            return band
    return "Hz"


def frequency_ranges(freqs: ModeFrequencies) -> t.Dict[str, str]:
    return {
        "omega_z": frequency_band(freqs.omega_z),
        "omega_c": frequency_band(freqs.omega_c),
        "omega_m": frequency_band(freqs.omega_m),
        "omega_s": frequency_band(freqs.omega_s),
    }


def resonance_detunings(freqs: ModeFrequencies, Omega: float) -> t.Dict[str, float]:  # noqa: N803
    """
    Detuning of a drive at Ω from each resonance it can address.
    """
    return {
        "red-sideband": Omega - (freqs.omega_s - freqs.omega_z),
        "blue-sideband": Omega - (freqs.omega_s + freqs.omega_z),
        "carrier": Omega - freqs.omega_s,
        "transfer": Omega - (freqs.omega_c - freqs.omega_z),
    }


def typeset_transfer_time(cfg: TrapConfig, couplings: Couplings, k: float) -> float:
    """
    Transfer time as the closed form reads when everything sits under one
    root, √(π m ω_z / 2ħεk).  Only reported next to the swap time.
    """
    if not couplings.epsilon > 0:
        raise InvalidConfigError("epsilon must be positive for a transfer time")
    omega_z = derive_frequencies(cfg).omega_z
    return math.sqrt(
        math.pi
        * cfg.electron_mass
        * omega_z
        / (2 * cfg.hbar * couplings.epsilon * k)
    )


def reference_trap() -> TrapConfig:
    return TrapConfig(**constants.REFERENCE_TRAP)


def reference_drive() -> DriveConfig:
    return DriveConfig(**constants.REFERENCE_DRIVE)


def reference_spin_drive() -> SpinDriveConfig:
    return SpinDriveConfig(**constants.REFERENCE_SPIN_DRIVE)
