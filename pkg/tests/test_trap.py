import math
import typing as t

import numpy as np
import pytest
from pydantic import ValidationError

from geonium import constants
from geonium.errors import InvalidConfigError
from geonium.trap import (
    DriveConfig,
    SpinDriveConfig,
    TrapConfig,
    derive_couplings,
    derive_frequencies,
    epsilon_per_zeta,
    exact_radial_frequencies,
    frequency_band,
    frequency_ranges,
    hierarchy_report,
    oscillator_length,
    reference_drive,
    reference_spin_drive,
    reference_trap,
    resonance_detunings,
    typeset_transfer_time,
)


def test_reference_trap_frequencies() -> None:
    freqs = derive_frequencies(reference_trap())
    assert freqs.omega_z == pytest.approx(4.02e8, rel=1e-2)
    assert freqs.omega_c == pytest.approx(1.7588e11, rel=1e-3)
    assert freqs.omega_m == pytest.approx(freqs.omega_z**2 / (2 * freqs.omega_c))
    assert freqs.omega_s / freqs.omega_c == pytest.approx(constants.G_FACTOR / 2)
    assert freqs.hierarchy_ok
    assert frequency_ranges(freqs) == {
        "omega_z": "MHz",
        "omega_c": "GHz",
        "omega_m": "kHz",
        "omega_s": "GHz",
    }


def test_reference_couplings() -> None:
    couplings = derive_couplings(
        reference_trap(), reference_drive(), reference_spin_drive()
    )
    assert couplings.lamb_dicke == pytest.approx(0.1, rel=1e-2)
    assert couplings.eta == pytest.approx(couplings.lamb_dicke * couplings.zeta)
    assert couplings.kappa == pytest.approx(
        2 * couplings.zeta * couplings.lamb_dicke**2, rel=1e-9
    )
    freqs = derive_frequencies(reference_trap())
    assert 1e-4 < couplings.zeta / freqs.omega_z < 1e-2
    assert couplings.rabi_s == pytest.approx(1.76e7, rel=1e-2)
    ratio = epsilon_per_zeta(reference_trap(), reference_drive())
    assert couplings.epsilon == pytest.approx(ratio * couplings.zeta)
    assert couplings.transfer_strength == pytest.approx(
        couplings.epsilon * couplings.lamb_dicke
    )


def test_oscillator_length() -> None:
    cfg = reference_trap()
    omega_z = derive_frequencies(cfg).omega_z
    assert oscillator_length(cfg, omega_z) == pytest.approx(3.795e-7, rel=1e-2)
    with pytest.raises(InvalidConfigError):
        oscillator_length(cfg, 0.0)


def test_unit_constants() -> None:
    # hbar = e = m = 1: omega_z = sqrt(V0)/d, omega_c = B
    cfg = TrapConfig(
        B=10.0, V0=4.0, d=1.0, electron_charge_mag=1.0, electron_mass=1.0, hbar=1.0
    )
    freqs = derive_frequencies(cfg)
    assert freqs.omega_z == pytest.approx(2.0)
    assert freqs.omega_c == pytest.approx(10.0)
    assert freqs.omega_m == pytest.approx(0.2)
    drive = DriveConfig(alpha_mag=0.5, k=2.0)
    couplings = derive_couplings(cfg, drive, SpinDriveConfig(b=1.0))
    assert couplings.lamb_dicke == pytest.approx(2.0 * math.sqrt(1 / 4.0))
    assert couplings.zeta == pytest.approx(constants.G_FACTOR * 0.5 * 2.0 / 2)
    assert couplings.rabi_s == pytest.approx(constants.G_FACTOR / 2)
    assert couplings.epsilon == pytest.approx(math.sqrt(20.0) * 0.5)


def test_trap_validation() -> None:
    with pytest.raises(ValidationError):
        TrapConfig(B=0.0, V0=10.0, d=1e-3)
    with pytest.raises(ValidationError):
        TrapConfig(B=1.0, V0=-1.0, d=1e-3)
    with pytest.raises(ValidationError):
        DriveConfig(alpha_mag=-1.0)
    with pytest.raises(ValidationError):
        DriveConfig(k=0.0)
    with pytest.raises(ValidationError):
        SpinDriveConfig(b=-1e-4)
    # skipping validation still fails at derivation time
    with pytest.raises(InvalidConfigError):
        derive_frequencies(TrapConfig.model_construct(B=1.0, V0=0.0, d=1e-3))


def test_hierarchy_violation() -> None:
    cfg = TrapConfig(B=1.0, V0=1e8, d=3.3e-3)
    freqs = derive_frequencies(cfg)
    assert not freqs.hierarchy_ok
    report = hierarchy_report(freqs)
    assert not report.ok
    assert report.ratio_zc > 1
    with pytest.raises(InvalidConfigError):
        exact_radial_frequencies(cfg)


def test_exact_radial_frequencies() -> None:
    cfg = reference_trap()
    freqs = derive_frequencies(cfg)
    omega_plus, omega_minus = exact_radial_frequencies(cfg)
    assert omega_plus + omega_minus == pytest.approx(freqs.omega_c)
    # omega_minus agrees with the approximate magnetron frequency to O(ratio^2)
    assert omega_minus == pytest.approx(freqs.omega_m, rel=1e-4)


def test_frequency_band() -> None:
    assert frequency_band(2 * math.pi * 5.0) == "Hz"
    assert frequency_band(2 * math.pi * 5e3) == "kHz"
    assert frequency_band(2 * math.pi * 5e6) == "MHz"
    assert frequency_band(2 * math.pi * 5e9) == "GHz"


def test_resonance_detunings() -> None:
    freqs = derive_frequencies(reference_trap())
    detunings = resonance_detunings(freqs, freqs.omega_s - freqs.omega_z)
    assert detunings["red-sideband"] == 0.0
    assert detunings["blue-sideband"] == pytest.approx(-2 * freqs.omega_z)
    assert detunings["carrier"] == pytest.approx(-freqs.omega_z)


def test_typeset_transfer_time() -> None:
    cfg = reference_trap()
    couplings = derive_couplings(cfg, reference_drive(), reference_spin_drive())
    assert typeset_transfer_time(cfg, couplings, reference_drive().k) > 0
    idle = derive_couplings(cfg, DriveConfig(), SpinDriveConfig())
    with pytest.raises(InvalidConfigError):
        typeset_transfer_time(cfg, idle, 1.0)


def random_setup(seed: int) -> t.Tuple[TrapConfig, DriveConfig]:
    rng = np.random.default_rng(seed)
    trap = TrapConfig(
        B=float(rng.uniform(0.5, 6.0)),
        V0=float(rng.uniform(1.0, 20.0)),
        d=float(rng.uniform(1e-3, 5e-3)),
    )
    drive = DriveConfig(
        alpha_mag=float(10 ** rng.uniform(-12, -10)),
        k=float(10 ** rng.uniform(5, 6)),
    )
    return trap, drive


@pytest.mark.parametrize("seed", range(8))
def test_kappa_is_twice_zeta_lambda_squared(seed: int) -> None:
    trap, drive = random_setup(seed)
    couplings = derive_couplings(trap, drive, SpinDriveConfig())
    assert couplings.kappa == pytest.approx(
        2 * couplings.zeta * couplings.lamb_dicke**2, rel=1e-12
    )
    assert couplings.eta == pytest.approx(
        couplings.lamb_dicke * couplings.zeta, rel=1e-12
    )


@pytest.mark.parametrize("seed", range(8))
def test_couplings_are_linear_in_alpha(seed: int) -> None:
    trap, drive = random_setup(seed)
    factor = float(np.random.default_rng(seed + 100).uniform(0.1, 10.0))
    scaled = DriveConfig(alpha_mag=drive.alpha_mag * factor, k=drive.k)
    base = derive_couplings(trap, drive, SpinDriveConfig())
    more = derive_couplings(trap, scaled, SpinDriveConfig())
    assert more.epsilon == pytest.approx(factor * base.epsilon, rel=1e-12)
    assert more.zeta == pytest.approx(factor * base.zeta, rel=1e-12)
    # λ does not depend on the drive strength
    assert more.lamb_dicke == pytest.approx(base.lamb_dicke, rel=1e-12)
