"""
Readout: swap the axial qubit into the cyclotron mode, then sample (n_c, s)
through the magnetic-bottle shift of the axial frequency.
"""

import logging
import math
import typing as t
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import constants
from .errors import InvalidInputError, MeasurementDegenerateError, PreconditionWarning
from .hamiltonians import transfer
from .linalg import SPIN_DOWN, SPIN_UP, HilbertSpec, Mode, StateVector, propagator

log = logging.getLogger("geoniumlogger")


@dataclass(frozen=True)
class BottleConfig:
    omega_tilde: float = 1.0
    g_factor: float = constants.G_FACTOR

    def __post_init__(self) -> None:
        if not self.omega_tilde > 0:
            raise InvalidInputError("omega_tilde must be positive")


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    n_c: int
    s: int
    probability: float
    shift: float
    post_state: StateVector
    seed: t.Optional[int] = None


def transfer_time(g_strength: float) -> float:
    """
    First full-swap time of the axial-cyclotron beam splitter, g t = π/2.
    """
    if not g_strength > 0:
        raise InvalidInputError(f"transfer strength must be positive, not {g_strength}")
    return (math.pi / 2) / g_strength


def locate_swap_time(g_strength: float, scan_points: int = 64) -> float:
    """
    Find the first maximum of |<0_z 1_c|ψ(t)>|² from |1_z 0_c> numerically:
    scan one period, then solve d/dt = 0 with brentq on the bracketing
    interval.
    """
    if not g_strength > 0:
        raise InvalidInputError(f"transfer strength must be positive, not {g_strength}")
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=2)
    h = transfer(spec, g_strength)
    eigenvalues, vectors = np.linalg.eigh(h.matrix)
    start = spec.basis_state(SPIN_DOWN, n_z=1, n_c=0).amplitudes
    target = spec.basis_state(SPIN_DOWN, n_z=0, n_c=1).amplitudes
    weights = (target.conj() @ vectors) * (vectors.conj().T @ start)

    def overlap(time: float) -> complex:
        return complex(np.sum(weights * np.exp(-1j * eigenvalues * time)))

    def population(time: float) -> float:
        return abs(overlap(time)) ** 2

    def slope(time: float) -> float:
        rate = complex(np.sum(-1j * eigenvalues * weights * np.exp(-1j * eigenvalues * time)))
        return 2 * (overlap(time).conjugate() * rate).real

    horizon = constants.TWO_PI / float(np.max(np.abs(eigenvalues)))
    grid = np.linspace(0.0, horizon, scan_points)
    values = [population(time) for time in grid]
    for i in range(1, scan_points - 1):
        if values[i] >= values[i - 1] and values[i] >= values[i + 1]:
            return float(brentq(slope, grid[i - 1], grid[i + 1], xtol=1e-15 * horizon))
    raise MeasurementDegenerateError("no swap maximum inside the scan window")


def _warn_precondition(message: str) -> None:
    log.warning(message)
    warnings.warn(message, PreconditionWarning, stacklevel=3)


def readout_transfer(state: StateVector, g_strength: float) -> StateVector:
    """
    Swap |n_z>|0_c> into |0_z>|n_c> for n_z in {0, 1}.  Other inputs are
    evolved anyway, with a precondition warning.
    """
    spec = state.spec
    axial = state.populations(Mode.AXIAL)
    cyclotron = state.populations(Mode.CYCLOTRON)
    outside = float(axial[2:].sum())
    if outside > 1e-6:
        _warn_precondition(f"axial levels above 1 hold {outside:.3g} population")
    excited = float(cyclotron[1:].sum())
    if excited > 1e-6:
        _warn_precondition(f"cyclotron is not in its ground state ({excited:.3g} excited)")
    result = propagator(transfer(spec, g_strength), transfer_time(g_strength)) @ state
    ground = float(result.populations(Mode.AXIAL)[0])
    if ground < 1 - 1e-6:
        log.warning(f"axial ground state holds only {ground:.9g} after transfer")
    return result


def thermalize_axial(state: StateVector) -> StateVector:
    """
    Reset the axial mode to |0>_z by projection.  Population that was still
    in the axial mode is discarded and reported.
    """
    tensor = np.array(state.tensor())
    kept = float(np.sum(np.abs(tensor[:, 0]) ** 2))
    if kept < 1e-15:
        raise MeasurementDegenerateError("nothing left in the axial ground state")
    residual = 1 - kept
    if residual > 1e-6:
        log.warning(f"axial reset discards {residual:.3g} population")
    tensor[:, 1:] = 0
    return StateVector(state.spec, tensor.reshape(-1)).normalize()


def axial_shift(n_c: int, s: int, bottle: BottleConfig = BottleConfig()) -> float:
    """Δω_z = ω̃_z (g s / 4 + n_c + 1/2)"""
    if s not in (-1, 1):
        raise InvalidInputError(f"s must be +1 or -1, not {s}")
    if n_c < 0:
        raise InvalidInputError(f"n_c must not be negative, not {n_c}")
    return bottle.omega_tilde * (bottle.g_factor * s / 4 + n_c + 0.5)


def projective_measure(
    state: StateVector,
    rng_seed: t.Union[int, np.random.SeedSequence, None],
    bottle: BottleConfig = BottleConfig(),
) -> MeasurementRecord:
    """
    Sample (n_c, s) by the Born rule over the (spin, cyclotron) marginal and
    collapse the state onto the outcome.
    """
    tensor = state.tensor()
    marginal = np.sum(np.abs(tensor) ** 2, axis=(1, 3))
    total = float(marginal.sum())
    if total < 1e-15:
        raise MeasurementDegenerateError(f"total probability {total:.3g} is degenerate")
    probabilities = marginal.ravel() / total
    rng = np.random.default_rng(rng_seed)
    outcome = int(rng.choice(probabilities.size, p=probabilities))
    spin, n_c = divmod(outcome, state.spec.cyclotron_dim)
    s = 1 if spin == SPIN_UP else -1
    collapsed = np.zeros_like(tensor)
    collapsed[spin, :, n_c, :] = tensor[spin, :, n_c, :]
    return MeasurementRecord(
        n_c=n_c,
        s=s,
        probability=float(probabilities[outcome]),
        shift=axial_shift(n_c, s, bottle),
        post_state=StateVector(state.spec, collapsed.reshape(-1)).normalize(),
        seed=rng_seed if isinstance(rng_seed, int) else None,
    )


def shot_seeds(seed: int, shots: int) -> t.List[int]:
    """Independent per-shot seeds derived from one master seed."""
    if shots < 1:
        raise InvalidInputError(f"shots must be at least 1, not {shots}")
    state = np.random.SeedSequence(seed).generate_state(shots, dtype=np.uint64)
    return [int(value) for value in state]


def measure_shots(
    state: StateVector,
    shots: int,
    seed: int,
    bottle: BottleConfig = BottleConfig(),
) -> t.List[MeasurementRecord]:
    return [projective_measure(state, child, bottle) for child in shot_seeds(seed, shots)]


@dataclass(frozen=True)
class OutcomeStatistics:
    n_c: int
    s: int
    count: int
    frequency: float
    expected: float
    sigma: float

    @property
    def within_bounds(self) -> bool:
        return abs(self.frequency - self.expected) <= 3 * self.sigma + 1e-12


def expected_outcomes(state: StateVector) -> t.Dict[t.Tuple[int, int], float]:
    """Born probabilities of every (n_c, s) outcome."""
    marginal = np.sum(np.abs(state.tensor()) ** 2, axis=(1, 3))
    return {
        (n_c, 1 if spin == SPIN_UP else -1): float(marginal[spin, n_c])
        for spin in (SPIN_UP, SPIN_DOWN)
        for n_c in range(state.spec.cyclotron_dim)
    }


def outcome_statistics(
    records: t.Sequence[MeasurementRecord],
    expected: t.Mapping[t.Tuple[int, int], float],
) -> t.List[OutcomeStatistics]:
    """
    Empirical frequency of each outcome that was observed or expected, with
    the binomial standard deviation of the expected probability.
    """
    shots = len(records)
    if shots == 0:
        raise InvalidInputError("no measurement records")
    counts: t.Dict[t.Tuple[int, int], int] = {}
    for record in records:
        key = (record.n_c, record.s)
        counts[key] = counts.get(key, 0) + 1
    keys = sorted(
        {key for key, p in expected.items() if p > 1e-12} | set(counts),
        key=lambda key: (key[0], -key[1]),
    )
    rows = []
    for n_c, s in keys:
        p = expected.get((n_c, s), 0.0)
        count = counts.get((n_c, s), 0)
        rows.append(
            OutcomeStatistics(
                n_c=n_c,
                s=s,
                count=count,
                frequency=count / shots,
                expected=p,
                sigma=math.sqrt(p * (1 - p) / shots),
            )
        )
    return rows
