import math
import typing as t

# Free-electron g-factor used when a configuration does not set one.
G_FACTOR = 2.0023193

# Default Fock truncations for gate simulations.
DEFAULT_AXIAL_DIM = 12
DEFAULT_CYCLOTRON_DIM = 6

# Operator trigonometry is evaluated on at least this many axial levels and then
# restricted to the simulated block.
TRIG_WORK_DIM = 40

# Relative hermiticity tolerance: max|M - M^H| <= HERMITIAN_TOL * max(1, max|M|).
HERMITIAN_TOL = 1e-12

# Population allowed in the top two levels of a truncated mode.
TRUNCATION_TOL = 1e-6
TRUNCATION_LEVELS = 2

# Below this, amplitudes and pulse durations count as zero.
AMPLITUDE_TOL = 1e-12

# Sampling density of lab-frame integrations: midpoint steps per period of the
# fastest significant oscillation.
POINTS_PER_PERIOD = 40
# Interaction-picture entries smaller than this fraction of their drive term's
# largest entry do not set the integration step.
SIGNIFICANT_ENTRY = 1e-3

# Phase of the swapped amplitude: |1>_z|0>_c -> TRANSFER_SWAP_PHASE * |0>_z|1>_c.
TRANSFER_SWAP_PHASE = 1.0

# RWA benchmark defaults.
RWA_SCALES = (1e-3, 2e-3, 5e-3, 1e-2)
RWA_AXIAL_DIM = 6
RWA_SIDEBAND_LAMB_DICKE = 0.01
RWA_CARRIER_LAMB_DICKE = 0.3
RWA_SLOPE = 2.0
RWA_SLOPE_TOL = 0.3

# Reference trap: lands in the MHz / GHz / kHz ranges with a Lamb-Dicke
# parameter near 0.1 and zeta / omega_z near 1e-3.
REFERENCE_TRAP: t.Dict[str, float] = {"B": 1.0, "V0": 10.0, "d": 3.3e-3}
REFERENCE_DRIVE: t.Dict[str, float] = {
    "alpha_mag": 8.7e-12,
    "k": 2.635e5,
    "Omega": 1.7608e11,
}
REFERENCE_SPIN_DRIVE: t.Dict[str, float] = {"b": 1e-4}

# Default pass/fail thresholds for the command line.
FIDELITY_THRESHOLD = 0.99
LEAKAGE_THRESHOLD = 1e-6
PHASE_TOLERANCE = 1e-6
FULL_PHASE_TOLERANCE = 0.1

# Frequency bands for reporting omega / 2 pi.
FREQUENCY_BANDS = (
    (1e12, "THz"),
    (1e9, "GHz"),
    (1e6, "MHz"),
    (1e3, "kHz"),
    (0.0, "Hz"),
)

TWO_PI = 2 * math.pi

# Exit codes of the command line.
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_THRESHOLD = 2
EXIT_INFEASIBLE = 3
EXIT_UNREACHABLE = 4

OUTPUT_FLOAT_FORMAT = "%.12g"
