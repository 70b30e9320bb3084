import typing as t

import numpy as np
import numpy.typing as npt

# Dense complex arrays: state amplitudes, operator matrices and 4x4 gate restrictions.
ComplexArray = npt.NDArray[np.complex128]
RealArray = npt.NDArray[np.float64]

# The four register amplitudes (alpha, beta, gamma, delta) on |0↓>, |0↑>, |1↓>, |1↑>.
Amplitudes = t.Tuple[complex, complex, complex, complex]

# A time-indexed Hamiltonian builder, as consumed by `linalg.evolve_timedep`.
HamiltonianBuilder = t.Callable[[float], "Operator"]

if t.TYPE_CHECKING:
    from .linalg import Operator
