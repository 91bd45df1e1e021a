from collections.abc import Callable

import numpy as np
import numpy.typing as npt

type FloatArray = npt.NDArray[np.float64]
type ComplexArray = npt.NDArray[np.complex128]
type FloatLike = float | FloatArray

# x [m] -> α [1/m], vectorized over the grid
type AbsorptionProfile = Callable[[FloatArray], FloatArray]
