from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, PlainSerializer
from pydantic.functional_validators import PlainValidator

from ..typedefs import ComplexArray, FloatArray


def ensure_float_array(value: Any) -> FloatArray:
    if value is None:
        raise ValueError("expected an array of floats")
    array = np.array(value, dtype=np.float64)
    array.setflags(write=False)
    return array


def ensure_complex_array(value: Any) -> ComplexArray:
    if value is None:
        raise ValueError("expected an array of complex values")
    array = np.array(value, dtype=np.complex128)
    array.setflags(write=False)
    return array


def dump_complex(value: ComplexArray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in value.ravel()]


NDFloat = Annotated[
    FloatArray,
    PlainValidator(ensure_float_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
NDComplex = Annotated[
    ComplexArray,
    PlainValidator(ensure_complex_array),
    PlainSerializer(dump_complex, return_type=list),
]


class FrozenModel(BaseModel):
    """Immutable value object; array fields are stored read-only."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        arbitrary_types_allowed=True,
    )
