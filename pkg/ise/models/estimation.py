import math
from enum import StrEnum
from typing import Annotated, Any, Self

import numpy as np
from pydantic import Field, model_validator

from .base import FrozenModel, NDComplex, NDFloat


class OrderSelection(StrEnum):
    Fixed = "fixed"
    SingularValueThreshold = "singular_value_threshold"


class PronyConfig(FrozenModel):
    model_order: Annotated[int, Field(ge=1, description="p")]
    target_count: Annotated[
        int | None,
        Field(ge=1, description="N; None lets the order decide"),
    ] = None
    unit_circle_tolerance: Annotated[float, Field(gt=0.0, lt=1.0)] = 0.2
    order_selection: OrderSelection = OrderSelection.Fixed
    sv_threshold: Annotated[float, Field(gt=0.0, lt=1.0)] = 1e-3
    real_tones: Annotated[
        bool,
        Field(description="self-reciprocal predictor, roots on |z| = 1"),
    ] = False

    @model_validator(mode="after")
    def check_order(self) -> Self:
        if self.real_tones and self.model_order % 2:
            raise ValueError("the real-tone predictor needs an even order")
        if (
            self.target_count is not None
            and self.model_order < 2 * self.target_count
        ):
            raise ValueError(
                f"model order {self.model_order} must be at least "
                f"2N = {2 * self.target_count}",
            )
        return self

    @classmethod
    def for_targets(
        cls,
        target_count: int,
        guard: int = 0,
        *,
        real_tones: bool = False,
    ) -> "PronyConfig":
        return cls(
            model_order=2 * target_count + guard,
            target_count=target_count,
            real_tones=real_tones,
        )

    def with_order(self, model_order: int) -> "PronyConfig":
        return type(self).model_validate(
            {**self.model_dump(), "model_order": model_order},
        )


class EstimationResult(FrozenModel):
    spatial_frequencies: Annotated[NDFloat, Field(description="Δk̂, rad/m")]
    doas: Annotated[NDFloat, Field(description="θ̂, rad")]
    roots: NDComplex
    lpc_coefficients: NDFloat
    lpc_residual_norm: float
    rank_deficient: bool = False
    clamped_flags: tuple[bool, ...]
    model_order: int

    @property
    def doas_deg(self) -> list[float]:
        return [math.degrees(float(t)) for t in self.doas]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "model_order": self.model_order,
            "spatial_frequencies_rad_per_m": self.spatial_frequencies,
            "doas_rad": self.doas,
            "doas_deg": np.degrees(self.doas),
            "roots": [[float(z.real), float(z.imag)] for z in self.roots],
            "lpc_coefficients": self.lpc_coefficients,
            "lpc_residual_norm": self.lpc_residual_norm,
            "rank_deficient": self.rank_deficient,
            "clamped_flags": list(self.clamped_flags),
        }
