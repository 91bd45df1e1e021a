from pathlib import Path


class IseError(Exception): ...


class DomainError(IseError):
    """Physics or estimation input that the model cannot handle."""


class InputError(IseError):
    """Malformed configuration or data file supplied by the user."""


class DegenerateDetuning(DomainError):
    def __init__(self, where: str) -> None:
        super().__init__(f"vanishing detuning denominator in {where}")
        self.where = where


class SingularPoint(DomainError):
    def __init__(self, s: float) -> None:
        super().__init__(
            f"f(s) is singular at s = {s:.6g} (V/m)^2 where Δc = βs",
        )
        self.s = s


class InvalidModelInput(DomainError): ...


class NonPositiveFluorescence(DomainError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(
            f"fluorescence must be strictly positive, got {value!r} "
            f"at grid index {index}",
        )
        self.index = index
        self.value = value


class WindowOutOfCell(DomainError):
    def __init__(self, channel: int, lower: float, upper: float) -> None:
        super().__init__(
            f"window of channel {channel} spans [{lower:.6g}, {upper:.6g}] m "
            "which is outside the sampled domain",
        )
        self.channel = channel
        self.lower = lower
        self.upper = upper


class ZeroSignalPower(DomainError): ...


class InsufficientSamples(DomainError):
    def __init__(self, samples: int, order: int) -> None:
        super().__init__(
            f"need samples > order >= 1, got {samples} samples "
            f"for order {order}",
        )
        self.samples = samples
        self.order = order


class RootfindingFailure(DomainError): ...


class InsufficientSignalRoots(DomainError):
    def __init__(self, found: int, wanted: int) -> None:
        super().__init__(
            f"found {found} valid signal root pair(s), wanted {wanted}",
        )
        self.found = found
        self.wanted = wanted


class SingularCovariance(DomainError): ...


class SingularNuisanceBlock(DomainError): ...


class EndFireSingularity(DomainError):
    def __init__(self, angle: float) -> None:
        super().__init__(
            f"angle {angle:.6g} rad is at or beyond end-fire, "
            "the bound diverges",
        )
        self.angle = angle


class ConfigParseError(InputError):
    def __init__(
        self,
        message: str,
        *,
        path: Path,
        line: int | None = None,
        column: int | None = None,
        keys: tuple[str, ...] = (),
    ) -> None:
        where = str(path)
        if line is not None:
            where = f"{where}:{line}"
            if column is not None:
                where = f"{where}:{column}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.column = column
        self.keys = keys


class SchemaError(InputError):
    def __init__(self, message: str, *, path: Path, row: int) -> None:
        super().__init__(f"{path}: row {row}: {message}")
        self.path = path
        self.row = row
