"""TOML run configuration with unit-suffixed keys."""

import math
import re
import tomllib
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    PrivateAttr,
    ValidationError,
    model_validator,
)
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from .exc import ConfigParseError
from .models.atomic import AtomicParams
from .models.estimation import OrderSelection, PronyConfig
from .models.experiments import (
    SamplingDemoConfig,
    ScenarioConfig,
    Sweep,
    SweepAxis,
)
from .models.geometry import SensorGeometry
from .models.measurement import MeasurementSource
from .models.scene import PlaneWave, RfScene

TwoPi = 2.0 * math.pi
_TomlPosition = re.compile(r"line (\d+), column (\d+)")


class Study(StrEnum):
    Linearization = "linearization"
    MonteCarlo = "monte_carlo"
    Crlb = "crlb"
    Sampling = "sampling"
    Measurement = "measurement"


class OutputFormat(StrEnum):
    Csv = "csv"
    Json = "json"


class Verbosity(StrEnum):
    Debug = "debug"
    Info = "info"
    Warning = "warning"


class Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AtomicSection(Section):
    """Reference atomic defaults; ``_hz`` keys are ordinary frequencies."""

    atom_density_per_m3: PositiveFloat = 4.13e13
    probe_dipole_cm: PositiveFloat = 1.06e-29
    rf_dipole_cm: PositiveFloat = 7.85e-26
    decay_21_hz: PositiveFloat = 6.066e6
    coupling_rabi_hz: PositiveFloat = 40e6
    probe_detuning_hz: float = 0.0
    coupling_detuning_hz: float = 10e3
    rf_detuning_hz: float = 0.0
    probe_wavelength_m: PositiveFloat = 780.24e-9

    def to_params(self) -> AtomicParams:
        return AtomicParams(
            atom_density=self.atom_density_per_m3,
            probe_dipole=self.probe_dipole_cm,
            rf_dipole=self.rf_dipole_cm,
            decay_21=TwoPi * self.decay_21_hz,
            coupling_rabi=TwoPi * self.coupling_rabi_hz,
            probe_detuning=TwoPi * self.probe_detuning_hz,
            coupling_detuning=TwoPi * self.coupling_detuning_hz,
            rf_detuning=TwoPi * self.rf_detuning_hz,
            probe_wavelength=self.probe_wavelength_m,
        )


class SignalSection(Section):
    angle_deg: Annotated[float, Field(ge=-90.0, le=90.0)]
    amplitude_v_per_m: NonNegativeFloat
    phase_deg: float = 0.0


class SceneSection(Section):
    carrier_frequency_hz: PositiveFloat = 2.03e9
    lo_angle_deg: Annotated[float, Field(ge=-90.0, le=90.0)] = 90.0
    lo_phase_deg: float = 0.0
    lo_amplitude_v_per_m: PositiveFloat | None = None
    lo_ratio: PositiveFloat | None = None
    signals: list[SignalSection] = []

    @model_validator(mode="after")
    def check_lo(self) -> Self:
        if (self.lo_amplitude_v_per_m is None) == (self.lo_ratio is None):
            raise ValueError(
                "give exactly one of lo_amplitude_v_per_m or lo_ratio",
            )
        total = sum(s.amplitude_v_per_m for s in self.signals)
        if self.lo_ratio is not None and total == 0.0:
            raise ValueError("lo_ratio needs at least one non-zero signal")
        return self

    def to_scene(self) -> RfScene:
        total = sum(s.amplitude_v_per_m for s in self.signals)
        amplitude = self.lo_amplitude_v_per_m or (self.lo_ratio or 0) * total
        return RfScene(
            lo=PlaneWave.from_degrees(
                amplitude,
                self.lo_angle_deg,
                self.lo_phase_deg,
            ),
            signals=tuple(
                PlaneWave.from_degrees(
                    s.amplitude_v_per_m,
                    s.angle_deg,
                    s.phase_deg,
                )
                for s in self.signals
            ),
            carrier_freq=self.carrier_frequency_hz,
        )


class GeometrySection(Section):
    """Each length in metres (``_m``) or RF wavelengths, never both."""

    cell_length_m: PositiveFloat | None = None
    cell_length_wavelengths: PositiveFloat | None = None
    window_width_m: PositiveFloat | None = None
    window_width_wavelengths: PositiveFloat | None = None
    spacing_m: PositiveFloat | None = None
    spacing_wavelengths: PositiveFloat | None = None
    first_center_m: float | None = None
    first_center_wavelengths: float | None = None
    channel_count: Annotated[int | None, Field(ge=2)] = None
    grid_points_per_wavelength: PositiveInt = 256

    @model_validator(mode="after")
    def check_units(self) -> Self:
        for name in ("cell_length", "window_width", "spacing"):
            given = self._given(name)
            if given != 1:
                raise ValueError(
                    f"give exactly one of {name}_m or {name}_wavelengths",
                )
        if self._given("first_center") > 1:
            raise ValueError(
                "give at most one of first_center_m or "
                "first_center_wavelengths",
            )
        return self

    def _given(self, name: str) -> int:
        return sum(
            getattr(self, f"{name}_{unit}") is not None
            for unit in ("m", "wavelengths")
        )

    def _metres(self, name: str, wavelength: float) -> float | None:
        metres = getattr(self, f"{name}_m")
        if metres is not None:
            return float(metres)
        waves = getattr(self, f"{name}_wavelengths")
        return None if waves is None else float(waves) * wavelength

    def to_geometry(self, wavelength: float) -> SensorGeometry:
        cell_length = self._metres("cell_length", wavelength)
        window_width = self._metres("window_width", wavelength)
        spacing = self._metres("spacing", wavelength)
        if cell_length is None or window_width is None or spacing is None:
            raise ValueError("incomplete geometry")
        return SensorGeometry.fitted(
            cell_length,
            window_width,
            spacing,
            first_center=self._metres("first_center", wavelength),
            channel_count=self.channel_count,
            grid_points_per_rf_wavelength=self.grid_points_per_wavelength,
        )


class PronySection(Section):
    model_order: PositiveInt | None = None
    target_count: PositiveInt | None = None
    unit_circle_tolerance: Annotated[float, Field(gt=0.0, lt=1.0)] = 0.2
    order_selection: OrderSelection = OrderSelection.Fixed
    sv_threshold: Annotated[float, Field(gt=0.0, lt=1.0)] = 1e-3
    real_tones: bool = False

    def to_prony(self, signal_count: int) -> PronyConfig:
        """Defaults: N from the scene, p = 2N."""
        target_count = self.target_count
        if (
            target_count is None
            and self.order_selection is OrderSelection.Fixed
        ):
            target_count = signal_count or None
        model_order = self.model_order or 2 * (target_count or 1)
        return PronyConfig(
            model_order=model_order,
            target_count=target_count,
            unit_circle_tolerance=self.unit_circle_tolerance,
            order_selection=self.order_selection,
            sv_threshold=self.sv_threshold,
            real_tones=self.real_tones,
        )


class RunSection(Section):
    snr_db: float | None = 30.0
    trials: PositiveInt = 100
    base_seed: int = 0
    measurement_source: MeasurementSource = MeasurementSource.AnalyticModel
    threads: PositiveInt = 1


class SweepSection(Section):
    study: Study
    axis: SweepAxis | None = None
    values: list[PositiveFloat] = []

    @model_validator(mode="after")
    def check_axis(self) -> Self:
        if self.study is Study.MonteCarlo and self.axis is None:
            raise ValueError("a monte_carlo study needs an axis")
        if self.values and self.axis is None:
            raise ValueError("sweep values need an axis")
        return self


class SamplingDemoSection(Section):
    cell_length_wavelengths: PositiveFloat = 16.0
    aliasing_target_deg: float = 60.0
    aliasing_spacings_wavelengths: tuple[PositiveFloat, PositiveFloat] = (
        0.25,
        0.5,
    )
    aliasing_window_wavelengths: PositiveFloat = 0.25
    null_target_deg: float = 0.0
    null_widths_wavelengths: tuple[PositiveFloat, PositiveFloat] = (
        0.25,
        1.0,
    )
    null_spacing_wavelengths: PositiveFloat = 0.25
    angle_step_deg: PositiveFloat = 0.25

    def to_demo(self) -> SamplingDemoConfig:
        return SamplingDemoConfig(
            cell_length=self.cell_length_wavelengths,
            aliasing_target=self.aliasing_target_deg,
            aliasing_spacings=self.aliasing_spacings_wavelengths,
            aliasing_window=self.aliasing_window_wavelengths,
            null_target=self.null_target_deg,
            null_widths=self.null_widths_wavelengths,
            null_spacing=self.null_spacing_wavelengths,
            angle_step=self.angle_step_deg,
        )


class OutputSection(Section):
    directory: Path = Path("out")
    format: OutputFormat = OutputFormat.Csv
    verbosity: Verbosity = Verbosity.Info


def _dotted(location: tuple[int | str, ...]) -> str:
    return ".".join(str(part) for part in location)


def _parse_error(
    err: ValidationError,
    path: Path,
    prefix: tuple[str, ...] = (),
) -> ConfigParseError:
    keys = tuple(_dotted((*prefix, *e["loc"])) for e in err.errors())
    details = "; ".join(
        f"{key or '<root>'}: {e['msg']}"
        for key, e in zip(keys, err.errors(), strict=True)
    )
    return ConfigParseError(details, path=path, keys=keys)


class RunConfig(BaseSettings):
    model_config = SettingsConfigDict(extra="forbid", frozen=True)

    atomic: AtomicSection = AtomicSection()
    scene: SceneSection
    geometry: GeometrySection
    prony: PronySection = PronySection()
    run: RunSection = RunSection()
    sweep: SweepSection | None = None
    sampling_demo: SamplingDemoSection = SamplingDemoSection()
    output: OutputSection = OutputSection()

    _path: Path = PrivateAttr(default=Path("<memory>"))

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @classmethod
    def from_toml(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config not found at {path}")
        try:
            data = TomlConfigSettingsSource(cls, toml_file=path)()
        except tomllib.TOMLDecodeError as err:
            match = _TomlPosition.search(str(err))
            raise ConfigParseError(
                str(err),
                path=path,
                line=int(match.group(1)) if match else None,
                column=int(match.group(2)) if match else None,
            ) from err
        try:
            config = cls(**data)
        except ValidationError as err:
            raise _parse_error(err, path) from err
        config._path = path  # noqa: SLF001
        return config

    @property
    def path(self) -> Path:
        return self._path

    @contextmanager
    def _section(self, name: str) -> Iterator[None]:
        try:
            yield
        except (ValidationError, ValueError) as err:
            if isinstance(err, ValidationError):
                raise _parse_error(err, self._path, (name,)) from err
            raise ConfigParseError(
                str(err),
                path=self._path,
                keys=(name,),
            ) from err

    def to_params(self) -> AtomicParams:
        with self._section("atomic"):
            return self.atomic.to_params()

    def to_scene(self) -> RfScene:
        with self._section("scene"):
            return self.scene.to_scene()

    def to_geometry(self) -> SensorGeometry:
        wavelength = self.to_scene().wavelength
        with self._section("geometry"):
            return self.geometry.to_geometry(wavelength)

    def to_prony(self) -> PronyConfig:
        with self._section("prony"):
            return self.prony.to_prony(len(self.scene.signals))

    def to_sweep(self) -> Sweep | None:
        if self.sweep is None or self.sweep.axis is None:
            return None
        if not self.sweep.values:
            return None
        with self._section("sweep"):
            return Sweep(axis=self.sweep.axis, values=self.sweep.values)

    def to_scenario(self) -> ScenarioConfig:
        scene, geometry = self.to_scene(), self.to_geometry()
        prony, params, sweep = (
            self.to_prony(),
            self.to_params(),
            self.to_sweep(),
        )
        with self._section("run"):
            return ScenarioConfig(
                scene=scene,
                geometry=geometry,
                prony=prony,
                params=params,
                snr_db=self.run.snr_db,
                trials=self.run.trials,
                base_seed=self.run.base_seed,
                source=self.run.measurement_source,
                threads=self.run.threads,
                sweep=sweep,
            )

    def to_demo(self) -> SamplingDemoConfig:
        with self._section("sampling_demo"):
            return self.sampling_demo.to_demo()

    def with_overrides(
        self,
        *,
        out: Path | None = None,
        seed: int | None = None,
        threads: int | None = None,
        order: int | None = None,
        fmt: OutputFormat | None = None,
    ) -> "RunConfig":
        """Command-line flags take precedence over the file."""
        run = self.run.model_copy(
            update={
                k: v
                for k, v in (("base_seed", seed), ("threads", threads))
                if v is not None
            },
        )
        output = self.output.model_copy(
            update={
                k: v
                for k, v in (("directory", out), ("format", fmt))
                if v is not None
            },
        )
        prony = (
            self.prony
            if order is None
            else self.prony.model_copy(update={"model_order": order})
        )
        updated = self.model_copy(
            update={"run": run, "output": output, "prony": prony},
        )
        updated._path = self._path  # noqa: SLF001
        return updated
