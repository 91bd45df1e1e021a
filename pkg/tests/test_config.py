import math
from pathlib import Path

import pytest

from ise.config import OutputFormat, RunConfig, Study
from ise.exc import ConfigParseError
from ise.models.atomic import AtomicParams
from ise.models.estimation import OrderSelection
from ise.models.experiments import SweepAxis
from ise.models.measurement import MeasurementSource

MinimalToml = """\
[scene]
lo_ratio = 20.0

[[scene.signals]]
angle_deg = -30.0
amplitude_v_per_m = 5e-7

[[scene.signals]]
angle_deg = 45.0
amplitude_v_per_m = 5e-7

[geometry]
cell_length_wavelengths = 4.0
window_width_wavelengths = 0.25
spacing_wavelengths = 0.25
"""


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "name",
    [
        "linearization",
        "lo_ratio",
        "snr",
        "length",
        "sampling",
        "measurement",
        "reference",
    ],
)
def test_bundled_configs_load(config_dir: Path, name: str) -> None:
    path = config_dir / f"{name}.toml"
    config = RunConfig.from_toml(path)
    assert config.path == path
    scenario = config.to_scenario()
    assert scenario.geometry.channel_count >= 2
    assert scenario.scene.signal_count >= 1


def test_reference_defaults_match_atomic_params(config_dir: Path) -> None:
    config = RunConfig.from_toml(config_dir / "reference.toml")
    params, defaults = config.to_params(), AtomicParams()
    assert params.decay_21 == pytest.approx(defaults.decay_21)
    assert params.coupling_rabi == pytest.approx(defaults.coupling_rabi)
    assert params.coupling_detuning == pytest.approx(
        defaults.coupling_detuning,
    )
    assert params.atom_density == defaults.atom_density
    assert config.run.measurement_source is (
        MeasurementSource.SimulatedFluorescence
    )
    assert config.output.format is OutputFormat.Csv


def test_minimal_config_defaults(tmp_path: Path) -> None:
    config = RunConfig.from_toml(write(tmp_path, MinimalToml))
    scene = config.to_scene()
    assert scene.lo.amplitude == pytest.approx(20.0 * 1e-6)
    assert scene.lo.angle == pytest.approx(math.pi / 2)
    geometry = config.to_geometry()
    assert geometry.channel_count == 16
    assert geometry.window_width == pytest.approx(scene.wavelength / 4)
    prony = config.to_prony()
    assert (prony.model_order, prony.target_count) == (4, 2)
    assert config.sweep is None
    assert config.to_sweep() is None
    assert config.run.snr_db == 30.0


def test_sweep_section(tmp_path: Path) -> None:
    text = MinimalToml + (
        '\n[sweep]\nstudy = "monte_carlo"\naxis = "snr_db"\n'
        "values = [10.0, 20.0]\n"
    )
    config = RunConfig.from_toml(write(tmp_path, text))
    assert config.sweep is not None
    assert config.sweep.study is Study.MonteCarlo
    scenario = config.to_scenario()
    assert scenario.sweep_values(SweepAxis.SnrDb) == (10.0, 20.0)
    assert scenario.sweep_values(SweepAxis.LoRatio) is None


def test_monte_carlo_study_needs_axis(tmp_path: Path) -> None:
    text = MinimalToml + '\n[sweep]\nstudy = "monte_carlo"\n'
    with pytest.raises(ConfigParseError) as info:
        RunConfig.from_toml(write(tmp_path, text))
    assert "sweep" in info.value.keys


def test_order_selection_leaves_target_count_open(tmp_path: Path) -> None:
    text = MinimalToml + (
        '\n[prony]\nmodel_order = 6\n'
        'order_selection = "singular_value_threshold"\n'
    )
    prony = RunConfig.from_toml(write(tmp_path, text)).to_prony()
    assert prony.target_count is None
    assert prony.model_order == 6
    assert prony.order_selection is OrderSelection.SingularValueThreshold


def test_unknown_top_level_key(tmp_path: Path) -> None:
    path = write(tmp_path, "colour = 3\n" + MinimalToml)
    with pytest.raises(ConfigParseError) as info:
        RunConfig.from_toml(path)
    assert info.value.keys == ("colour",)
    assert info.value.path == path


def test_unknown_nested_key(tmp_path: Path) -> None:
    text = MinimalToml + "window_shape = 'hann'\n"
    with pytest.raises(ConfigParseError) as info:
        RunConfig.from_toml(write(tmp_path, text))
    assert "geometry.window_shape" in info.value.keys


def test_conflicting_units(tmp_path: Path) -> None:
    text = MinimalToml + "spacing_m = 0.03\n"
    with pytest.raises(ConfigParseError, match="spacing_m or"):
        RunConfig.from_toml(write(tmp_path, text))


def test_lo_needs_exactly_one_amplitude_source(tmp_path: Path) -> None:
    text = MinimalToml.replace(
        "lo_ratio = 20.0",
        "lo_ratio = 20.0\nlo_amplitude_v_per_m = 1e-5",
    )
    with pytest.raises(ConfigParseError, match="exactly one"):
        RunConfig.from_toml(write(tmp_path, text))


def test_toml_syntax_error_reports_line(tmp_path: Path) -> None:
    text = MinimalToml.replace("lo_ratio = 20.0", "lo_ratio = ")
    with pytest.raises(ConfigParseError) as info:
        RunConfig.from_toml(write(tmp_path, text))
    assert info.value.line == 2
    assert ":2" in str(info.value)


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        RunConfig.from_toml(tmp_path / "absent.toml")


def test_windows_outside_cell(tmp_path: Path) -> None:
    text = MinimalToml + "channel_count = 40\n"
    config = RunConfig.from_toml(write(tmp_path, text))
    with pytest.raises(ConfigParseError) as info:
        config.to_geometry()
    assert info.value.keys[0].startswith("geometry")


def test_overrides_take_precedence(tmp_path: Path) -> None:
    path = write(tmp_path, MinimalToml)
    config = RunConfig.from_toml(path).with_overrides(
        out=tmp_path / "elsewhere",
        seed=99,
        threads=3,
        order=6,
        fmt=OutputFormat.Json,
    )
    assert config.path == path
    assert config.output.directory == tmp_path / "elsewhere"
    assert config.output.format is OutputFormat.Json
    assert config.run.base_seed == 99
    assert config.run.threads == 3
    assert config.to_prony().model_order == 6
    scenario = config.to_scenario()
    assert (scenario.threads, scenario.base_seed) == (3, 99)


def test_overrides_keep_file_values_when_unset(config_dir: Path) -> None:
    config = RunConfig.from_toml(config_dir / "reference.toml")
    same = config.with_overrides()
    assert same.run == config.run
    assert same.output == config.output
    assert same.prony == config.prony
