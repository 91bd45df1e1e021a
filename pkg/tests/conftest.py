from pathlib import Path

import hypothesis
import numpy as np
import pytest

from ise.experiments import presets
from ise.models.atomic import AtomicParams
from ise.models.geometry import SensorGeometry
from ise.models.scene import RfScene

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)

ConfigDir = Path(__file__).resolve().parent.parent / "ise" / "configs"


@pytest.fixture
def params() -> AtomicParams:
    return AtomicParams()


@pytest.fixture
def two_target_scene() -> RfScene:
    return presets.scene_from_degrees(presets.TwoTargetAngles)


@pytest.fixture
def geometry(two_target_scene: RfScene) -> SensorGeometry:
    return presets.default_geometry(two_target_scene.wavelength)


@pytest.fixture
def wavelength(two_target_scene: RfScene) -> float:
    return two_target_scene.wavelength


@pytest.fixture
def config_dir() -> Path:
    return ConfigDir

