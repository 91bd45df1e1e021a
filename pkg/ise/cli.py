"""``ise`` command-line entry point."""

import argparse
import logging
import math
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import crlb, estimation, physics, sensing
from .config import OutputFormat, RunConfig, Study, Verbosity
from .exc import (
    ConfigParseError,
    DomainError,
    InputError,
    InvalidModelInput,
    IseError,
)
from .experiments import studies
from .experiments.montecarlo import derive_seed
from .models.experiments import SweepAxis
from .models.measurement import MeasurementVector
from .typedefs import FloatArray
from .utils import (
    code_version,
    csvdumps,
    jsondumps,
    run_async,
    write_artifacts,
)

logger = logging.getLogger(__name__)

type Artifacts = dict[str, str]
type Command = Callable[[RunConfig, argparse.Namespace], Artifacts]

ExitOk = 0
ExitInput = 2
ExitDomain = 3
ExitIo = 4

_Levels = {
    Verbosity.Debug: logging.DEBUG,
    Verbosity.Info: logging.INFO,
    Verbosity.Warning: logging.WARNING,
}
_BoundTolerance = 1e-10


def _echo(*lines: str) -> None:
    sys.stdout.write("".join(f"{line}\n" for line in lines))


def cmd_simulate(
    config: RunConfig,
    args: argparse.Namespace,  # noqa: ARG001
) -> Artifacts:
    """Fluorescence profile and the (noisy) measurement vector."""
    scene, geometry = config.to_scene(), config.to_geometry()
    params = config.to_params()
    _echo(*sensing.check_sampling(geometry, scene.wavelength).lines())

    def alpha(x: FloatArray) -> FloatArray:
        return physics.absorption_exact(params, scene, x)

    profile = sensing.propagate_probe(
        alpha,
        geometry,
        rf_wavelength=scene.wavelength,
    )
    measurement = sensing.synthesize_measurement(
        scene,
        geometry,
        params,
        config.run.measurement_source,
    )
    if config.run.snr_db is not None and scene.signal_count:
        seed = derive_seed(config.run.base_seed, 0, 0)
        measurement = sensing.add_noise(measurement, config.run.snr_db, seed)
    _echo(
        f"transmission {profile.transmission:.6g}, "
        f"{geometry.channel_count} channels, "
        f"σ = {measurement.noise_sigma:.3g}",
    )
    return {
        "fluorescence.csv": profile.to_csv(),
        "measurement.csv": measurement.to_csv(),
    }


def cmd_estimate(config: RunConfig, args: argparse.Namespace) -> Artifacts:
    scene, geometry = config.to_scene(), config.to_geometry()
    path = Path(args.measurement)
    measurement = MeasurementVector.from_csv(
        path.read_text(encoding="utf-8"),
        geometry,
        path=path,
    )
    result = estimation.estimate_doa(
        measurement,
        scene.wavenumber,
        scene.lo.angle,
        config.to_prony(),
    )
    _echo(
        *(
            f"θ̂_{i} = {deg:.6f}°"
            for i, deg in enumerate(result.doas_deg, start=1)
        ),
    )
    artifacts = {"estimate.json": jsondumps(result.to_json_dict())}
    if config.output.format is OutputFormat.Csv:
        artifacts["estimate.csv"] = csvdumps(
            ("i", "doa_deg", "spatial_frequency_rad_per_m", "clamped"),
            (
                (i, deg, float(w), int(flag))
                for i, (deg, w, flag) in enumerate(
                    zip(
                        result.doas_deg,
                        result.spatial_frequencies,
                        result.clamped_flags,
                        strict=True,
                    ),
                    start=1,
                )
            ),
        )
    return artifacts


def cmd_crlb(
    config: RunConfig,
    args: argparse.Namespace,  # noqa: ARG001
) -> Artifacts:
    """Bound on the configured scene at ``run.snr_db``."""
    scene, geometry = config.to_scene(), config.to_geometry()
    params = config.to_params()
    if config.run.snr_db is None:
        raise ConfigParseError(
            "the bound needs run.snr_db",
            path=config.path,
            keys=("run.snr_db",),
        )
    clean = sensing.predicted_measurements(scene, geometry, params)
    sigma = sensing.noise_sigma_for_snr(clean.values, config.run.snr_db)
    report = crlb.crlb_report(
        crlb.scene_fim_inputs(scene, geometry, params, noise_sigma=sigma),
        scene.angles,
        scene.wavenumber,
    )
    payload: dict[str, Any] = {
        "noise_sigma": sigma,
        **report.to_json_dict(),
    }
    _echo(
        *(
            f"θ_{i} = {angle:.4f}°: std ≥ {std:.6g}°"
            for i, angle, std in report.csv_rows()
        ),
    )
    if scene.signal_count == 1:
        closed = crlb.single_target_variance(
            float(report.effective_fim_dk[0, 0]),
            float(scene.angles[0]),
            scene.wavenumber,
        )
        matrix = float(report.crlb_theta[0, 0])
        if not math.isclose(closed, matrix, rel_tol=_BoundTolerance):
            raise DomainError(
                f"closed-form bound {closed:.17g} disagrees with "
                f"the matrix bound {matrix:.17g}",
            )
        payload["closed_form_variance"] = closed
        _echo(f"closed form: var ≥ {closed:.6g} rad² (matches)")
    return {
        "crlb.json": jsondumps(payload),
        "crlb.csv": csvdumps(
            ("i", "angle_deg", "std_deg"),
            report.csv_rows(),
        ),
    }


def _sweep_study(config: RunConfig) -> Artifacts:
    if config.sweep is None:
        raise ConfigParseError(
            "the sweep command needs a [sweep] section",
            path=config.path,
            keys=("sweep",),
        )
    study, axis = config.sweep.study, config.sweep.axis
    scenario = config.to_scenario()
    as_json = config.output.format is OutputFormat.Json

    if study is Study.Linearization:
        ratios = tuple(config.sweep.values) or (1.0, 10.0)
        if len(ratios) != 2:
            raise ConfigParseError(
                "a linearization study takes exactly two LO ratios",
                path=config.path,
                keys=("sweep.values",),
            )
        check = studies.run_linearization_check(
            scenario.params,
            scenario.scene.with_lo_ratio(ratios[0]),
            scenario.scene.with_lo_ratio(ratios[1]),
            scenario.geometry.grid(scenario.scene.wavelength),
        )
        _echo(f"normalized residual ratio {check.residual_ratio:.4g}")
        artifacts = {"linearization.csv": check.to_csv()}
        if as_json:
            artifacts["linearization.json"] = jsondumps(
                {
                    "weak": check.weak.model_dump(),
                    "strong": check.strong.model_dump(),
                    "residual_ratio": check.residual_ratio,
                },
            )
        return artifacts

    if study is Study.Crlb:
        lengths = studies.run_length_sweep(scenario)
        artifacts = {"length_sweep.csv": lengths.to_csv()}
        if as_json:
            artifacts["length_sweep.json"] = jsondumps(lengths.model_dump())
        return artifacts

    if study is Study.Sampling:
        demo = studies.run_sampling_demo(config.to_demo(), scenario)
        artifacts = {"sampling_demo.csv": demo.to_csv()}
        if as_json:
            artifacts["sampling_demo.json"] = jsondumps(demo.model_dump())
        return artifacts

    if study is Study.Measurement:
        measured = studies.run_measurement_demo(scenario)
        artifacts = {
            "measurement_demo.csv": measured.to_csv(),
            "measurement_demo_doas.csv": measured.doas_to_csv(),
        }
        if as_json:
            artifacts["measurement_demo.json"] = jsondumps(
                measured.model_dump(),
            )
        return artifacts

    if axis is SweepAxis.LoRatio:
        results = {"lo_ratio": studies.run_lo_ratio_sweep(scenario)}
    elif axis is SweepAxis.SnrDb:
        results = {
            f"snr_{name}": result
            for name, result in studies.run_snr_sweep(scenario).items()
        }
    elif axis in (SweepAxis.SamplingInterval, SweepAxis.WindowWidth):
        results = {
            str(axis): studies.run_geometry_sweep(scenario, axis),
        }
    else:
        raise ConfigParseError(
            f"axis {axis} belongs to the crlb study",
            path=config.path,
            keys=("sweep.axis",),
        )
    artifacts: Artifacts = {}
    for name, result in results.items():
        artifacts[f"sweep_{name}.csv"] = result.to_csv()
        if as_json:
            artifacts[f"sweep_{name}.json"] = jsondumps(result.model_dump())
    return artifacts


def cmd_sweep(
    config: RunConfig,
    args: argparse.Namespace,  # noqa: ARG001
) -> Artifacts:
    return _sweep_study(config)


def cmd_check_sampling(
    config: RunConfig,
    args: argparse.Namespace,  # noqa: ARG001
) -> Artifacts:
    scene, geometry = config.to_scene(), config.to_geometry()
    report = sensing.check_sampling(geometry, scene.wavelength)
    _echo(*report.lines())
    return {
        "sampling_report.json": jsondumps(
            {**report.model_dump(), "compliant": report.compliant},
        ),
    }


Commands: dict[str, Command] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "crlb": cmd_crlb,
    "sweep": cmd_sweep,
    "check-sampling": cmd_check_sampling,
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True)
    common.add_argument("--out", type=Path)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=_positive_int)
    common.add_argument("--order", type=_positive_int)
    common.add_argument(
        "--format",
        type=OutputFormat,
        choices=list(OutputFormat),
    )
    parser = argparse.ArgumentParser(
        prog="ise",
        description="DoA estimation with a single Rydberg atomic receiver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common])
    estimate = sub.add_parser("estimate", parents=[common])
    estimate.add_argument("measurement", type=Path)
    sub.add_parser("crlb", parents=[common])
    sub.add_parser("sweep", parents=[common])
    sub.add_parser("check-sampling", parents=[common])
    return parser


def _model_error(err: ValidationError) -> InvalidModelInput:
    details = "; ".join(
        f"{'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}"
        for e in err.errors()
    )
    return InvalidModelInput(f"{err.title}: {details}")


def _run(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = RunConfig.from_toml(args.config).with_overrides(
        out=args.out,
        seed=args.seed,
        threads=args.threads,
        order=args.order,
        fmt=args.format,
    )
    logging.basicConfig(
        level=_Levels[config.output.verbosity],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        artifacts = Commands[args.command](config, args)
    except ValidationError as err:
        raise _model_error(err) from err
    manifest = {
        "command": args.command,
        "config_path": config.path,
        "config": config.model_dump(mode="json"),
        "version": code_version(),
        "wall_time_s": time.perf_counter() - started,
        "artifacts": sorted(artifacts),
    }
    artifacts["manifest.json"] = jsondumps(manifest)
    written = run_async(write_artifacts(config.output.directory, artifacts))
    logger.info(
        "wrote %d file(s) to %s",
        len(written),
        config.output.directory,
    )
    return ExitOk


def exit_code(err: Exception) -> int:
    if isinstance(err, InputError):
        return ExitInput
    if isinstance(err, DomainError):
        return ExitDomain
    return ExitIo


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (IseError, OSError) as err:
        logging.basicConfig(level=logging.INFO)
        if logger.isEnabledFor(logging.DEBUG):
            logger.exception("%s failed", args.command)
        else:
            logger.error("%s failed: %s", args.command, err)  # noqa: TRY400
        return exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
