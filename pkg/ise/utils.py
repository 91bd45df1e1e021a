import asyncio
import csv
import io
import json
import logging
from collections.abc import Coroutine, Iterable, Mapping, Sequence
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Final

import aiofiles
import aiofiles.os
import numpy as np

logger = logging.getLogger(__name__)

DistributionName: Final[str] = "rydberg-ise"


class MyEncoder(json.JSONEncoder):
    def default(self, o: Any) -> Any:
        if isinstance(o, Path):
            return str(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex | np.complexfloating):
            return [float(o.real), float(o.imag)]
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.bool_):
            return bool(o)

        return super().default(o)


def jsondumps(obj: Any, indent: int = 4) -> str:
    return json.dumps(
        obj,
        indent=indent,
        ensure_ascii=False,
        cls=MyEncoder,
    )


def fmt_float(value: float) -> str:
    return f"{value:.17g}"


def csvdumps(
    header: Sequence[str],
    rows: Iterable[Sequence[float | int | str | None]],
) -> str:
    """Render rows as CSV; floats with 17 significant digits, None blank."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [
                ""
                if cell is None
                else fmt_float(cell)
                if isinstance(cell, float)
                else cell
                for cell in row
            ],
        )
    return buffer.getvalue()


async def write_atomic(path: Path, content: str) -> Path:
    tmp = path.with_name(f".{path.name}.tmp")
    async with aiofiles.open(tmp, "w", encoding="utf-8") as writefile:
        await writefile.write(content)
    await aiofiles.os.replace(tmp, path)
    logger.debug("wrote %s (%d bytes)", path, len(content))
    return path


async def write_artifacts(
    directory: Path,
    artifacts: Mapping[str, str],
) -> list[Path]:
    await aiofiles.os.makedirs(directory, exist_ok=True)
    return list(
        await asyncio.gather(
            *(
                write_atomic(directory / name, content)
                for name, content in artifacts.items()
            ),
        ),
    )


def run_async[T](fn: Coroutine[Any, Any, T]) -> T:
    return asyncio.run(fn)


def code_version() -> str:
    try:
        return version(DistributionName)
    except PackageNotFoundError:
        return "0+unknown"
