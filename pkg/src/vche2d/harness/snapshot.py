"""
vche2d Snapshots

Binary field snapshots: a fixed little-endian header followed by the n x n
float64 values, row-major with x2 as the outer index.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..models.fields import Frame, Grid, ScalarField
from ..utils.exceptions import GridError, SnapshotFormatError
from ..utils.logger import get_logger

MAGIC = b"VCHE"
FORMAT_VERSION = 1
HEADER_FORMAT = "<4sIIddBd"
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)

logger = get_logger(__name__)


@dataclass(frozen=True)
class SnapshotHeader:
    """Header of a snapshot file."""
    n_points: int
    half_width: float
    alpha: float
    frame: Frame
    time: float
    version: int = FORMAT_VERSION

    def pack(self) -> bytes:
        return struct.pack(HEADER_FORMAT, MAGIC, self.version, self.n_points,
                           self.half_width, self.alpha, self.frame.value, self.time)

    @classmethod
    def unpack(cls, data: bytes) -> "SnapshotHeader":
        if len(data) < HEADER_SIZE:
            raise SnapshotFormatError("snapshot shorter than its header",
                                      {"size": len(data), "header_size": HEADER_SIZE})
        magic, version, n, half_width, alpha, frame, time = struct.unpack(
            HEADER_FORMAT, data[:HEADER_SIZE])
        if magic != MAGIC:
            raise SnapshotFormatError("bad snapshot magic", {"magic": magic})
        if version != FORMAT_VERSION:
            raise SnapshotFormatError("unsupported snapshot version",
                                      {"version": version, "supported": FORMAT_VERSION})
        try:
            frame_value = Frame(frame)
        except ValueError:
            raise SnapshotFormatError("unknown frame code", {"frame": frame})
        return cls(n, half_width, alpha, frame_value, time, version)


def encode_snapshot(field: ScalarField, alpha: float, time: float) -> bytes:
    header = SnapshotHeader(field.grid.n_points, field.grid.half_width, alpha, field.frame, time)
    return header.pack() + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode_snapshot(data: bytes) -> Tuple[SnapshotHeader, ScalarField]:
    header = SnapshotHeader.unpack(data)
    n = header.n_points
    expected = HEADER_SIZE + 8 * n * n
    if len(data) != expected:
        raise SnapshotFormatError("snapshot size does not match its header",
                                  {"size": len(data), "expected": expected})
    values = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE).reshape(n, n).astype(np.float64)
    try:
        grid = Grid(n, header.half_width)
    except GridError as e:
        raise SnapshotFormatError("snapshot header describes an invalid grid",
                                  {"n_points": n, "half_width": header.half_width}) from e
    return header, ScalarField(grid, values, header.frame)


def write_snapshot(path: Union[str, Path], field: ScalarField, alpha: float, time: float) -> Path:
    """Write a snapshot file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(field, alpha, time))
    logger.debug("Snapshot written", path=str(path), n_points=field.grid.n_points, time=time)
    return path


def read_snapshot(path: Union[str, Path]) -> Tuple[SnapshotHeader, ScalarField]:
    """Read a snapshot file.

    Raises:
        SnapshotFormatError: Wrong magic, version or size
    """
    return decode_snapshot(Path(path).read_bytes())


def dump_snapshot(path: Union[str, Path]) -> str:
    """Human-readable header and field statistics."""
    header, field = read_snapshot(path)
    values = field.values
    lines = [
        f"file:       {path}",
        f"version:    {header.version}",
        f"n_points:   {header.n_points}",
        f"half_width: {header.half_width!r}",
        f"alpha:      {header.alpha!r}",
        f"frame:      {header.frame.name.lower()}",
        f"time:       {header.time!r}",
        f"min:        {float(values.min())!r}",
        f"max:        {float(values.max())!r}",
        f"sum*area:   {float(values.sum() * field.grid.cell_area)!r}",
    ]
    return "\n".join(lines)
