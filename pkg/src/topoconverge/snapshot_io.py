"""Reading and writing weight snapshots (NNPH v1) and validation-metric series.

NNPH v1 layout, little-endian throughout::

    b"NNPH" | version:u32 = 1 | layer_count:u32
    per layer header:  rows:u32 | cols:u32 | has_bias:u8
    per layer payload: rows*cols f32 (row-major weights) | rows f32 bias iff has_bias

Snapshots are named ``step_%08d.nnph``; the numeric step in the file name
orders a training run.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BadMagic,
    IoFailure,
    NonFinite,
    NonMonotoneSteps,
    ParseError,
    ShapeMismatch,
)

MAGIC = b"NNPH"
VERSION = 1
SNAPSHOT_PATTERN = re.compile(r"step_(\d+)\.nnph$")
METRICS_HEADER = ("step", "val_accuracy")

_FILE_HEADER = struct.Struct("<4sII")
_LAYER_HEADER = struct.Struct("<IIB")
_F32 = np.dtype("<f4")


@dataclass(eq=False)
class LayerWeights:
    """One dense layer: ``weights[i, j]`` connects input ``j`` to output ``i``.

    Values are held as float32 since that is what the file stores; anything
    wider is rounded on construction.
    """

    weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float32, ndmin=2, copy=True)
        if self.weights.ndim != 2:
            raise ShapeMismatch(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias is not None:
            self.bias = np.array(self.bias, dtype=np.float32, copy=True).reshape(-1)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @property
    def has_bias(self) -> bool:
        return self.bias is not None

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ShapeMismatch(f"empty layer {self.weights.shape}")
        if self.bias is not None and self.bias.shape != (self.rows,):
            raise ShapeMismatch(
                f"bias of length {self.bias.size} for a layer with {self.rows} rows"
            )
        if not np.all(np.isfinite(self.weights)):
            raise NonFinite("non-finite weight entry")
        if self.bias is not None and not np.all(np.isfinite(self.bias)):
            raise NonFinite("non-finite bias entry")

    def __eq__(self, other):
        if not isinstance(other, LayerWeights):
            return NotImplemented
        if self.weights.shape != other.weights.shape or self.has_bias != other.has_bias:
            return False
        # compare bit patterns so that -0.0 != 0.0 and the round trip is exact
        if self.weights.tobytes() != other.weights.tobytes():
            return False
        return not self.has_bias or self.bias.tobytes() == other.bias.tobytes()


@dataclass(eq=False)
class NetworkState:
    """All layers of an MLP at one training step."""

    layers: List[LayerWeights]
    step: int = 0

    def validate(self) -> None:
        if self.step < 0:
            raise ParseError(f"negative step {self.step}")
        if not self.layers:
            raise ShapeMismatch("network without layers")
        for layer in self.layers:
            layer.validate()
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.rows != b.cols:
                raise ShapeMismatch(
                    f"layer {i} has {a.rows} outputs but layer {i + 1} expects {b.cols} inputs"
                )

    @property
    def n_parameters(self) -> int:
        return sum(l.weights.size + (l.rows if l.has_bias else 0) for l in self.layers)

    def __eq__(self, other):
        if not isinstance(other, NetworkState):
            return NotImplemented
        return self.step == other.step and self.layers == other.layers


@dataclass
class MetricSeries:
    """Validation accuracy at increasing training steps."""

    points: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.points = [(int(s), float(a)) for s, a in self.points]
        for (s0, _), (s1, _) in zip(self.points, self.points[1:]):
            if s1 <= s0:
                raise NonMonotoneSteps(f"step {s1} follows step {s0}")
        for s, a in self.points:
            if not 0.0 <= a <= 1.0:
                raise ParseError(f"accuracy {a} at step {s} outside [0, 1]")

    @property
    def steps(self) -> List[int]:
        return [s for s, _ in self.points]

    @property
    def accuracies(self) -> List[float]:
        return [a for _, a in self.points]

    def __len__(self):
        return len(self.points)


def snapshot_name(step: int) -> str:
    return f"step_{step:08d}.nnph"


def step_from_path(path) -> Optional[int]:
    m = SNAPSHOT_PATTERN.search(Path(path).name)
    return int(m.group(1)) if m else None


def list_snapshots(directory) -> List[Path]:
    """Snapshot files in ``directory``, sorted by their numeric step."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailure(f"not a directory: {directory}")
    found = [(step_from_path(p), p) for p in directory.iterdir() if p.is_file()]
    return [p for s, p in sorted((s, p) for s, p in found if s is not None)]


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file in the same directory + rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def encode_snapshot(state: NetworkState) -> bytes:
    state.validate()
    buf = io.BytesIO()
    buf.write(_FILE_HEADER.pack(MAGIC, VERSION, len(state.layers)))
    for layer in state.layers:
        buf.write(_LAYER_HEADER.pack(layer.rows, layer.cols, int(layer.has_bias)))
    for layer in state.layers:
        buf.write(layer.weights.astype(_F32, copy=False).tobytes(order="C"))
        if layer.has_bias:
            buf.write(layer.bias.astype(_F32, copy=False).tobytes())
    return buf.getvalue()


def decode_snapshot(data: bytes, step: int = 0) -> NetworkState:
    if len(data) < _FILE_HEADER.size or data[:4] != MAGIC:
        raise BadMagic("not an NNPH snapshot")
    _, version, n_layers = _FILE_HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise BadMagic(f"unsupported NNPH version {version}")
    offset = _FILE_HEADER.size
    if len(data) < offset + n_layers * _LAYER_HEADER.size:
        raise ShapeMismatch("truncated layer headers")
    headers = []
    for _ in range(n_layers):
        rows, cols, has_bias = _LAYER_HEADER.unpack_from(data, offset)
        if has_bias not in (0, 1):
            raise ShapeMismatch(f"has_bias flag {has_bias}")
        headers.append((rows, cols, bool(has_bias)))
        offset += _LAYER_HEADER.size

    expected = offset + 4 * sum(r * c + (r if b else 0) for r, c, b in headers)
    if expected != len(data):
        raise ShapeMismatch(
            f"headers describe {expected} bytes but the file holds {len(data)}"
        )

    layers = []
    for rows, cols, has_bias in headers:
        w = np.frombuffer(data, dtype=_F32, count=rows * cols, offset=offset)
        offset += 4 * rows * cols
        bias = None
        if has_bias:
            bias = np.frombuffer(data, dtype=_F32, count=rows, offset=offset)
            offset += 4 * rows
        layers.append(LayerWeights(w.reshape(rows, cols), bias))
    state = NetworkState(layers, step)
    state.validate()
    return state


def write_snapshot(state: NetworkState, path) -> None:
    atomic_write_bytes(path, encode_snapshot(state))


def read_snapshot(path) -> NetworkState:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    step = step_from_path(path)
    return decode_snapshot(data, 0 if step is None else step)


def format_float(x: float) -> str:
    """Shortest round-tripping text for a float; ``inf`` for +infinity."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return out.getvalue()


def write_metrics(series: MetricSeries, path) -> None:
    atomic_write_bytes(path, render_csv(METRICS_HEADER, series.points).encode())


def read_metrics(path) -> MetricSeries:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != METRICS_HEADER:
        raise ParseError(f"{path}: expected header 'step,val_accuracy'")
    points = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            step, acc = int(row[0]), float(row[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if step < 0:
            raise ParseError(f"{path}:{lineno}: negative step")
        if not 0.0 <= acc <= 1.0:
            raise ParseError(f"{path}:{lineno}: accuracy {acc} outside [0, 1]")
        points.append((step, acc))
    return MetricSeries(points)
