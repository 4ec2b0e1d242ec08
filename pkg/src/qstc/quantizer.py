"""N-level-per-axis box quantizer with a moving center and range.

The hypercube ``{y : ||y - center|| <= E}`` is cut into ``N**n_y`` equal
boxes.  Boxes are numbered ``1 .. N**n_y`` with axis 0 as the least
significant base-N digit; that integer is the only payload sent over the
sensor channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadIndex, DimensionError, OutOfRange

RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class QuantizerSpec:
    N: int
    n_y: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DimensionError(f"N must be an integer >= 2, got {self.N}")
        if self.n_y < 1:
            raise DimensionError(f"n_y must be >= 1, got {self.n_y}")
        if self.N ** self.n_y > 2 ** 64 - 1:
            raise DimensionError(f"{self.N}**{self.n_y} indices do not fit in 64 bits")

    @property
    def size(self) -> int:
        return self.N ** self.n_y


@dataclass(frozen=True)
class QuantizationFrame:
    center: np.ndarray
    range: float

    def __post_init__(self):
        if not self.range >= 0.0:
            raise DimensionError(f"range must be >= 0, got {self.range}")


def bins(spec: QuantizerSpec, frame: QuantizationFrame, y) -> np.ndarray:
    """Per-axis bin numbers in ``[0, N-1]``; boundary ties clamp downwards."""
    y = np.asarray(y, dtype=float)
    c = np.asarray(frame.center, dtype=float)
    E = float(frame.range)
    if y.shape != c.shape or y.shape[-1] != spec.n_y:
        raise DimensionError(f"output shape {y.shape} does not match center {c.shape}")
    dev = np.max(np.abs(y - c))
    if not dev <= E + RANGE_SLACK * E:
        raise OutOfRange(f"||y - center|| = {dev:.6g} exceeds range {E:.6g}")
    if E == 0.0:
        return np.full(spec.n_y, spec.N // 2, dtype=np.int64)
    j = np.floor((y - c + E) * spec.N / (2.0 * E))
    return np.clip(j, 0, spec.N - 1).astype(np.int64)


def encode(spec: QuantizerSpec, frame: QuantizationFrame, y) -> int:
    """1-based box index of ``y``."""
    index = 0
    for j in reversed(bins(spec, frame, y).tolist()):
        index = index * spec.N + j
    return index + 1


def index_digits(spec: QuantizerSpec, index) -> np.ndarray:
    if int(index) != index or not 1 <= index <= spec.size:
        raise BadIndex(f"index {index} outside 1..{spec.size}")
    rest = int(index) - 1
    digits = []
    for _ in range(spec.n_y):
        rest, d = divmod(rest, spec.N)
        digits.append(d)
    return np.array(digits, dtype=np.int64)


def decode(spec: QuantizerSpec, frame: QuantizationFrame, index) -> np.ndarray:
    """Center of box ``index``."""
    j = index_digits(spec, index)
    E = float(frame.range)
    c = np.asarray(frame.center, dtype=float)
    # (2j + 1 - N) is exact, so the middle box of an odd N decodes to the center itself
    return c + (2 * j + 1 - spec.N) * (E / spec.N)


def quantize(spec: QuantizerSpec, frame: QuantizationFrame, y):
    """``(index, value)`` in one call."""
    idx = encode(spec, frame, y)
    return idx, decode(spec, frame, idx)


def quantize_many(N: int, centers, ranges, ys) -> np.ndarray:
    """Vectorized encode-then-decode for a batch of rows (no index packing)."""
    centers = np.asarray(centers, dtype=float)
    ranges = np.asarray(ranges, dtype=float).reshape(-1, 1)
    ys = np.asarray(ys, dtype=float)
    if np.any(np.abs(ys - centers) > ranges * (1.0 + RANGE_SLACK)):
        raise OutOfRange("batch contains outputs outside their frames")
    safe = np.where(ranges > 0.0, ranges, 1.0)
    j = np.floor((ys - centers + ranges) * N / (2.0 * safe))
    j = np.where(ranges > 0.0, np.clip(j, 0, N - 1), N // 2)
    return centers + (2 * j + 1 - N) * (ranges / N)
