"""Hard-instance generation and dataset plumbing.

A Population holds d column means drawn i.i.d. from a beta prior; a Dataset
is an n x d binary matrix whose entries are independent Bernoulli draws of
the column means. Datasets are stored bit-packed by column because every
mechanism and attack statistic consumes column sums; a 10^4 x 10^4 instance
packs into ~12.5 MB. Both types are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import struct
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .betadist import BetaParams, beta_draws

MAGIC = b"PSL1"


@dataclass(frozen=True, eq=False)
class Population:
    """Column-mean vector in [0,1]^d together with the prior it came from."""

    means: np.ndarray
    prior: BetaParams

    def __post_init__(self):
        arr = np.asarray(self.means, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("means must be a nonempty 1-d vector")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(~np.isfinite(arr)):
            raise ValueError("every population mean must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "means", arr)

    @property
    def d(self) -> int:
        return self.means.size

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return self.prior == other.prior and np.array_equal(self.means, other.means)


@dataclass(frozen=True, eq=False)
class ColumnMeans:
    """Empirical column means of a dataset, one value per column."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("values must be a nonempty 1-d vector")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("column means must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def of(cls, x: "Dataset") -> "ColumnMeans":
        return cls(x.column_means())

    def __eq__(self, other):
        if not isinstance(other, ColumnMeans):
            return NotImplemented
        return np.array_equal(self.values, other.values)


class Dataset:
    """Immutable n x d binary matrix, bit-packed along columns."""

    __slots__ = ("n", "d", "_packed", "_column_sums")

    def __init__(self, bits):
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise ValueError("bits must be a 2-d matrix")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        u8 = arr.astype(np.uint8)
        if not np.all((u8 == 0) | (u8 == 1)) or not np.all(u8 == arr):
            raise ValueError("entries must all be 0 or 1")
        sums = u8.sum(axis=0, dtype=np.int64)
        packed = np.packbits(u8, axis=0)
        self._finish_init(n, d, packed, sums)

    def _finish_init(self, n, d, packed, sums):
        packed.flags.writeable = False
        sums.flags.writeable = False
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "_packed", packed)
        object.__setattr__(self, "_column_sums", sums)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    @classmethod
    def _from_packed(cls, n: int, d: int, packed: np.ndarray, sums: np.ndarray) -> "Dataset":
        obj = object.__new__(cls)
        obj._finish_init(n, d, packed, sums)
        return obj

    @property
    def bits(self) -> np.ndarray:
        """The unpacked n x d matrix of {0,1} entries."""
        out = np.unpackbits(self._packed, axis=0, count=self.n)
        out.flags.writeable = False
        return out

    def column_sums(self) -> np.ndarray:
        return self._column_sums

    def column_means(self) -> np.ndarray:
        return self._column_sums / self.n

    def row(self, i: int) -> np.ndarray:
        """Row i as a length-d vector of {0,1}, without unpacking the matrix."""
        if not 0 <= i < self.n:
            raise IndexError(f"row index {i} out of range for n={self.n}")
        byte = self._packed[i >> 3]
        return (byte >> (7 - (i & 7))) & np.uint8(1)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and np.array_equal(self._packed, other._packed)
        )

    def __repr__(self):
        return f"Dataset(n={self.n}, d={self.d})"


def sample_population(d: int, prior: BetaParams, rng: np.random.Generator) -> Population:
    """d i.i.d. draws from the prior, packaged as a Population."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return Population(means=beta_draws(prior, d, rng), prior=prior)


def sample_dataset(pop: Population, n: int, rng: np.random.Generator) -> Dataset:
    """n rows of independent Bernoulli(pop.means) draws."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    d = pop.d
    packed = np.zeros(((n + 7) >> 3, d), dtype=np.uint8)
    sums = np.zeros(d, dtype=np.int64)
    # Row blocks stay multiples of 8 so packed blocks butt together cleanly.
    block = max(8, (((1 << 24) // d) >> 3) << 3)
    done = 0
    while done < n:
        m = min(block, n - done)
        u8 = (rng.random((m, d)) < pop.means).astype(np.uint8)
        sums += u8.sum(axis=0, dtype=np.int64)
        packed[done >> 3 : (done >> 3) + ((m + 7) >> 3)] = np.packbits(u8, axis=0)
        done += m
    return Dataset._from_packed(n, d, packed, sums)


def resample_row(x: Dataset, i: int, pop: Population, rng: np.random.Generator) -> Dataset:
    """A copy of x whose row i is replaced by a fresh Bernoulli(pop) draw.

    The result is a neighboring dataset of x: all rows other than i are
    bit-identical. Row indices are 0-based.
    """
    if not 0 <= i < x.n:
        raise IndexError(f"row index {i} out of range for n={x.n}")
    if pop.d != x.d:
        raise ValueError(f"population has d={pop.d} but dataset has d={x.d}")
    new_row = (rng.random(x.d) < pop.means).astype(np.uint8)
    old_row = x.row(i)
    packed = x._packed.copy()
    mask = np.uint8(1 << (7 - (i & 7)))
    packed[i >> 3] = (packed[i >> 3] & ~mask) | (new_row * mask)
    sums = x.column_sums() + (new_row.astype(np.int64) - old_row.astype(np.int64))
    return Dataset._from_packed(x.n, x.d, packed, sums)


def top_k_set(values, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties broken toward the smallest
    index. Returns a sorted integer array; deterministic, no RNG involved."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("values must be a 1-d vector")
    d = arr.size
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if np.any(np.isnan(arr)):
        raise ValueError("values must not contain NaN")
    order = np.argsort(-arr, kind="stable")
    return np.sort(order[:k])


def _selected_indices(selected, d: int, k: int) -> np.ndarray:
    arr = np.asarray(selected)
    if arr.dtype == bool:
        return np.nonzero(arr)[0]
    if arr.size == d and np.all((arr == 0) | (arr == 1)) and int(arr.sum()) == k:
        return np.nonzero(arr)[0]
    return arr.astype(np.int64)


def selection_error(selected, reference, k: int) -> float:
    """Shortfall of a size-k selection against the best size-k sum of the
    reference vector: max over size-k sets of the reference sum, minus the
    sum over the selected set. Always >= 0.

    `selected` may be an index collection or a {0,1} indicator vector; the
    reference may be population means or empirical means, and callers are
    responsible for labeling which was used.
    """
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim != 1:
        raise ValueError("reference must be a 1-d vector")
    d = ref.size
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    idx = _selected_indices(selected, d, k)
    if idx.size != k:
        raise ValueError(f"wrong selection size: got {idx.size}, expected k={k}")
    if idx.size != np.unique(idx).size:
        raise ValueError("selected indices must be distinct")
    if np.any(idx < 0) or np.any(idx >= d):
        raise ValueError("selected index out of range")
    best = float(np.partition(ref, d - k)[d - k :].sum()) if k < d else float(ref.sum())
    got = float(ref[idx].sum())
    return max(0.0, best - got)


@contextmanager
def _binary_file(path_or_file, mode: str):
    if hasattr(path_or_file, "read") or hasattr(path_or_file, "write"):
        yield path_or_file
    else:
        with open(path_or_file, mode) as fh:
            yield fh


def write_dataset(x: Dataset, path) -> None:
    """Serialize a Dataset: magic, little-endian u32 n and d, then the
    row-major bitstream packed into bytes (zero padding at the end).
    Accepts a path or an open binary file object."""
    stream = np.packbits(np.ascontiguousarray(x.bits).reshape(-1))
    with _binary_file(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", x.n, x.d))
        fh.write(stream.tobytes())


def read_dataset(path) -> Dataset:
    with _binary_file(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a {MAGIC.decode()} dataset file")
        n, d = struct.unpack("<II", fh.read(8))
        need = (n * d + 7) >> 3
        payload = fh.read(need)
    if len(payload) != need:
        raise ValueError("truncated dataset payload")
    flat = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n * d)
    return Dataset(flat.reshape(n, d))


def write_population(pop: Population, path) -> None:
    """Serialize a Population: magic, little-endian u32 d, the prior's
    (alpha, beta) as two float64, then d float64 means. Accepts a path or
    an open binary file object."""
    with _binary_file(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", pop.d))
        fh.write(struct.pack("<dd", pop.prior.alpha, pop.prior.beta))
        fh.write(pop.means.astype("<f8").tobytes())


def read_population(path) -> Population:
    with _binary_file(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a {MAGIC.decode()} population file")
        (d,) = struct.unpack("<I", fh.read(4))
        alpha, beta = struct.unpack("<dd", fh.read(16))
        payload = fh.read(8 * d)
    if len(payload) != 8 * d:
        raise ValueError("truncated population payload")
    means = np.frombuffer(payload, dtype="<f8")
    return Population(means=means, prior=BetaParams(alpha, beta))
