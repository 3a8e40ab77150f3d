"""Dense 0/1 matrices and vectors with copy-machine operations.

Vectors are 1-D ``uint8`` numpy arrays and matrices are 2-D ``uint8`` arrays,
0 meaning a white subpixel and 1 a black one.  Row and column indices in this
module are 0-based, as in numpy.

Stacking (OR) and reversing (NOT) are the two operations a copy machine can
perform.  ``or_vec`` and ``not_vec`` report themselves to an active
``count_ops`` context so reconstruction procedures can be instrumented.
"""

from __future__ import annotations

import contextvars
import itertools
import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator, Sequence

import numpy as np

BIT = np.uint8


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


# -- construction and formatting ------------------------------------------


def bits(text: str | Iterable[int]) -> np.ndarray:
    """Parse ``"0110"`` (whitespace and ``|`` ignored) or an int iterable."""
    if isinstance(text, str):
        cleaned = [c for c in text if c not in " \t|_"]
        if any(c not in "01" for c in cleaned):
            raise ParameterError(f"not a bit string: {text!r}")
        return np.array([int(c) for c in cleaned], dtype=BIT)
    return as_vector(text)


def matrix(rows: str | Sequence[str] | Sequence[Sequence[int]]) -> np.ndarray:
    """Build a matrix from ``"011;101"``, a list of bit strings, or nested ints."""
    if isinstance(rows, str):
        rows = [r for r in rows.replace("\n", ";").split(";") if r.strip()]
    parsed = [bits(r) if isinstance(r, str) else as_vector(r) for r in rows]
    if not parsed:
        raise ParameterError("matrix needs at least one row")
    if len({len(r) for r in parsed}) != 1:
        raise ParameterError("ragged matrix rows")
    return np.stack(parsed).astype(BIT)


def as_vector(v) -> np.ndarray:
    if isinstance(v, str):
        return bits(v)
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ParameterError(f"expected a vector, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ParameterError("vector entries must be 0 or 1")
    return arr.astype(BIT, copy=False)


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise ParameterError(f"expected a matrix, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ParameterError("matrix entries must be 0 or 1")
    return arr.astype(BIT, copy=False)


def to_str(v, sep: str = "") -> str:
    v = np.asarray(v)
    if v.ndim == 2:
        return ";".join(to_str(row, sep) for row in v)
    return sep.join(str(int(b)) for b in v)


# -- operation counting ----------------------------------------------------


@dataclass
class OpCounter:
    ors: int = 0
    nots: int = 0


_active: contextvars.ContextVar[OpCounter | None] = contextvars.ContextVar(
    "greyvcs_op_counter", default=None
)


@contextmanager
def count_ops() -> Iterator[OpCounter]:
    """Count copy-machine OR/NOT passes made inside the block.

    One pass is one operation on whole vectors, whatever their length.
    """
    counter = OpCounter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)


def _tick(kind: str) -> None:
    counter = _active.get()
    if counter is not None:
        setattr(counter, kind, getattr(counter, kind) + 1)


# -- vector algebra --------------------------------------------------------


def _same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {b.shape}")


def or_vec(a, b) -> np.ndarray:
    """Stack two transparencies."""
    a, b = as_vector(a), as_vector(b)
    _same_length(a, b)
    _tick("ors")
    return a | b


def or_fold(vectors: Sequence) -> np.ndarray:
    if not len(vectors):
        raise ParameterError("nothing to stack")
    return reduce(or_vec, vectors[1:], as_vector(vectors[0]))


def not_vec(v) -> np.ndarray:
    """Reverse a transparency (black becomes white and vice versa)."""
    v = as_vector(v)
    _tick("nots")
    return (1 - v).astype(BIT)


def xor_vec(a, b) -> np.ndarray:
    """Native bitwise XOR.  Not counted: a copy machine cannot do this directly."""
    a, b = as_vector(a), as_vector(b)
    _same_length(a, b)
    return a ^ b


def xor_copy(a, b) -> np.ndarray:
    """XOR built from copy-machine passes: 4 NOTs and 3 ORs.

    ``a ^ b == NOT(a OR NOT b) OR NOT(NOT a OR b)``
    """
    a, b = as_vector(a), as_vector(b)
    _same_length(a, b)
    left = not_vec(or_vec(a, not_vec(b)))
    right = not_vec(or_vec(not_vec(a), b))
    return or_vec(left, right)


def xor_fold(vectors: Sequence, copy_machine: bool = False) -> np.ndarray:
    if not len(vectors):
        raise ParameterError("nothing to XOR")
    op = xor_copy if copy_machine else xor_vec
    return reduce(op, vectors[1:], as_vector(vectors[0]))


def hamming(v) -> int:
    return int(np.count_nonzero(np.asarray(v)))


# -- matrix operations -----------------------------------------------------


def or_rows(m, row_indices: Iterable[int]) -> np.ndarray:
    """OR of the selected rows of ``m``."""
    m = as_matrix(m)
    idx = list(row_indices)
    if not idx:
        raise ParameterError("empty row selection")
    if len(set(idx)) != len(idx):
        raise ParameterError(f"duplicate row index in {idx}")
    if any(i < 0 or i >= m.shape[0] for i in idx):
        raise ParameterError(f"row index out of range in {idx} for {m.shape[0]} rows")
    return np.bitwise_or.reduce(m[idx], axis=0).astype(BIT)


def concat(*mats) -> np.ndarray:
    """Horizontal concatenation; all operands need the same row count."""
    mats = [np.asarray(x, dtype=BIT) for x in mats]
    if not mats:
        raise ParameterError("nothing to concatenate")
    rows = mats[0].shape[0]
    for x in mats:
        if x.ndim != 2 or x.shape[0] != rows:
            raise ParameterError(f"row-count mismatch: {x.shape} vs {rows} rows")
    return np.concatenate(mats, axis=1)


def column_multiset(m) -> tuple[tuple[int, ...], ...]:
    """Columns of ``m`` as a sorted tuple, i.e. ``m`` up to column order."""
    m = as_matrix(m)
    return tuple(sorted(tuple(int(x) for x in col) for col in m.T))


def _check_perm(perm: Sequence[int], n: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.intp)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ParameterError(f"not a permutation of {n} columns: {list(perm)}")
    return perm


def permute_columns(m, perm: Sequence[int]) -> np.ndarray:
    """Column ``j`` of the result is column ``perm[j]`` of ``m``."""
    m = as_matrix(m)
    return m[:, _check_perm(perm, m.shape[1])]


def invert_perm(perm: Sequence[int]) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.intp)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


# -- block layouts and the three permutation regimes -----------------------

BlockLayout = tuple[int, ...]


def block_offsets(layout: Sequence[int]) -> list[tuple[int, int]]:
    """``(start, stop)`` column ranges of each block."""
    if any(w <= 0 for w in layout):
        raise ParameterError(f"block widths must be positive: {tuple(layout)}")
    edges = np.concatenate([[0], np.cumsum(layout)]).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _check_layout(m: np.ndarray, layout: Sequence[int]) -> None:
    if sum(layout) != m.shape[1]:
        raise ParameterError(
            f"layout {tuple(layout)} covers {sum(layout)} columns, matrix has {m.shape[1]}"
        )


def wbcp_permutation(layout: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Independent uniform permutation inside each block (Fisher-Yates per block)."""
    parts = [start + rng.permutation(stop - start) for start, stop in block_offsets(layout)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.intp)


def wbcp_sample(m, layout: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Within-block column permutation: blocks shuffled independently, never mixed."""
    m = as_matrix(m)
    _check_layout(m, layout)
    return m[:, wbcp_permutation(layout, rng)]


def locked_permutation(layout: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    widths = set(layout)
    if len(widths) != 1:
        raise ParameterError(f"locked permutation needs equal block widths, got {tuple(layout)}")
    inner = rng.permutation(layout[0])
    return np.concatenate([start + inner for start, _ in block_offsets(layout)])


def wbcp_sample_locked(m, layout: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Every block gets the same internal permutation (leaks; see verify)."""
    m = as_matrix(m)
    _check_layout(m, layout)
    return m[:, locked_permutation(layout, rng)]


def full_sample(m, rng: np.random.Generator) -> np.ndarray:
    """Unrestricted uniform column permutation."""
    m = as_matrix(m)
    return m[:, rng.permutation(m.shape[1])]


def iter_wbcp_perms(layout: Sequence[int]) -> Iterator[np.ndarray]:
    """Every permutation reachable by ``wbcp_sample``, each exactly once."""
    per_block = [
        [tuple(start + j for j in p) for p in itertools.permutations(range(stop - start))]
        for start, stop in block_offsets(layout)
    ]
    for combo in itertools.product(*per_block):
        yield np.array([j for part in combo for j in part], dtype=np.intp)


def iter_locked_perms(layout: Sequence[int]) -> Iterator[np.ndarray]:
    if len(set(layout)) != 1:
        raise ParameterError(f"locked permutation needs equal block widths, got {tuple(layout)}")
    offsets = block_offsets(layout)
    for inner in itertools.permutations(range(layout[0])):
        yield np.array([start + j for start, _ in offsets for j in inner], dtype=np.intp)


def iter_full_perms(cols: int) -> Iterator[np.ndarray]:
    for p in itertools.permutations(range(cols)):
        yield np.array(p, dtype=np.intp)


def wbcp_count(layout: Sequence[int]) -> int:
    return math.prod(math.factorial(w) for w in layout)


def gamma_shift(v, block: int) -> np.ndarray:
    """Rotate each consecutive ``block``-wide chunk right by one position."""
    v = as_vector(v)
    if block <= 0 or v.size % block:
        raise ParameterError(f"length {v.size} is not a multiple of block width {block}")
    return np.roll(v.reshape(-1, block), 1, axis=1).reshape(-1)
