"""Basis matrices for binary and greyscale threshold schemes.

A ``BasisPair`` holds the white/black basis matrices of a binary (k, n)
scheme.  ``build_grey_family`` turns one into the g level matrices of a
greyscale scheme by concatenating B0/B1 blocks, and ``check_grey_family``
measures the contrast between adjacent levels with exact fractions.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .boolmat import (
    BIT,
    ParameterError,
    as_matrix,
    column_multiset,
    concat,
    hamming,
    or_rows,
    to_str,
)

DEFAULT_ENUMERATION_CAP = 40_320


def k_subsets(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-subsets of rows ``0..n-1`` in lexicographic order."""
    return list(itertools.combinations(range(n), k))


def subset_weights(m: np.ndarray, k: int) -> dict[tuple[int, ...], int]:
    return {s: hamming(or_rows(m, s)) for s in k_subsets(m.shape[0], k)}


@dataclass
class BasisPair:
    """Basis matrices of a binary (k, n) scheme with their derived bounds.

    ``h`` and ``l`` are the tight whiteness bounds over all k-row stacks, so
    ``alpha = (h - l) / m`` is the best contrast the pair guarantees.
    """

    k: int
    b0: np.ndarray
    b1: np.ndarray
    n: int = field(init=False)
    m: int = field(init=False)
    h: int = field(init=False)
    l: int = field(init=False)  # noqa: E741

    def __post_init__(self) -> None:
        self.b0 = as_matrix(self.b0)
        self.b1 = as_matrix(self.b1)
        if self.b0.shape != self.b1.shape:
            raise ParameterError(f"B0 {self.b0.shape} and B1 {self.b1.shape} differ in shape")
        self.n, self.m = self.b0.shape
        if not 2 <= self.k <= self.n:
            raise ParameterError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")
        self.h = self.m - max(subset_weights(self.b0, self.k).values())
        self.l = self.m - min(subset_weights(self.b1, self.k).values())

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.h - self.l, self.m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BasisPair):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.b0, other.b0)
            and np.array_equal(self.b1, other.b1)
        )

    def __repr__(self) -> str:
        return (
            f"BasisPair(k={self.k}, n={self.n}, m={self.m}, h={self.h}, l={self.l}, "
            f"B0={to_str(self.b0)!r}, B1={to_str(self.b1)!r})"
        )


# -- constructions ---------------------------------------------------------


def naor_shamir_kk(k: int) -> BasisPair:
    """The (k, k) pair whose B0 (B1) columns are all even (odd) weight k-vectors.

    Columns are listed in lexicographic order of their bit pattern, first row
    most significant.  m = 2**(k-1), h - l = 1 and black is perfect.
    """
    if k < 2:
        raise ParameterError(f"Naor-Shamir construction needs k >= 2, got {k}")
    cols = list(itertools.product((0, 1), repeat=k))
    even = [c for c in cols if sum(c) % 2 == 0]
    odd = [c for c in cols if sum(c) % 2 == 1]
    return BasisPair(k, np.array(even, dtype=BIT).T, np.array(odd, dtype=BIT).T)


def perfect_black_2n(n: int) -> BasisPair:
    """(2, n) pair with m = n: B0 rows all ``0 1..1``, B1 the complement of I."""
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    b0 = np.ones((n, n), dtype=BIT)
    b0[:, 0] = 0
    b1 = (1 - np.eye(n, dtype=BIT)).astype(BIT)
    return BasisPair(2, b0, b1)


def single_dot_2n(n: int) -> BasisPair:
    """(2, n) pair with m = n: B0 rows all ``1 0..0``, B1 the identity.

    Not perfect black: any two B1 rows stack to weight 2, so l = n - 2,
    while B0 stacks stay at weight 1.  m - h = 1 and m - l = 2 for every n.
    """
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    b0 = np.zeros((n, n), dtype=BIT)
    b0[:, 0] = 1
    return BasisPair(2, b0, np.eye(n, dtype=BIT))


def is_perfect_black(pair: BasisPair) -> bool:
    """Every k-row stack of B1 is solid black."""
    return pair.l == 0


def min_bits_for_levels(g: int) -> int:
    """Shortest bit string whose Hamming weights can tell g levels apart."""
    if g < 2:
        raise ParameterError(f"need at least 2 grey levels, got {g}")
    return g - 1


# -- validation ------------------------------------------------------------


@dataclass
class BasisValidation:
    h: int
    l: int  # noqa: E741
    alpha: Fraction
    contrast_ok: bool
    security: str  # "full", "partial", "failed" or "skipped"
    failures: list[str]

    @property
    def valid(self) -> bool:
        return self.contrast_ok and self.security in ("full", "partial")


def _restricted_counter(cols: list[tuple[int, ...]], rows: tuple[int, ...], perms) -> Counter:
    restricted = [tuple(c[r] for r in rows) for c in cols]
    return Counter(tuple(restricted[j] for j in p) for p in perms)


def validate_basis(
    pair: BasisPair, cap: int = DEFAULT_ENUMERATION_CAP, allow_partial: bool = True
) -> BasisValidation:
    """Check the contrast and security conditions of a binary pair.

    Security is decided by enumerating every column permutation of B0 and B1
    and comparing, for each set of fewer than k rows, the multisets of
    restricted matrices.  When ``m!`` exceeds ``cap`` only row-weight profiles
    are compared and the result is reported as ``"partial"``.
    """
    failures = []
    contrast_ok = 0 <= pair.l < pair.h <= pair.m
    if not contrast_ok:
        failures.append(f"contrast: need 0 <= l < h <= m, got l={pair.l}, h={pair.h}, m={pair.m}")

    small = [s for t in range(1, pair.k) for s in itertools.combinations(range(pair.n), t)]
    if math.factorial(pair.m) <= cap:
        perms = list(itertools.permutations(range(pair.m)))
        cols0 = [tuple(int(x) for x in c) for c in pair.b0.T]
        cols1 = [tuple(int(x) for x in c) for c in pair.b1.T]
        security = "full"
        for rows in small:
            if _restricted_counter(cols0, rows, perms) != _restricted_counter(cols1, rows, perms):
                failures.append(f"security: rows {rows} distinguish B0 from B1")
                security = "failed"
    elif allow_partial:
        security = "partial"
        for rows in small:
            w0 = sorted(hamming(or_rows(pair.b0, [r])) for r in rows)
            w1 = sorted(hamming(or_rows(pair.b1, [r])) for r in rows)
            if w0 != w1 or hamming(or_rows(pair.b0, rows)) != hamming(or_rows(pair.b1, rows)):
                failures.append(f"security: rows {rows} have different weight profiles")
                security = "failed"
    else:
        security = "skipped"
        failures.append(f"security: {pair.m}! permutations exceed cap {cap}")
    return BasisValidation(pair.h, pair.l, pair.alpha, contrast_ok, security, failures)


# -- greyscale families ----------------------------------------------------


@dataclass
class GreyFamily:
    """Level matrices G^0..G^{g-1}, each a row of m-wide B0/B1 blocks."""

    g: int
    k: int
    m: int
    levels: list[np.ndarray]
    labels: list[tuple[str, ...]]
    base_alpha: Fraction | None = None

    @property
    def n(self) -> int:
        return self.levels[0].shape[0]

    @property
    def m_g(self) -> int:
        return (self.g - 1) * self.m

    @property
    def layout(self) -> tuple[int, ...]:
        return (self.m,) * (self.g - 1)

    @property
    def alphas(self) -> list[Fraction]:
        """Adjacent-level contrasts predicted from the base pair: alpha / (g-1)."""
        if self.base_alpha is None:
            raise ParameterError("family was not built from a basis pair")
        return [self.base_alpha / (self.g - 1)] * (self.g - 1)

    def matrix(self, q: int) -> np.ndarray:
        if not 0 <= q < self.g:
            raise ParameterError(f"grey level {q} outside [0, {self.g - 1}]")
        return self.levels[q]


def level_labels(g: int, q: int) -> tuple[str, ...]:
    return ("B0",) * (g - q - 1) + ("B1",) * q


def build_grey_family(pair: BasisPair, g: int) -> GreyFamily:
    """G^q = (g-q-1) copies of B0 followed by q copies of B1."""
    if g < 2:
        raise ParameterError(f"need at least 2 grey levels, got {g}")
    blocks = {"B0": pair.b0, "B1": pair.b1}
    labels = [level_labels(g, q) for q in range(g)]
    levels = [concat(*(blocks[b] for b in lab)) for lab in labels]
    return GreyFamily(g, pair.k, pair.m, levels, labels, pair.alpha)


@dataclass
class ContrastReport:
    """Adjacent-level contrasts of a greyscale family or reconstruction.

    ``alphas[q]`` is the contrast between levels q+1 and q and
    ``thresholds[q]`` the matching d value: the lightest stack of level q+1.
    """

    alphas: list[Fraction]
    thresholds: list[int]
    contrast_ok: bool = True
    security_ok: bool = True
    bound_printed_ok: bool | None = None
    bound_mg_ok: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.contrast_ok and self.security_ok and all(a > 0 for a in self.alphas)


def check_grey_family(fam: GreyFamily) -> ContrastReport:
    """Measure the greyscale contrast and security conditions of ``fam``.

    Contrast: d_q is the minimum k-row stack weight of level q+1 and
    alpha(q+1, q) = (d_q - max k-row stack weight of level q) / m_g, which must
    be positive.  Security: for every set of fewer than k rows, the restricted
    column multiset is the same at every level (so OR weights match too).

    Both readings of the optimality bound on min alpha are recorded, 1/((g-1) m_g)
    as printed and 1/m_g, without affecting ``satisfied``.
    """
    n, k, m_g = fam.n, fam.k, fam.m_g
    alphas, thresholds, notes = [], [], []
    contrast_ok = True
    for q in range(fam.g - 1):
        low = max(subset_weights(fam.levels[q], k).values())
        high = min(subset_weights(fam.levels[q + 1], k).values())
        alpha = Fraction(high - low, m_g)
        alphas.append(alpha)
        thresholds.append(high)
        if alpha <= 0:
            contrast_ok = False
            notes.append(f"levels {q + 1}/{q}: lightest upper stack {high} <= darkest lower {low}")

    security_ok = True
    for t in range(1, k):
        for rows in itertools.combinations(range(n), t):
            profiles = {column_multiset(lvl[list(rows)]) for lvl in fam.levels}
            weights = {hamming(or_rows(lvl, rows)) for lvl in fam.levels}
            if len(profiles) != 1 or len(weights) != 1:
                security_ok = False
                notes.append(f"rows {rows} tell levels apart")

    smallest = min(alphas) if alphas else None
    bound_printed = None if smallest is None else smallest <= Fraction(1, (fam.g - 1) * m_g)
    bound_mg = None if smallest is None else smallest <= Fraction(1, m_g)
    return ContrastReport(alphas, thresholds, contrast_ok, security_ok, bound_printed, bound_mg, notes)


# -- text format -----------------------------------------------------------


def parse_matrix_text(text: str) -> np.ndarray:
    """Parse ``"n m"`` followed by n lines of m characters in {0, 1}."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty matrix text")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ParameterError(f"bad matrix header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != n or any(len(r) != m or set(r) - {"0", "1"} for r in body):
        raise ParameterError(f"matrix body does not match header {n}x{m}")
    return np.array([[int(c) for c in r] for r in body], dtype=BIT)


def format_matrix_text(m: np.ndarray) -> str:
    m = as_matrix(m)
    return f"{m.shape[0]} {m.shape[1]}\n" + "\n".join(to_str(r) for r in m) + "\n"


def parse_pair_text(text: str) -> tuple[np.ndarray, np.ndarray]:
    chunks = [c for c in text.strip().split("\n\n") if c.strip()]
    if len(chunks) != 2:
        raise ParameterError("a pair file holds B0, a blank line, then B1")
    return parse_matrix_text(chunks[0]), parse_matrix_text(chunks[1])


def load_pair(path: str | Path, k: int) -> BasisPair:
    b0, b1 = parse_pair_text(Path(path).read_text())
    return BasisPair(k, b0, b1)


def save_pair(pair: BasisPair, path: str | Path) -> None:
    Path(path).write_text(format_matrix_text(pair.b0) + "\n" + format_matrix_text(pair.b1))
