"""Per-pixel codecs for the stacking baseline and the three reversing schemes.

Each codec turns one secret grey level into share blocks for every
participant and turns the blocks of k participants back into a binary block:

* ``baseline``: one share per participant, decoded by stacking only.
* ``A``: m runs of (g-1)-bit blocks, decoded as NOT(OR(NOT T_1, ..., NOT T_m)).
  Needs a perfect-black base.
* ``B``: m runs, each a blockwise cyclic shift of the previous one, decoded by
  XOR-ing the m stacks and complementing when m - h is odd.  Needs m - h and
  m - l of opposite parity.
* ``C``: one share plus one public auxiliary share, decoded as
  (T OR A) XOR A with T the XOR of the shares and A the stack of aux shares.
  Needs the Naor-Shamir (k, k) base.

Participants are numbered from 1.  All codecs pick permutations inside each
m-wide B0/B1 component only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .basis import (
    BasisPair,
    GreyFamily,
    build_grey_family,
    is_perfect_black,
    naor_shamir_kk,
    perfect_black_2n,
    single_dot_2n,
    subset_weights,
)
from .boolmat import (
    BIT,
    ParameterError,
    as_vector,
    column_multiset,
    full_sample,
    gamma_shift,
    hamming,
    not_vec,
    or_fold,
    permute_columns,
    wbcp_sample,
    wbcp_sample_locked,
    xor_fold,
)

KINDS = ("baseline", "A", "B", "C")
_ALIASES = {"schemeA": "A", "schemeB": "B", "schemeC": "C", "a": "A", "b": "B", "c": "C"}
PERMUTATION_METHODS = ("wbcp", "locked", "full")


class PreconditionError(ParameterError):
    """The base pair or parameters do not satisfy a scheme's requirements."""


class DecodeError(ValueError):
    """A reconstructed block does not correspond to any grey level."""


@dataclass
class SchemeSpec:
    kind: str
    k: int
    n: int
    g: int
    base: BasisPair
    seed: int = 0
    # scheme C only: order of the k-subsets (1-based) inside each share
    subset_order: list[tuple[int, ...]] | None = None

    def __post_init__(self) -> None:
        self.kind = normalize_kind(self.kind)
        if self.kind not in KINDS:
            raise ParameterError(f"unknown scheme {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.g < 2:
            raise ParameterError(f"need at least 2 grey levels, got g={self.g}")
        if not 2 <= self.k <= self.n:
            raise ParameterError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")


@dataclass
class PixelShares:
    """Share blocks for one secret pixel.

    ``blocks[i][r]`` is participant i's block for run r (0-based run index);
    ``aux`` holds scheme C's auxiliary blocks.
    """

    level: int
    blocks: dict[int, list[np.ndarray]]
    aux: dict[int, np.ndarray] | None = None

    @property
    def runs(self) -> int:
        return len(next(iter(self.blocks.values())))


def normalize_kind(kind: str) -> str:
    """``schemeA`` and ``a`` both mean ``A``."""
    return _ALIASES.get(kind, kind)


def default_base(kind: str, k: int, n: int) -> BasisPair:
    """Built-in base pair for a scheme, or PreconditionError if none applies.

    (2, n): the perfect-black pair for baseline/A, the single-dot pair for B.
    (k, k): Naor-Shamir.  Scheme C always uses Naor-Shamir (k, k).
    """
    kind = normalize_kind(kind)
    if kind == "C":
        return naor_shamir_kk(k)
    if k == 2:
        return single_dot_2n(n) if kind == "B" else perfect_black_2n(n)
    if k == n:
        return naor_shamir_kk(k)
    raise PreconditionError(f"no built-in ({k},{n}) base for scheme {kind}; supply one")


# -- checks ----------------------------------------------------------------


def check_parity(pair: BasisPair) -> None:
    """Every k-stack of B0 must share one parity and every B1 stack the other."""
    p0 = {w % 2 for w in subset_weights(pair.b0, pair.k).values()}
    p1 = {w % 2 for w in subset_weights(pair.b1, pair.k).values()}
    if len(p0) != 1 or len(p1) != 1 or p0 == p1:
        raise PreconditionError(
            f"scheme B requires m-h and m-l of opposite parity for every stack "
            f"(m-h={pair.m - pair.h}, m-l={pair.m - pair.l})"
        )


def is_naor_shamir(pair: BasisPair) -> bool:
    if pair.n != pair.k:
        return False
    ref = naor_shamir_kk(pair.k)
    return pair.b0.shape == ref.b0.shape and (
        column_multiset(pair.b0) == column_multiset(ref.b0)
        and column_multiset(pair.b1) == column_multiset(ref.b1)
    )


def _check_level(q: int, g: int) -> None:
    if not 0 <= q < g:
        raise ParameterError(f"grey level {q} outside [0, {g - 1}]")


def _select(blocks: Mapping[int, object], participants: Sequence[int], k: int) -> list[int]:
    chosen = sorted(set(participants))
    missing = [p for p in chosen if p not in blocks]
    if missing:
        raise ParameterError(f"no shares for participants {missing}")
    if len(chosen) < k:
        raise ParameterError(f"need shares from at least k={k} participants, got {len(chosen)}")
    return chosen[:k]


def _runs_of(blocks: Sequence[Sequence], runs: int) -> None:
    for j, b in enumerate(blocks):
        if len(b) != runs:
            raise ParameterError(f"participant #{j + 1} supplied {len(b)} runs, expected {runs}")


# -- reconstruction procedures --------------------------------------------


def baseline_reconstruct(blocks: Sequence) -> np.ndarray:
    """Stack the blocks."""
    return or_fold([as_vector(b) for b in blocks])


def schemeA_reconstruct(blocks: Sequence[Sequence], m: int) -> np.ndarray:
    """``blocks[j][r]``: participant j, run r.  Returns NOT(OR(NOT T_1..NOT T_m))."""
    _runs_of(blocks, m)
    stacks = [or_fold([b[r] for b in blocks]) for r in range(m)]
    return not_vec(or_fold([not_vec(t) for t in stacks]))


def schemeB_reconstruct(blocks: Sequence[Sequence], pair: BasisPair) -> np.ndarray:
    """XOR of the m per-run stacks, complemented when m - h is odd."""
    _runs_of(blocks, pair.m)
    stacks = [or_fold([b[r] for b in blocks]) for r in range(pair.m)]
    u = xor_fold(stacks, copy_machine=True)
    return not_vec(u) if (pair.m - pair.h) % 2 else u


def schemeC_reconstruct(shares: Mapping[int, np.ndarray], aux: Mapping[int, np.ndarray]) -> np.ndarray:
    """(T OR A) XOR A, with T the XOR of ``shares`` and A the stack of ``aux``.

    The last step runs as NOT(NOT(T OR A) OR A): A is covered by T OR A, so the
    first half of the usual 4-NOT/3-OR XOR is always white.
    """
    if set(shares) != set(aux):
        raise ParameterError(
            f"share participants {sorted(shares)} differ from aux participants {sorted(aux)}"
        )
    order = sorted(shares)
    t = xor_fold([shares[p] for p in order], copy_machine=True)
    a = or_fold([aux[p] for p in order])
    return not_vec(or_fold([not_vec(or_fold([t, a])), a]))


# -- scheme C matrices -----------------------------------------------------


@dataclass
class AuxMatrices:
    """Scheme C level matrices L^q and the public auxiliary matrix GA.

    Block p (width m_g) belongs to ``subset_order[p]``: its rows for those
    participants carry the (k, k) level matrix, every other row is solid black.
    GA is white on exactly those rows and black elsewhere.
    """

    levels: list[np.ndarray]
    ga: np.ndarray
    subset_order: list[tuple[int, ...]]
    family: GreyFamily

    @property
    def block_width(self) -> int:
        return self.family.m_g

    @property
    def layout(self) -> tuple[int, ...]:
        return self.family.layout * len(self.subset_order)


def schemeC_build_matrices(
    base: BasisPair, g: int, n: int, subset_order: Sequence[Sequence[int]] | None = None
) -> AuxMatrices:
    if not is_naor_shamir(base):
        raise PreconditionError("scheme C requires the Naor-Shamir (k,k) basis")
    k = base.k
    if n < k:
        raise ParameterError(f"need n >= k, got n={n}, k={k}")
    every = list(itertools.combinations(range(1, n + 1), k))
    order = every if subset_order is None else [tuple(sorted(s)) for s in subset_order]
    if sorted(order) != every:
        raise ParameterError(f"subset order must list each of the {len(every)} {k}-subsets once")

    fam = build_grey_family(base, g)
    width = fam.m_g
    levels = []
    for q in range(g):
        blocks = []
        for subset in order:
            block = np.ones((n, width), dtype=BIT)
            block[[p - 1 for p in subset]] = fam.levels[q]
            blocks.append(block)
        levels.append(np.concatenate(blocks, axis=1))
    ga_blocks = []
    for subset in order:
        block = np.ones((n, width), dtype=BIT)
        block[[p - 1 for p in subset]] = 0
        ga_blocks.append(block)
    return AuxMatrices(levels, np.concatenate(ga_blocks, axis=1), order, fam)


# -- codecs ----------------------------------------------------------------


@dataclass
class Codec:
    """Distribution and reconstruction for one scheme instance."""

    spec: SchemeSpec
    method: str = "wbcp"
    _tables: dict = field(default_factory=dict, init=False, repr=False)

    kind = "baseline"

    def __post_init__(self) -> None:
        if self.method not in PERMUTATION_METHODS:
            raise ParameterError(f"unknown permutation method {self.method!r}")
        base = self.spec.base
        if base.k != self.spec.k or base.n != self.check_rows():
            raise PreconditionError(
                f"base is a ({base.k},{base.n}) pair, scheme needs k={self.spec.k}, n={self.spec.n}"
            )
        self.check()

    def check_rows(self) -> int:
        return self.spec.n

    def check(self) -> None:
        pass

    # geometry

    @cached_property
    def family(self) -> GreyFamily:
        return build_grey_family(self.spec.base, self.spec.g)

    @property
    def m(self) -> int:
        return self.spec.base.m

    @property
    def runs(self) -> int:
        """Share transparencies per participant per pixel, excluding aux."""
        return 1

    @property
    def shares_held(self) -> int:
        return self.runs

    @property
    def block_length(self) -> int:
        """Subpixels per secret pixel on one transparency (pixel expansion)."""
        return self.family.m_g

    @property
    def contrast_length(self) -> int:
        """Length the reconstructed weight difference is divided by."""
        return self.family.m_g

    @property
    def layout(self) -> tuple[int, ...]:
        return self.family.layout

    def matrix(self, q: int) -> np.ndarray:
        _check_level(q, self.spec.g)
        return self.family.levels[q]

    # distribution

    def sample(self, q: int, rng: np.random.Generator) -> np.ndarray:
        mat = self.matrix(q)
        if self.method == "wbcp":
            return wbcp_sample(mat, self.layout, rng)
        if self.method == "locked":
            return wbcp_sample_locked(mat, self.layout, rng)
        return full_sample(mat, rng)

    def split(self, chosen: np.ndarray, q: int) -> PixelShares:
        return PixelShares(q, {i + 1: [row.copy()] for i, row in enumerate(chosen)})

    def distribute(self, q: int, rng: np.random.Generator) -> PixelShares:
        return self.split(self.sample(q, rng), q)

    def split_permuted(self, q: int, perm: Sequence[int]) -> PixelShares:
        return self.split(permute_columns(self.matrix(q), perm), q)

    # reconstruction

    def reconstruct(self, shares: PixelShares, participants: Sequence[int]) -> np.ndarray:
        chosen = _select(shares.blocks, participants, self.spec.k)
        return self._reconstruct(shares, chosen)

    def _reconstruct(self, shares: PixelShares, chosen: list[int]) -> np.ndarray:
        return baseline_reconstruct([shares.blocks[p][0] for p in chosen])

    def stack(self, shares: PixelShares, participants: Sequence[int]) -> np.ndarray:
        """Stacking-only reconstruction: OR of each participant's runs laid side by side."""
        chosen = _select(shares.blocks, participants, self.spec.k)
        return or_fold([np.concatenate(shares.blocks[p]) for p in chosen])

    def level_table(self, participants: Sequence[int], stack_only: bool = False) -> dict[int, int]:
        """Map reconstructed Hamming weight to grey level for these participants.

        Weights do not depend on the permutation draw, so the unpermuted level
        matrices calibrate the table.
        """
        chosen = tuple(sorted(set(participants))[: self.spec.k])
        key = (chosen, stack_only)
        if key not in self._tables:
            table = {}
            for q in range(self.spec.g):
                shares = self.split(self.matrix(q), q)
                out = self.stack(shares, chosen) if stack_only else self.reconstruct(shares, chosen)
                w = hamming(out)
                if w in table:
                    raise DecodeError(f"levels {table[w]} and {q} both reconstruct to weight {w}")
                table[w] = q
            self._tables[key] = table
        return self._tables[key]

    def decode(self, shares: PixelShares, participants: Sequence[int], stack_only: bool = False):
        """Return ``(level, reconstructed block)``."""
        out = self.stack(shares, participants) if stack_only else self.reconstruct(shares, participants)
        table = self.level_table(participants, stack_only)
        w = hamming(out)
        if w not in table:
            raise DecodeError(f"weight {w} matches no grey level (expected one of {sorted(table)})")
        return table[w], out


class BaselineCodec(Codec):
    kind = "baseline"


class SchemeACodec(Codec):
    kind = "A"

    def check(self) -> None:
        if not is_perfect_black(self.spec.base):
            raise PreconditionError(
                f"scheme A requires perfect-black basis (l=0), got l={self.spec.base.l}"
            )

    @property
    def runs(self) -> int:
        return self.m

    @property
    def block_length(self) -> int:
        return self.spec.g - 1

    @property
    def contrast_length(self) -> int:
        return self.spec.g - 1

    def split(self, chosen: np.ndarray, q: int) -> PixelShares:
        g, m = self.spec.g, self.m
        # run r gets column r of every component
        cube = chosen.reshape(chosen.shape[0], g - 1, m)
        return PixelShares(
            q, {i + 1: [cube[i, :, r].copy() for r in range(m)] for i in range(chosen.shape[0])}
        )

    def _reconstruct(self, shares: PixelShares, chosen: list[int]) -> np.ndarray:
        return schemeA_reconstruct([shares.blocks[p] for p in chosen], self.m)


class SchemeBCodec(Codec):
    kind = "B"

    def check(self) -> None:
        check_parity(self.spec.base)

    @property
    def runs(self) -> int:
        return self.m

    @property
    def complement(self) -> bool:
        return (self.m - self.spec.base.h) % 2 == 1

    def split(self, chosen: np.ndarray, q: int) -> PixelShares:
        blocks = {}
        for i, row in enumerate(chosen):
            runs = [row.copy()]
            for _ in range(1, self.m):
                runs.append(gamma_shift(runs[-1], self.m))
            blocks[i + 1] = runs
        return PixelShares(q, blocks)

    def _reconstruct(self, shares: PixelShares, chosen: list[int]) -> np.ndarray:
        return schemeB_reconstruct([shares.blocks[p] for p in chosen], self.spec.base)


class SchemeCCodec(Codec):
    kind = "C"

    def check_rows(self) -> int:
        return self.spec.k

    def check(self) -> None:
        self.aux_matrices  # noqa: B018 -- builds and validates

    @cached_property
    def aux_matrices(self) -> AuxMatrices:
        s = self.spec
        return schemeC_build_matrices(s.base, s.g, s.n, s.subset_order)

    @property
    def shares_held(self) -> int:
        return 2

    @property
    def block_length(self) -> int:
        return self.family.m_g * len(self.aux_matrices.subset_order)

    @property
    def layout(self) -> tuple[int, ...]:
        return self.aux_matrices.layout

    def matrix(self, q: int) -> np.ndarray:
        _check_level(q, self.spec.g)
        return self.aux_matrices.levels[q]

    def split(self, chosen: np.ndarray, q: int) -> PixelShares:
        ga = self.aux_matrices.ga
        return PixelShares(
            q,
            {i + 1: [row.copy()] for i, row in enumerate(chosen)},
            {i + 1: ga[i].copy() for i in range(ga.shape[0])},
        )

    def _reconstruct(self, shares: PixelShares, chosen: list[int]) -> np.ndarray:
        if shares.aux is None:
            raise ParameterError("scheme C reconstruction needs the auxiliary shares")
        missing = [p for p in chosen if p not in shares.aux]
        if missing:
            raise ParameterError(f"no auxiliary shares for participants {missing}")
        return schemeC_reconstruct(
            {p: shares.blocks[p][0] for p in chosen}, {p: shares.aux[p] for p in chosen}
        )


_CODECS = {"baseline": BaselineCodec, "A": SchemeACodec, "B": SchemeBCodec, "C": SchemeCCodec}


def make_codec(spec: SchemeSpec, method: str = "wbcp") -> Codec:
    """Build the codec for ``spec``; raises PreconditionError naming the scheme."""
    return _CODECS[normalize_kind(spec.kind)](spec, method)


# -- per-scheme entry points -----------------------------------------------


def _distribute(kind: str, spec: SchemeSpec, q: int, rng: np.random.Generator) -> PixelShares:
    if spec.kind != kind:
        raise ParameterError(f"spec is for scheme {spec.kind}, not {kind}")
    return make_codec(spec).distribute(q, rng)


def baseline_distribute(spec: SchemeSpec, q: int, rng: np.random.Generator) -> PixelShares:
    return _distribute("baseline", spec, q, rng)


def schemeA_distribute(spec: SchemeSpec, q: int, rng: np.random.Generator) -> PixelShares:
    return _distribute("A", spec, q, rng)


def schemeB_distribute(spec: SchemeSpec, q: int, rng: np.random.Generator) -> PixelShares:
    return _distribute("B", spec, q, rng)


def schemeC_distribute(spec: SchemeSpec, q: int, rng: np.random.Generator) -> PixelShares:
    return _distribute("C", spec, q, rng)


def closed_form_expansion(kind: str, k: int, n: int, g: int, m: int) -> int:
    """Pixel expansion per scheme as a formula of k, n, g and the base width m."""
    if kind in ("baseline", "B"):
        return (g - 1) * m
    if kind == "A":
        return g - 1
    return (g - 1) * 2 ** (k - 1) * math.comb(n, k)
