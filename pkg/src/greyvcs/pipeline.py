"""Whole-image encoding and decoding.

Each secret pixel becomes a horizontal run of ``block_length`` subpixels on
every share image, so a share is ``height x (width * block_length)`` bits.
Reconstruction runs the scheme's copy-machine procedure on entire flattened
transparencies at once, which is what a copier does with real sheets.

Grey values are darkness: level 0 is white.  An 8-bit PGM sample ``v``
quantizes to ``floor(v * g / 256)`` and level ``q`` renders back as
``floor(q * 255 / (g - 1))``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import netpbm
from .basis import BasisPair, format_matrix_text, parse_matrix_text
from .boolmat import BIT, ParameterError
from .schemes import Codec, DecodeError, PixelShares, SchemeSpec, make_codec

MANIFEST_NAME = "manifest.json"


class MissingShareError(LookupError):
    """A share needed for decoding is absent."""


@dataclass
class GreyImage:
    levels: np.ndarray  # (height, width) ints in [0, g-1]
    g: int

    def __post_init__(self) -> None:
        self.levels = np.asarray(self.levels, dtype=np.int64)
        if self.levels.ndim != 2:
            raise ParameterError(f"grey image must be 2-D, got shape {self.levels.shape}")
        if self.g < 2:
            raise ParameterError(f"need at least 2 grey levels, got g={self.g}")
        if self.levels.size and (self.levels.min() < 0 or self.levels.max() >= self.g):
            raise ParameterError(f"pixel levels must lie in [0, {self.g - 1}]")

    @property
    def height(self) -> int:
        return self.levels.shape[0]

    @property
    def width(self) -> int:
        return self.levels.shape[1]

    def render(self) -> np.ndarray:
        """8-bit samples, level q -> floor(q*255/(g-1))."""
        return (self.levels * 255 // (self.g - 1)).astype(np.uint8)


@dataclass
class ShareImage:
    participant: int
    run: int  # 1-based; 0 for aux
    kind: str  # "share" or "aux"
    bits: np.ndarray  # (height, width * block_length)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def filename(self) -> str:
        if self.kind == "aux":
            return f"p{self.participant}_aux.pbm"
        return f"p{self.participant}_r{self.run}.pbm"


@dataclass
class Manifest:
    scheme: str
    k: int
    n: int
    g: int
    m: int
    seed: int
    runs: int
    block_length: int
    width: int
    height: int
    base_b0: str
    base_b1: str
    method: str = "wbcp"
    subset_order: list[list[int]] | None = None
    parity_rule: str | None = None
    files: list[dict] = field(default_factory=list)

    def base(self) -> BasisPair:
        return BasisPair(self.k, parse_matrix_text(self.base_b0), parse_matrix_text(self.base_b1))

    def spec(self) -> SchemeSpec:
        order = [tuple(s) for s in self.subset_order] if self.subset_order else None
        return SchemeSpec(self.scheme, self.k, self.n, self.g, self.base(), self.seed, order)

    def codec(self) -> Codec:
        return make_codec(self.spec(), self.method)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        try:
            data = json.loads(text)
            return cls(**data)
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParameterError(f"bad manifest: {exc}") from None


def quantize(raster: np.ndarray, g: int) -> GreyImage:
    """Map 8-bit samples to g levels; 0 stays level 0 (white)."""
    if not 2 <= g <= 256:
        raise ParameterError(f"g must lie in [2, 256], got {g}")
    raster = np.asarray(raster)
    if raster.size and (raster.min() < 0 or raster.max() > 255):
        raise ParameterError("samples must lie in [0, 255]")
    levels = np.minimum(raster.astype(np.int64) * g // 256, g - 1)
    return GreyImage(levels, g)


def pixel_rng(seed: int, row: int, col: int) -> np.random.Generator:
    """Independent stream per pixel so encoding order never matters."""
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), row, col]))


def _parity_rule(codec: Codec) -> str | None:
    if codec.kind != "B":
        return None
    mh = codec.m - codec.spec.base.h
    return f"complement (m-h={mh} odd)" if mh % 2 else f"no complement (m-h={mh} even)"


def encode_image(
    img: GreyImage, spec: SchemeSpec, workers: int = 1, method: str = "wbcp"
) -> tuple[list[ShareImage], Manifest]:
    """Split ``img`` into share images.  Output depends only on (img, spec, method)."""
    if img.g != spec.g:
        raise ParameterError(f"image has g={img.g}, scheme has g={spec.g}")
    codec = make_codec(spec, method)
    n, runs, blen = spec.n, codec.runs, codec.block_length
    h, w = img.height, img.width
    out = np.zeros((n, runs, h, w * blen), dtype=BIT)

    def do_row(row: int) -> None:
        for col in range(w):
            px = codec.distribute(int(img.levels[row, col]), pixel_rng(spec.seed, row, col))
            for p, blocks in px.blocks.items():
                for r, block in enumerate(blocks):
                    out[p - 1, r, row, col * blen:(col + 1) * blen] = block

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(do_row, range(h)))
    else:
        for row in range(h):
            do_row(row)

    shares = [ShareImage(p + 1, r + 1, "share", out[p, r]) for p in range(n) for r in range(runs)]
    if codec.kind == "C":
        ga = codec.aux_matrices.ga
        shares += [ShareImage(p + 1, 0, "aux", np.tile(ga[p], (h, w))) for p in range(n)]

    base = spec.base
    order = codec.aux_matrices.subset_order if codec.kind == "C" else None
    manifest = Manifest(
        scheme=codec.kind, k=spec.k, n=n, g=spec.g, m=codec.m, seed=spec.seed, runs=runs,
        block_length=blen, width=w, height=h,
        base_b0=format_matrix_text(base.b0), base_b1=format_matrix_text(base.b1),
        method=method,
        subset_order=[list(s) for s in order] if order else None,
        parity_rule=_parity_rule(codec),
        files=[{"participant": s.participant, "run": s.run, "kind": s.kind, "path": s.filename}
               for s in shares],
    )
    return shares, manifest


@dataclass
class DecodeResult:
    image: GreyImage
    raster: np.ndarray  # reconstructed subpixels; runs stacked vertically in stack-only mode
    weights: np.ndarray  # per-pixel Hamming weight of the reconstructed block
    participants: tuple[int, ...]


def _index(shares: Iterable[ShareImage]) -> dict[tuple[int, str, int], ShareImage]:
    return {(s.participant, s.kind, s.run): s for s in shares}


def decode_image(
    shares: Sequence[ShareImage],
    manifest: Manifest,
    participants: Sequence[int] | None = None,
    stack_only: bool = False,
) -> DecodeResult:
    """Reconstruct from the shares of ``participants`` (default: all present)."""
    codec = manifest.codec()
    k = manifest.k
    index = _index(shares)
    present = sorted({s.participant for s in shares})
    chosen = sorted(set(participants)) if participants is not None else present
    if any(not 1 <= p <= manifest.n for p in chosen):
        raise ParameterError(f"participants must lie in [1, {manifest.n}], got {chosen}")
    if len(chosen) < k:
        raise ParameterError(f"need at least k={k} participants, got {len(chosen)}: {chosen}")
    chosen = chosen[:k]

    missing = [(p, r) for p in chosen for r in range(1, manifest.runs + 1)
               if (p, "share", r) not in index]
    if codec.kind == "C" and not stack_only:
        missing += [(p, "aux") for p in chosen if (p, "aux", 0) not in index]
    if missing:
        raise MissingShareError(
            "missing shares: " + ", ".join(f"(participant {p}, run {r})" for p, r in missing)
        )

    h, w, blen = manifest.height, manifest.width, manifest.block_length
    expected = (h, w * blen)
    for p in chosen:
        for r in range(1, manifest.runs + 1):
            if index[(p, "share", r)].bits.shape != expected:
                raise ParameterError(
                    f"share (participant {p}, run {r}) is {index[(p, 'share', r)].bits.shape}, "
                    f"expected {expected}"
                )

    flat = {p: [index[(p, "share", r)].bits.reshape(-1) for r in range(1, manifest.runs + 1)]
            for p in chosen}
    if stack_only:
        # one OR stack per run, weights summed over the runs of each pixel
        per_run = []
        for r in range(manifest.runs):
            px = PixelShares(-1, {p: [flat[p][r]] for p in chosen})
            per_run.append(Codec._reconstruct(codec, px, chosen).reshape(h, w * blen))
        raster = np.concatenate(per_run, axis=0)
        weights = sum(x.reshape(h, w, blen).sum(axis=2) for x in per_run)
    else:
        aux = {p: index[(p, "aux", 0)].bits.reshape(-1) for p in chosen} if codec.kind == "C" else None
        px = PixelShares(-1, flat, aux)
        raster = codec._reconstruct(px, chosen).reshape(h, w * blen)
        weights = raster.reshape(h, w, blen).sum(axis=2)

    table = codec.level_table(chosen, stack_only)
    lookup = np.full(int(max(table)) + 2, -1, dtype=np.int64)
    for wt, q in table.items():
        lookup[wt] = q
    clipped = np.minimum(weights, lookup.size - 1)
    levels = lookup[clipped]
    if (levels < 0).any():
        row, col = map(int, np.argwhere(levels < 0)[0])
        raise DecodeError(
            f"pixel ({row}, {col}) reconstructs to weight {int(weights[row, col])}, "
            f"which matches no grey level {sorted(table)}"
        )
    return DecodeResult(GreyImage(levels, manifest.g), raster, weights.astype(np.int64), tuple(chosen))


@dataclass
class ContrastMeasurement:
    """Adjacent-level contrasts ``alphas[q]`` between levels q and q+1."""

    alphas: list[Fraction]
    levels: list[int]
    length: int

    @property
    def uniform(self) -> bool:
        return len(set(self.alphas)) <= 1


def measure_contrast(blocks_by_level: Mapping[int, Iterable], length: int) -> ContrastMeasurement:
    """(min weight at the upper level - max weight at the lower) / length, per adjacent pair."""
    weights = {q: [int(np.count_nonzero(b)) for b in blocks] for q, blocks in blocks_by_level.items()}
    levels = sorted(q for q, ws in weights.items() if ws)
    if len(levels) < 2:
        raise ParameterError("need reconstructions from at least two levels")
    alphas = [Fraction(min(weights[hi]) - max(weights[lo]), length) for lo, hi in zip(levels, levels[1:])]
    return ContrastMeasurement(alphas, levels, length)


def image_contrast(result: DecodeResult, secret: GreyImage, length: int) -> ContrastMeasurement:
    """Contrast from a decoded image, grouping reconstructed weights by the true level."""
    groups: dict[int, list] = {}
    for q in np.unique(secret.levels):
        ws = result.weights[secret.levels == q]
        groups[int(q)] = [np.ones(int(x), dtype=BIT) for x in (ws.min(), ws.max())]
    return measure_contrast(groups, length)


# -- files -------------------------------------------------------------------


def save_shares(out_dir: str | Path, shares: Sequence[ShareImage], manifest: Manifest,
                ascii: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for s in shares:
        path = out_dir / s.filename
        netpbm.write_pbm(path, s.bits, ascii)
        written.append(path)
    (out_dir / MANIFEST_NAME).write_text(manifest.to_json())
    written.append(out_dir / MANIFEST_NAME)
    return written


def load_manifest(share_dir: str | Path) -> Manifest:
    path = Path(share_dir) / MANIFEST_NAME
    if not path.is_file():
        raise MissingShareError(f"no {MANIFEST_NAME} in {share_dir}")
    return Manifest.from_json(path.read_text())


def load_shares(share_dir: str | Path, manifest: Manifest,
                participants: Sequence[int] | None = None) -> list[ShareImage]:
    """Read the listed share files for ``participants``; absent files are skipped."""
    share_dir = Path(share_dir)
    wanted = set(participants) if participants is not None else None
    shares = []
    for entry in manifest.files:
        if wanted is not None and entry["participant"] not in wanted:
            continue
        path = share_dir / entry["path"]
        if path.is_file():
            shares.append(ShareImage(entry["participant"], entry["run"], entry["kind"],
                                     netpbm.read_pbm(path)))
    return shares
