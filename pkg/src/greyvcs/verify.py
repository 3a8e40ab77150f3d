"""Golden fixtures, exhaustive oracles and the scheme comparison report.

Golden fixtures are transcriptions of worked examples: JSON tables under
``fixtures/tables`` that name a base pair from ``fixtures/bases``.  Each table
is replayed bit for bit.  A transcribed cell that disagrees with the replay
is a failure unless the table lists it under ``errata`` with the replayed
value, in which case it is reported as an erratum and the suite stays green.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterator, Sequence

import numpy as np

from .basis import BasisPair, build_grey_family, check_grey_family, load_pair, subset_weights
from .boolmat import (
    count_ops,
    gamma_shift,
    hamming,
    iter_full_perms,
    iter_locked_perms,
    iter_wbcp_perms,
    matrix,
    or_fold,
    to_str,
    wbcp_count,
    xor_fold,
)
from .schemes import (
    KINDS,
    Codec,
    PreconditionError,
    SchemeSpec,
    closed_form_expansion,
    default_base,
    make_codec,
    schemeA_reconstruct,
    schemeC_build_matrices,
    schemeC_reconstruct,
)

DEFAULT_CAP = 200_000

ORACLE_IDS = ("security", "method1", "leakage", "direct")


def fixture_root():
    return resources.files("greyvcs") / "fixtures"


def load_base(name: str, k: int) -> BasisPair:
    with resources.as_file(fixture_root() / "bases" / f"{name}.txt") as path:
        return load_pair(path, k)


def fixture_ids() -> list[str]:
    return sorted(p.name[:-5] for p in (fixture_root() / "tables").iterdir() if p.name.endswith(".json"))


def load_fixture(fid: str) -> dict:
    path = fixture_root() / "tables" / f"{fid}.json"
    if not path.is_file():
        raise KeyError(f"no fixture named {fid!r}; known: {', '.join(fixture_ids())}")
    return json.loads(path.read_text())


# -- comparison bookkeeping ----------------------------------------------------


@dataclass
class FixtureResult:
    id: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)
    errata: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def status(self) -> str:
        if self.failures:
            return "FAIL"
        return "pass (with errata)" if self.errata else "pass"


def first_difference(expected: str, actual: str) -> str:
    for i, (e, a) in enumerate(zip(expected, actual)):
        if e != a:
            return f"first difference at bit {i}: expected {e}, got {a}"
    return f"lengths differ: expected {len(expected)} bits, got {len(actual)}"


class _Checker:
    def __init__(self, result: FixtureResult, errata: dict):
        self.result = result
        self.errata = errata

    def same(self, path: str, expected: str, actual) -> None:
        actual = actual if isinstance(actual, str) else to_str(actual)
        self.result.checks += 1
        if expected == actual:
            return
        fix = self.errata.get(path)
        if fix is not None and fix["replayed"] == actual:
            self.result.errata.append(f"{path}: printed {expected}, replayed {actual} ({fix['note']})")
            return
        self.result.failures.append(
            f"{path}: expected {expected}, got {actual}; {first_difference(expected, actual)}"
        )

    def truth(self, path: str, ok: bool, detail: str) -> None:
        self.result.checks += 1
        if not ok:
            self.result.failures.append(f"{path}: {detail}")


def _pairs(recon: dict) -> Iterator[tuple[str, tuple[int, ...]]]:
    for key in recon:
        yield key, tuple(int(x) for x in key.split(","))


def reachable(chosen: np.ndarray, base: np.ndarray, layout: Sequence[int], method: str) -> bool:
    """Whether ``chosen`` is a column permutation of ``base`` allowed by ``method``."""
    if chosen.shape != base.shape:
        return False
    cols = lambda m: sorted(map(tuple, m.T.tolist()))  # noqa: E731
    if method == "full":
        return cols(chosen) == cols(base)
    edges = np.cumsum([0, *layout])
    spans = list(zip(edges[:-1], edges[1:]))
    if method == "wbcp":
        return all(cols(chosen[:, a:b]) == cols(base[:, a:b]) for a, b in spans)
    return any(np.array_equal(base[:, perm], chosen) for perm in iter_locked_perms(layout))


# -- replays -------------------------------------------------------------------


def _replay_scheme(data: dict, chk: _Checker) -> None:
    base = load_base(data["base"], data["k"])
    order = [tuple(s) for s in data["subset_order"]] if "subset_order" in data else None
    spec = SchemeSpec(data["scheme"], data["k"], data["n"], data["g"], base, 0, order)
    codec = make_codec(spec, data["method"])

    for name, rows in data.get("matrices", {}).items():
        built = codec.aux_matrices.ga if name == "GA" else codec.matrix(int(name[1:]))
        chk.same(f"matrices / {name}", ";".join(rows), to_str(built))

    for lvl in data["levels"]:
        q, tag = lvl["q"], f"grey {lvl['label']}"
        chosen = matrix(lvl["chosen"])
        chk.truth(f"{tag} / chosen", reachable(chosen, codec.matrix(q), codec.layout, data["method"]),
                  f"not a {data['method']} permutation of level {q}")
        px = codec.split(chosen, q)
        for p, runs in lvl["shares"].items():
            for r, want in enumerate(runs):
                chk.same(f"{tag} / share {p} / run {r + 1}", want, px.blocks[int(p)][r])
        for p, want in lvl.get("aux", {}).items():
            chk.same(f"{tag} / aux {p}", want, px.aux[int(p)])
        for key, pair in _pairs(lvl["recon"]):
            exp = lvl["recon"][key]
            if "stacks" in exp:
                for r, want in enumerate(exp["stacks"]):
                    chk.same(f"{tag} / {key} / stack {r + 1}", want,
                             or_fold([px.blocks[p][r] for p in pair]))
            if "T" in exp:
                chk.same(f"{tag} / {key} / T", exp["T"], xor_fold([px.blocks[p][0] for p in pair]))
                chk.same(f"{tag} / {key} / A", exp["A"], or_fold([px.aux[p] for p in pair]))
            chk.same(f"{tag} / {key} / out", exp["out"], codec.reconstruct(px, pair))


def _collision(data: dict, outs: dict, chk: _Checker) -> None:
    a, b = data["expect_collision"]
    for key in outs[a]:
        chk.truth(f"collision / {key}", outs[a][key] == outs[b][key],
                  f"grey {a} gives {outs[a][key]}, grey {b} gives {outs[b][key]}")
    chk.result.notes.append(f"grey {a} and grey {b} reconstruct identically for every pair")


def _replay_direct_runs(data: dict, chk: _Checker) -> None:
    """One subpixel per run, reconstructed by AND over all (g-1)m runs."""
    fam = build_grey_family(load_base(data["base"], data["k"]), data["g"])
    runs = fam.m_g
    outs: dict = {}
    for lvl in data["levels"]:
        tag, rows = f"grey {lvl['label']}", fam.levels[lvl["q"]]
        for p, want in lvl["shares"].items():
            chk.same(f"{tag} / share {p}", want, rows[int(p) - 1])
        outs[lvl["label"]] = {}
        for key, pair in _pairs(lvl["recon"]):
            blocks = [[rows[p - 1][r:r + 1] for r in range(runs)] for p in pair]
            chk.same(f"{tag} / {key} / stacks", lvl["recon"][key]["stacks"],
                     or_fold([rows[p - 1] for p in pair]))
            out = to_str(schemeA_reconstruct(blocks, runs))
            chk.same(f"{tag} / {key} / out", lvl["recon"][key]["out"], out)
            outs[lvl["label"]][key] = out
    _collision(data, outs, chk)


def _replay_direct_cyclic(data: dict, chk: _Checker) -> None:
    """Whole-vector rotation over m_g runs, XOR of all stacks, no complement."""
    fam = build_grey_family(load_base(data["base"], data["k"]), data["g"])
    runs = fam.m_g
    outs: dict = {}
    for lvl in data["levels"]:
        tag, rows = f"grey {lvl['label']}", fam.levels[lvl["q"]]
        shares = {}
        for i, row in enumerate(rows):
            seq = [row]
            for _ in range(runs - 1):
                seq.append(gamma_shift(seq[-1], runs))
            shares[i + 1] = seq
        for p, want in lvl["shares"].items():
            for r, w in enumerate(want):
                chk.same(f"{tag} / share {p} / run {r + 1}", w, shares[int(p)][r])
        outs[lvl["label"]] = {}
        for key, pair in _pairs(lvl["recon"]):
            stacks = [or_fold([shares[p][r] for p in pair]) for r in range(runs)]
            for r, want in enumerate(lvl["recon"][key]["stacks"]):
                chk.same(f"{tag} / {key} / stack {r + 1}", want, stacks[r])
            out = to_str(xor_fold(stacks))
            chk.same(f"{tag} / {key} / out", lvl["recon"][key]["out"], out)
            outs[lvl["label"]][key] = out
    _collision(data, outs, chk)


def _replay_direct_aux(data: dict, chk: _Checker) -> None:
    """Auxiliary-matrix scheme with unrestricted column permutation."""
    aux = schemeC_build_matrices(load_base(data["base"], data["k"]), data["g"], data["n"])
    weights: dict = {}
    for lvl in data["levels"]:
        q, tag = lvl["q"], f"grey {lvl['label']}"
        chosen = matrix(lvl["chosen"])
        chk.truth(f"{tag} / chosen", reachable(chosen, aux.levels[q], aux.layout, "full"),
                  f"not a column permutation of level {q}")
        for p, want in lvl["aux"].items():
            chk.same(f"{tag} / aux {p}", want, aux.ga[int(p) - 1])
        for key, pair in _pairs(lvl["recon"]):
            exp = lvl["recon"][key]
            t = {p: chosen[p - 1] for p in pair}
            a = {p: aux.ga[p - 1] for p in pair}
            chk.same(f"{tag} / {key} / T", exp["T"], xor_fold(list(t.values())))
            chk.same(f"{tag} / {key} / A", exp["A"], or_fold(list(a.values())))
            out = schemeC_reconstruct(t, a)
            chk.same(f"{tag} / {key} / out", exp["out"], out)
            weights.setdefault(key, []).append(hamming(out))
    length = data["contrast_length"]
    measured = {}
    for key, ws in weights.items():
        alphas = [str(Fraction(hi - lo, length)) for lo, hi in zip(ws, ws[1:])]
        measured[key] = alphas
        chk.same(f"contrast / {key}", ",".join(data["expect_contrasts"][key]), ",".join(alphas))
    distinct = {tuple(v) for v in measured.values()}
    chk.truth("contrast / pair dependence", len(distinct) > 1, "contrasts agree across pairs")
    chk.result.notes.append(f"pair-dependent contrasts {measured}")


def _replay_family(data: dict, chk: _Checker) -> None:
    fam = build_grey_family(load_base(data["base"], data["k"]), data["g"])
    for name, rows in data["matrices"].items():
        chk.same(f"matrices / {name}", ";".join(rows), to_str(fam.levels[int(name[1:])]))
    for q, want in enumerate(data["stack_weights"]):
        got = sorted(set(subset_weights(fam.levels[q], data["k"]).values()))
        chk.same(f"level {q} / k-stack weight", str(want), ",".join(map(str, got)))
    for q, want in enumerate(data["single_weights"]):
        got = sorted(set(subset_weights(fam.levels[q], 1).values()))
        chk.same(f"level {q} / row weight", str(want), ",".join(map(str, got)))
    report = check_grey_family(fam)
    chk.same("contrasts", ",".join(data["contrasts"]), ",".join(str(a) for a in report.alphas))


_REPLAYS = {
    "scheme": _replay_scheme,
    "direct-runs": _replay_direct_runs,
    "direct-cyclic": _replay_direct_cyclic,
    "direct-aux": _replay_direct_aux,
    "family": _replay_family,
}


def replay_fixture(fid: str) -> FixtureResult:
    data = load_fixture(fid)
    result = FixtureResult(fid)
    chk = _Checker(result, data.get("errata", {}))
    try:
        _REPLAYS[data["kind"]](data, chk)
    except Exception as exc:  # a crash is a failed fixture, not a crashed suite
        result.failures.append(f"replay raised {type(exc).__name__}: {exc}")
    return result


def run_golden_suite(only: Sequence[str] | None = None) -> list[FixtureResult]:
    ids = fixture_ids()
    if only:
        unknown = [f for f in only if f not in ids]
        if unknown:
            raise KeyError(f"unknown fixtures {unknown}; known: {', '.join(ids)}")
        ids = [f for f in ids if f in only]
    return [replay_fixture(f) for f in ids]


# -- exhaustive oracles ------------------------------------------------------------


@dataclass
class OracleResult:
    name: str
    status: str  # "pass", "fail" or "skipped"
    detail: str
    draws: int = 0

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def draw_count(codec: Codec) -> int:
    if codec.method == "wbcp":
        return wbcp_count(codec.layout)
    if codec.method == "locked":
        return math.factorial(codec.layout[0])
    return math.factorial(sum(codec.layout))


def iter_draws(codec: Codec) -> Iterator[np.ndarray]:
    if codec.method == "wbcp":
        return iter_wbcp_perms(codec.layout)
    if codec.method == "locked":
        return iter_locked_perms(codec.layout)
    return iter_full_perms(sum(codec.layout))


def _observation(px, coalition: Sequence[int]) -> tuple:
    obs = []
    for p in coalition:
        runs = tuple(b.tobytes() for b in px.blocks[p])
        aux = px.aux[p].tobytes() if px.aux is not None else b""
        obs.append((runs, aux))
    return tuple(obs)


def security_oracle(codec: Codec, t: int = 1, cap: int = DEFAULT_CAP) -> OracleResult:
    """Compare, for every coalition of ``t`` participants, the multiset of
    everything they hold over all permutation draws, across all grey levels."""
    spec = codec.spec
    name = f"security {codec.kind} ({spec.k},{spec.n}) g={spec.g} t={t} {codec.method}"
    if not 1 <= t < spec.k:
        return OracleResult(name, "skipped", f"coalition size must lie in [1, {spec.k - 1}]")
    draws = draw_count(codec)
    if draws > cap:
        return OracleResult(name, "skipped", f"{draws} draws per level exceeds cap {cap}", draws)
    coalitions = list(itertools.combinations(range(1, spec.n + 1), t))
    seen: dict[tuple, list[Counter]] = {c: [] for c in coalitions}
    for q in range(spec.g):
        counters = {c: Counter() for c in coalitions}
        for perm in iter_draws(codec):
            px = codec.split_permuted(q, perm)
            for c in coalitions:
                counters[c][_observation(px, c)] += 1
        for c in coalitions:
            seen[c].append(counters[c])
    leaks = [(c, q) for c, per in seen.items() for q in range(1, spec.g) if per[q] != per[0]]
    if leaks:
        c, q = leaks[0]
        return OracleResult(name, "fail", f"coalition {c} distinguishes level 0 from level {q} "
                            f"({len(leaks)} distinguishing coalition/level pairs)", draws)
    return OracleResult(name, "pass", f"{len(coalitions)} coalitions, identical multisets "
                        f"over {draws} draws per level", draws)


def reconstruction_oracle(codec: Codec, cap: int = DEFAULT_CAP) -> OracleResult:
    """Every draw and every k-subset must reconstruct to the level's unique weight."""
    spec = codec.spec
    name = f"reconstruction {codec.kind} ({spec.k},{spec.n}) g={spec.g} {codec.method}"
    draws = draw_count(codec)
    if draws > cap:
        return OracleResult(name, "skipped", f"{draws} draws per level exceeds cap {cap}", draws)
    subsets = list(itertools.combinations(range(1, spec.n + 1), spec.k))
    weights = {}
    for q in range(spec.g):
        weights[q] = {hamming(codec.reconstruct(codec.split_permuted(q, perm), s))
                      for perm in iter_draws(codec) for s in subsets}
    spread = {q: sorted(w) for q, w in weights.items() if len(w) > 1}
    flat = [w for ws in weights.values() for w in ws]
    if spread or len(set(flat)) != len(flat):
        return OracleResult(name, "fail", f"weights per level {dict((q, sorted(w)) for q, w in weights.items())}",
                            draws)
    return OracleResult(name, "pass", f"deterministic weights {[min(weights[q]) for q in range(spec.g)]}", draws)


@dataclass
class Method1Table:
    """Exact outcome fractions per level under unrestricted permutation."""

    fractions: dict[int, dict[str, Fraction]]
    draws: int

    def as_dict(self) -> dict:
        return {q: {k: str(v) for k, v in f.items()} for q, f in self.fractions.items()}


def method1_failure_oracle() -> Method1Table:
    """Scheme A at (2,3), g=3, perfect-black base, every one of the 6!
    column orders of each level and every participant pair."""
    spec = SchemeSpec("A", 2, 3, 3, default_base("A", 2, 3))
    codec = make_codec(spec, "full")
    pairs = list(itertools.combinations(range(1, 4), 2))
    table = {}
    draws = 0
    for q in range(3):
        tally: Counter = Counter()
        for perm in iter_full_perms(sum(codec.layout)):
            px = codec.split_permuted(q, perm)
            for pair in pairs:
                out = to_str(codec.reconstruct(px, pair))
                tally["01/10" if out in ("01", "10") else out] += 1
        total = sum(tally.values())
        draws = total // len(pairs)
        table[q] = {k: Fraction(tally.get(k, 0), total) for k in ("00", "01/10", "11")}
    return Method1Table(table, draws)


def leakage_oracle() -> OracleResult:
    """Locked (same-permutation-in-every-block) baseline must leak to one participant."""
    spec = SchemeSpec("baseline", 2, 3, 3, default_base("baseline", 2, 3))
    res = security_oracle(make_codec(spec, "locked"), t=1)
    ok = res.status == "fail"
    return OracleResult("leakage baseline locked t=1", "pass" if ok else "fail",
                        ("leak demonstrated: " if ok else "no leak found: ") + res.detail, res.draws)


def direct_extension_failures() -> list[FixtureResult]:
    return run_golden_suite([f for f in fixture_ids() if f.startswith("direct-")])


# -- comparison report ----------------------------------------------------------------


@dataclass
class SchemeRow:
    scheme: str
    available: bool
    reason: str = ""
    m: int = 0
    ors: int = 0
    nots: int = 0
    shares_held: int = 0
    runs: int = 0
    contrast: list[str] = field(default_factory=list)
    pixel_expansion: int = 0
    aspect_ratio: int = 0
    storage: int = 0
    published: dict = field(default_factory=dict)


@dataclass
class SchemeReport:
    k: int
    n: int
    g: int
    rows: list[SchemeRow]
    footnotes: list[str]

    def as_dict(self) -> dict:
        return asdict(self)


def _published_columns(kind: str, k: int, n: int, g: int, m: int) -> dict:
    """Closed forms as published for each scheme."""
    frac = lambda a, b: str(Fraction(a, b))  # noqa: E731
    if kind == "baseline":
        return dict(ors=k - 1, nots=0, shares_held=1, runs=1, contrast=frac(1, m * (g - 1)),
                    pixel_expansion=(g - 1) * m, aspect_ratio=(g - 1) * m, storage=(g - 1) * m)
    if kind == "A":
        return dict(ors=m * (g - 1) * (k - 1) + m - 1, nots=m + 1, shares_held=m, runs=m,
                    contrast=frac(1, g - 1), pixel_expansion=g - 1, aspect_ratio=g - 1,
                    storage=(g - 1) * m)
    if kind == "B":
        return dict(ors=m * k + 2 * m - 3, nots=4 * (m - 1) + 1, shares_held=m * m, runs=m,
                    contrast=frac(1, g - 1), pixel_expansion=(g - 1) * m, aspect_ratio=(g - 1) * m,
                    storage=(g - 1) * m * m)
    return dict(ors=4 * k, nots=4 * k - 1, shares_held=2, runs=2, contrast=frac(1, g - 1),
                pixel_expansion=closed_form_expansion("C", k, n, g, m), aspect_ratio=g - 1,
                storage=(g - 1) * 2 ** k * math.comb(n, k))


def measure_row(kind: str, k: int, n: int, g: int, seed: int = 0) -> SchemeRow:
    try:
        spec = SchemeSpec(kind, k, n, g, default_base(kind, k, n), seed)
        codec = make_codec(spec)
    except PreconditionError as exc:
        return SchemeRow(kind, False, str(exc))
    rng = np.random.default_rng(seed)
    subsets = list(itertools.combinations(range(1, n + 1), k))
    weights: dict[tuple, list[int]] = {s: [] for s in subsets}
    ors = nots = 0
    for q in range(g):
        px = codec.distribute(q, rng)
        for s in subsets:
            with count_ops() as ops:
                out = codec.reconstruct(px, s)
            ors, nots = max(ors, ops.ors), max(nots, ops.nots)
            weights[s].append(hamming(out))
    alphas = sorted({Fraction(w[q + 1] - w[q], codec.contrast_length)
                     for w in weights.values() for q in range(g - 1)})
    out_len = len(out)
    return SchemeRow(
        kind, True, m=codec.m, ors=ors, nots=nots, shares_held=codec.shares_held,
        runs=codec.runs + (1 if kind == "C" else 0), contrast=[str(a) for a in alphas],
        pixel_expansion=codec.block_length, aspect_ratio=out_len,
        storage=codec.shares_held * codec.block_length,
        published=_published_columns(kind, k, n, g, codec.m),
    )


def comparison_report(k: int, n: int, g: int, seed: int = 0) -> SchemeReport:
    rows = [measure_row(kind, k, n, g, seed) for kind in KINDS]
    notes = [
        "Operation counts are whole-transparency passes for one reconstruction; "
        "published OR counts for scheme A count each of the g-1 subpixels separately.",
    ]
    for row in rows:
        if not row.available:
            notes.append(f"scheme {row.scheme}: not instantiable here ({row.reason}).")
            continue
        for key in ("shares_held", "pixel_expansion", "aspect_ratio", "storage", "runs"):
            got, want = getattr(row, key), row.published[key]
            if got != want:
                notes.append(f"scheme {row.scheme}: measured {key.replace('_', ' ')} {got}, "
                             f"published {want}.")
        if row.ors > row.published["ors"] or row.nots > row.published["nots"]:
            notes.append(f"scheme {row.scheme}: measured {row.ors} OR / {row.nots} NOT exceeds "
                         f"published {row.published['ors']} / {row.published['nots']}.")
        if [row.published["contrast"]] != row.contrast:
            notes.append(f"scheme {row.scheme}: measured contrast {row.contrast}, "
                         f"published {row.published['contrast']}.")
    return SchemeReport(k, n, g, rows, notes)


def format_report(rep: SchemeReport) -> str:
    fields = [("ORs", "ors"), ("NOTs", "nots"), ("shares held", "shares_held"), ("runs", "runs"),
              ("contrast", "contrast"), ("pixel expansion", "pixel_expansion"),
              ("aspect ratio", "aspect_ratio"), ("storage", "storage")]
    rows = [r for r in rep.rows if r.available]
    head = ["", *[f"{r.scheme} measured" for r in rows], *[f"{r.scheme} published" for r in rows]]
    table = [head]
    for label, key in fields:
        measured = [getattr(r, key) for r in rows]
        measured = [",".join(v) if isinstance(v, list) else str(v) for v in measured]
        table.append([label, *measured, *[str(r.published[key]) for r in rows]])
    widths = [max(len(row[i]) for row in table) for i in range(len(head))]
    lines = [f"(k, n, g) = ({rep.k}, {rep.n}, {rep.g})"]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in table]
    lines += ["", "Notes:"] + [f"  [{i + 1}] {n}" for i, n in enumerate(rep.footnotes)]
    return "\n".join(lines) + "\n"
