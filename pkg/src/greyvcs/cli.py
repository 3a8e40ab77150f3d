"""Command-line front end: share, reconstruct, verify, report.

Exit status is 0 on success, 1 on I/O or verification failure and 2 on a
usage or parameter error.  Parameters are validated before anything is written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import netpbm
from .basis import load_pair
from .boolmat import ParameterError
from .pipeline import (
    MissingShareError,
    decode_image,
    encode_image,
    image_contrast,
    load_manifest,
    load_shares,
    quantize,
    save_shares,
)
from .schemes import KINDS, DecodeError, SchemeSpec, default_base, make_codec, normalize_kind
from .verify import (
    DEFAULT_CAP,
    ORACLE_IDS,
    comparison_report,
    direct_extension_failures,
    fixture_ids,
    format_report,
    leakage_oracle,
    method1_failure_oracle,
    reconstruction_oracle,
    run_golden_suite,
    security_oracle,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _participants(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"--participants expects comma-separated integers, got {text!r}") from None


def _scheme_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", type=normalize_kind, choices=KINDS, default="A",
                   help="codec: baseline, A, B or C (schemeA etc. also accepted; default: A)")
    p.add_argument("-k", type=int, default=2, help="threshold (default: 2)")
    p.add_argument("-n", type=int, default=3, help="participants (default: 3)")
    p.add_argument("-g", type=int, default=3, help="grey levels (default: 3)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greyvcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sh = sub.add_parser("share", aliases=["encode"], help="split a PGM secret into PBM shares")
    sh.add_argument("input", type=Path, help="8-bit PGM secret (0 = white)")
    sh.add_argument("outdir", type=Path, help="directory for shares and manifest.json")
    _scheme_args(sh)
    sh.add_argument("--seed", type=int, default=0)
    sh.add_argument("--base", type=Path, help="basis pair file (B0, blank line, B1)")
    sh.add_argument("--method", choices=("wbcp", "locked", "full"), default="wbcp",
                    help="column permutation regime (default: wbcp)")
    sh.add_argument("--workers", type=int, default=1)
    sh.add_argument("--ascii-pbm", action="store_true", help="write P1 instead of P4")

    rc = sub.add_parser("reconstruct", aliases=["decode"], help="rebuild the secret from shares")
    rc.add_argument("sharedir", type=Path)
    rc.add_argument("output", type=Path, help="PGM file for the recovered levels")
    rc.add_argument("--participants", help="e.g. 1,3 (default: every participant present)")
    rc.add_argument("--stack-only", action="store_true", help="plain stacking, no reversing")
    rc.add_argument("--ascii-pbm", action="store_true", help="write P1/P2 instead of P4/P5")

    vf = sub.add_parser("verify", help="golden fixtures and exhaustive oracles")
    vf.add_argument("--only", action="append", metavar="ID",
                    help=f"fixture id or one of {', '.join(ORACLE_IDS)}; repeatable")
    vf.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max permutation draws per level")
    vf.add_argument("--list", action="store_true", help="list ids and exit")

    rp = sub.add_parser("report", help="measured vs published scheme properties")
    rp.add_argument("-k", type=int, default=2)
    rp.add_argument("-n", type=int, default=3)
    rp.add_argument("-g", type=int, default=3)
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--format", choices=("text", "json"), default="text")
    rp.add_argument("--out", type=Path, help="also write report.{txt,json,csv} and PNG figures here")
    return parser


# -- share ---------------------------------------------------------------------


def cmd_share(args) -> int:
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.base is not None:
        try:
            base = load_pair(args.base, args.k)
        except OSError as exc:
            print(f"error: cannot read base: {exc}", file=sys.stderr)
            return EXIT_FAIL
    else:
        base = default_base(args.scheme, args.k, args.n)
    if args.g > 256:
        raise ParameterError(f"g must lie in [2, 256], got {args.g}")
    spec = SchemeSpec(args.scheme, args.k, args.n, args.g, base, args.seed)
    make_codec(spec, args.method)  # precondition check before any I/O
    try:
        raster = netpbm.read_pgm(args.input)
    except (OSError, netpbm.NetpbmError) as exc:
        print(f"error: cannot read secret: {exc}", file=sys.stderr)
        return EXIT_FAIL
    img = quantize(raster, args.g)
    shares, manifest = encode_image(img, spec, workers=args.workers, method=args.method)
    try:
        save_shares(args.outdir, shares, manifest, ascii=args.ascii_pbm)
    except OSError as exc:
        print(f"error: cannot write shares: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {len(shares)} shares ({manifest.runs} run(s) x {manifest.n} participants"
          f"{', plus aux' if manifest.scheme == 'C' else ''}) and manifest.json to {args.outdir}")
    return EXIT_OK


# -- reconstruct ---------------------------------------------------------------


def cmd_reconstruct(args) -> int:
    chosen = _participants(args.participants)
    try:
        manifest = load_manifest(args.sharedir)
    except MissingShareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if chosen is not None and len(chosen) < manifest.k:
        raise UsageError(f"need at least k={manifest.k} participants, got {chosen}")
    try:
        shares = load_shares(args.sharedir, manifest, chosen)
        result = decode_image(shares, manifest, chosen, stack_only=args.stack_only)
    except (MissingShareError, OSError, netpbm.NetpbmError, DecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    raw = args.output.with_name(args.output.stem + "_raw.pbm")
    try:
        netpbm.write_pgm(args.output, result.image.render(), ascii=args.ascii_pbm)
        netpbm.write_pbm(raw, result.raster, ascii=args.ascii_pbm)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_FAIL

    codec = manifest.codec()
    mode = "stacking only" if args.stack_only else "copy-machine"
    print(f"participants {list(result.participants)}, {mode}; wrote {args.output} and {raw}")
    levels = sorted(int(q) for q in np.unique(result.image.levels))
    if len(levels) > 1:
        length = codec.block_length * codec.runs if args.stack_only else codec.contrast_length
        meas = image_contrast(result, result.image, length)
        pairs = ", ".join(f"({lo},{hi}): {a}" for lo, hi, a in zip(meas.levels, meas.levels[1:], meas.alphas))
        print(f"measured contrast per adjacent level pair {pairs}")
    else:
        print(f"single grey level {levels[0]} present; no contrast to measure")
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def _oracle_lines(oid: str, cap: int) -> list[tuple[bool, str]]:
    lines = []
    if oid == "security":
        for kind in KINDS:
            codec = make_codec(SchemeSpec(kind, 2, 3, 3, default_base(kind, 2, 3)))
            res = security_oracle(codec, 1, cap)
            lines.append((res.status != "fail", f"{res.status:7} {res.name}: {res.detail}"))
        codec = make_codec(SchemeSpec("A", 2, 3, 3, default_base("A", 2, 3)), "full")
        res = reconstruction_oracle(codec, cap)
        ok = res.status == "fail"
        lines.append((ok, f"{'pass' if ok else 'FAIL':7} unrestricted permutation is not deterministic: "
                          f"{res.detail}"))
    elif oid == "method1":
        table = method1_failure_oracle()
        for q, fr in table.fractions.items():
            lines.append((True, f"        level {q}: " + ", ".join(f"P({k})={v}" for k, v in fr.items())))
        bottom = table.fractions[0]
        ok = bottom["00"] == Fraction(3, 5) and bottom["01/10"] == Fraction(2, 5)
        lines.insert(0, (ok, f"{'pass' if ok else 'FAIL':7} method1: bottom level gives 00 with "
                             f"P(00)={bottom['00']} and collides with level 1 with "
                             f"P(01/10)={bottom['01/10']} over {table.draws} orders x 3 pairs"))
    elif oid == "leakage":
        res = leakage_oracle()
        lines.append((res.passed, f"{res.status:7} {res.name}: {res.detail}"))
    elif oid == "direct":
        for r in direct_extension_failures():
            lines.append((r.passed, f"{r.status:7} {r.id}: " + "; ".join(r.notes + r.failures)))
    return lines


def cmd_verify(args) -> int:
    ids = fixture_ids()
    if args.list:
        print("\n".join([*ids, *ORACLE_IDS]))
        return EXIT_OK
    wanted = args.only or [*ids, *ORACLE_IDS]
    unknown = [w for w in wanted if w not in ids and w not in ORACLE_IDS]
    if unknown:
        raise UsageError(f"unknown ids {unknown}; try --list")
    ok_all = True
    fixtures = [w for w in wanted if w in ids]
    for r in run_golden_suite(fixtures) if fixtures else []:
        ok_all &= r.passed
        print(f"{'pass' if r.passed else 'FAIL':7} {r.id} ({r.checks} checks"
              f"{f', {len(r.errata)} errata' if r.errata else ''})")
        for f in r.failures:
            print(f"          {f}")
        for e in r.errata:
            print(f"          erratum {e}")
    for oid in (w for w in wanted if w in ORACLE_IDS):
        for ok, line in _oracle_lines(oid, args.cap):
            ok_all &= ok
            print(line)
    print("all checks passed" if ok_all else "verification FAILED")
    return EXIT_OK if ok_all else EXIT_FAIL


# -- report --------------------------------------------------------------------


def _report_csv(rep) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    keys = ["ors", "nots", "shares_held", "runs", "contrast", "pixel_expansion", "aspect_ratio", "storage"]
    w.writerow(["scheme", "column", *keys])
    for r in rep.rows:
        if not r.available:
            continue
        w.writerow([r.scheme, "measured", *[";".join(v) if isinstance(v, list) else v
                                            for v in (getattr(r, k) for k in keys)]])
        w.writerow([r.scheme, "published", *[r.published[k] for k in keys]])
    return buf.getvalue()


def _level_darkness(rep) -> dict[str, list[float]]:
    out = {}
    participants = list(range(1, rep.k + 1))
    for r in rep.rows:
        if not r.available:
            continue
        codec = make_codec(SchemeSpec(r.scheme, rep.k, rep.n, rep.g, default_base(r.scheme, rep.k, rep.n)))
        for stack, label, length in ((False, r.scheme, codec.contrast_length),
                                     (True, f"{r.scheme} stacked", codec.block_length * codec.runs)):
            if stack and r.scheme == "baseline":
                continue
            table = {q: w for w, q in codec.level_table(participants, stack).items()}
            out[label] = [table[q] / length for q in range(rep.g)]
    return out


def cmd_report(args) -> int:
    for name in ("k", "n", "g"):
        if getattr(args, name) < 2:
            raise ParameterError(f"{name} must be at least 2")
    if args.k > args.n:
        raise ParameterError(f"need k <= n, got k={args.k}, n={args.n}")
    rep = comparison_report(args.k, args.n, args.g, args.seed)
    text, js = format_report(rep), json.dumps(rep.as_dict(), indent=2) + "\n"
    print(js if args.format == "json" else text, end="")
    if args.out is not None:
        from .plotting import plot_expansion, plot_level_weights

        try:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "report.txt").write_text(text)
            (args.out / "report.json").write_text(js)
            (args.out / "report.csv").write_text(_report_csv(rep))
            plot_expansion(rep, args.out / "expansion.png")
            plot_level_weights(_level_darkness(rep), rep.g, args.out / "levels.png")
        except OSError as exc:
            print(f"error: cannot write report files: {exc}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "share": cmd_share, "encode": cmd_share,
    "reconstruct": cmd_reconstruct, "decode": cmd_reconstruct,
    "verify": cmd_verify, "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
