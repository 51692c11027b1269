"""sharekit command line.

Exit status: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dispersal, engine, verify
from .container import HEADER_SIZE, read_header
from .errors import ShareError
from .schemes import CORE_SCHEMES, Scheme

log = logging.getLogger("sharekit")

SCHEME_TAGS = [s.tag for s in Scheme]


def _scheme(tag: str) -> Scheme:
    try:
        return Scheme.from_tag(tag)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _size(text: str) -> int:
    units = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30}
    text = text.strip().lower().removesuffix("ib").removesuffix("b")
    mult = units.get(text[-1:], 1)
    if mult != 1:
        text = text[:-1]
    try:
        return int(text) * mult
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}") from None


def _rng(seed: int | None) -> engine.RngPolicy:
    return engine.SystemRng() if seed is None else engine.SeededRng(seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharekit", description="(2,3)/(2,4) threshold secret sharing for files and images"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="split FILE into share files")
    p.add_argument("--scheme", type=_scheme, required=True, metavar="TAG", help=", ".join(SCHEME_TAGS))
    p.add_argument("--seed", type=int, help="TEST ONLY: deterministic (insecure) randomness")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1, help="chunk-parallel worker threads")
    p.add_argument("file", type=Path)

    p = sub.add_parser("combine", help="reconstruct a secret from two share files")
    p.add_argument("share_a", type=Path)
    p.add_argument("share_b", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("inspect", help="print a share file's header")
    p.add_argument("share", type=Path)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("disperse", help="split FILE and store one share per endpoint")
    p.add_argument("--scheme", type=_scheme, required=True, metavar="TAG")
    p.add_argument("--seed", type=int, help="TEST ONLY: deterministic (insecure) randomness")
    p.add_argument(
        "--endpoint", action="append", required=True, dest="endpoints",
        help="directory path or http://host:port; repeat once per share, in index order",
    )
    p.add_argument("--object-id")
    p.add_argument("-m", "--manifest", type=Path, required=True)
    p.add_argument("file", type=Path)

    p = sub.add_parser("retrieve", help="reconstruct a dispersed secret from its manifest")
    p.add_argument("-m", "--manifest", type=Path, required=True)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("serve", help="run the HTTP share store")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--addr", default="127.0.0.1:8257", help="HOST:PORT (default %(default)s)")

    p = sub.add_parser("verify", help="exhaustively check kernels and share census")
    p.add_argument("--scheme", default="all", metavar="TAG|all")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="time split and combine throughput")
    p.add_argument("--scheme", default="all", metavar="TAG|all")
    p.add_argument("--size", type=_size, default=16 << 20, help="bytes, e.g. 16M (min 1M)")
    p.add_argument("--seed", type=int, help="TEST ONLY: deterministic (insecure) randomness")
    p.add_argument("--json", action="store_true")
    return parser


def _schemes_arg(parser: argparse.ArgumentParser, value: str, all_schemes) -> list[Scheme]:
    if value == "all":
        return list(all_schemes)
    try:
        return [Scheme.from_tag(value)]
    except ValueError as exc:
        parser.error(str(exc))


def cmd_split(args) -> int:
    outputs = engine.split_file(args.file, args.scheme, args.out_dir, _rng(args.seed), workers=args.workers)
    for path in outputs:
        print(path)
    return 0


def cmd_combine(args) -> int:
    result = engine.combine_files(args.share_a, args.share_b, args.output)
    print(
        f"recovered {result.original_length} bytes from {result.scheme.tag} "
        f"shares {result.pair[0]} and {result.pair[1]} -> {args.output}"
    )
    return 0


def cmd_inspect(args) -> int:
    with open(args.share, "rb") as f:
        h = read_header(f.read(HEADER_SIZE))
        f.seek(0, 2)
        payload = f.tell() - HEADER_SIZE
    fields = {
        "version": h.version,
        "scheme": h.scheme.tag,
        "share_index": h.share_index,
        "flags": h.flags,
        "original_length": h.original_length,
        "payload_crc32": f"{h.payload_crc32:08x}",
        "payload_bytes": payload,
    }
    if args.json:
        print(json.dumps(fields))
    else:
        for key, value in fields.items():
            print(f"{key:<16} {value}")
    return 0


def cmd_disperse(args) -> int:
    with open(args.file, "rb") as src:
        manifest = dispersal.disperse(
            src, args.scheme, args.endpoints, _rng(args.seed),
            object_id=args.object_id, manifest_path=args.manifest,
        )
    print(f"dispersed {manifest.object_id}: {manifest.original_length} bytes as {manifest.scheme.tag}")
    return 0


def cmd_retrieve(args) -> int:
    manifest = dispersal.Manifest.load(args.manifest)
    tmp = args.output.with_name(args.output.name + ".partial")
    try:
        with open(tmp, "wb") as out:
            report = dispersal.retrieve(manifest, out)
        tmp.replace(args.output)
    finally:
        tmp.unlink(missing_ok=True)
    for index, reason in sorted(report.failures.items()):
        print(f"share {index} skipped: {reason}", file=sys.stderr)
    print(f"recovered {report.original_length} bytes using shares {report.pair[0]} and {report.pair[1]}")
    return 0


def cmd_serve(args) -> int:
    server = dispersal.serve_shares(args.root, args.addr)
    print(f"serving {args.root} at {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_verify(args, parser) -> int:
    schemes = _schemes_arg(parser, args.scheme, CORE_SCHEMES)
    reports = verify.verify_all(schemes)
    if args.json:
        print(json.dumps([r.as_dict() for r in reports], indent=2))
    else:
        for r in reports:
            print(r.format())
        total = sum(r.cases_run for r in reports)
        bad = sum(r.failures for r in reports)
        print(f"total: {total} cases, {bad} failures")
    return 0 if all(r.ok for r in reports) else 1


def cmd_bench(args, parser) -> int:
    schemes = _schemes_arg(parser, args.scheme, Scheme)
    if args.size < verify.MIN_BENCH_SIZE:
        parser.error(f"--size must be at least {verify.MIN_BENCH_SIZE}")
    reports = []
    for s in schemes:
        reports.extend(verify.bench(s, args.size, _rng(args.seed)))
    if args.json:
        print(json.dumps([r.as_dict() for r in reports], indent=2))
    else:
        print(verify.format_bench_table(reports))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "split": cmd_split,
        "combine": cmd_combine,
        "inspect": cmd_inspect,
        "disperse": cmd_disperse,
        "retrieve": cmd_retrieve,
        "serve": cmd_serve,
    }
    try:
        if args.command == "verify":
            return cmd_verify(args, parser)
        if args.command == "bench":
            return cmd_bench(args, parser)
        return handlers[args.command](args)
    except ShareError as exc:
        print(f"sharekit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"sharekit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
