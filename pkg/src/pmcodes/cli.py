"""Command line interface: ``pmcodes encode|repair|reconstruct|detect|audit|simulate``.

Exit codes: 0 success, 1 invalid parameters, 2 usage error, 3 corruption
beyond the protection level, 4 I/O or share-format error, 5 corruption
detected (``detect``) or an audit finding.  Errors are also written to
stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import audit
from .cluster import simulate
from .code import Share
from .config import code_from_config
from .errors import (
    BudgetExceeded,
    DecodeFailure,
    InvalidParams,
    NotEnoughHelpers,
    NotEnoughShares,
    PMCodeError,
    ShareFormatError,
    ShortMessage,
)
from .mds import CLEAN
from .sharefile import (
    ShareHeader,
    bytes_to_symbols,
    read_share,
    share_name,
    symbols_to_bytes,
    write_share,
)

EXIT_OK = 0
EXIT_PARAMS = 1
EXIT_USAGE = 2
EXIT_DECODE = 3
EXIT_IO = 4
EXIT_FLAGGED = 5


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmcodes", description="Product-matrix regenerating codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a file into n share files")
    enc.add_argument("--regime", choices=("mbr", "msr"), required=True)
    enc.add_argument("-n", type=int, required=True)
    enc.add_argument("-k", type=int, required=True)
    enc.add_argument("-d", type=int, required=True)
    enc.add_argument("--field", type=int, required=True, metavar="Q", help="prime modulus")
    enc.add_argument("--beta", type=int, default=1)
    enc.add_argument("--ell", type=int, default=0, help="eavesdropped nodes tolerated")
    enc.add_argument("--m", type=int, default=0, help="of which repair-tapped")
    enc.add_argument("--seed", type=int, default=None, help="seed for the random symbols (default: OS entropy)")
    enc.add_argument("--points", type=_int_list, default=None, help="explicit evaluation points")
    enc.add_argument("--systematic", action="store_true", help="MSR: first k nodes store the data uncoded")
    enc.add_argument("--symbols", action="store_true",
                     help="IN holds whitespace/comma separated field elements instead of bytes")
    enc.add_argument("input", metavar="IN")
    enc.add_argument("outdir", metavar="OUTDIR")

    rep = sub.add_parser("repair", help="rebuild a failed node's share file")
    rep.add_argument("--failed", type=int, required=True)
    rep.add_argument("--helpers", type=_int_list, required=True)
    rep.add_argument("-p", type=int, default=0, help="corrupt helpers to tolerate")
    rep.add_argument("--from", dest="source", default=None, help="directory with helper shares (default OUTDIR)")
    rep.add_argument("outdir", metavar="OUTDIR")

    rec = sub.add_parser("reconstruct", help="recover the original file")
    rec.add_argument("-p", type=int, default=0)
    rec.add_argument("shares", nargs="+", metavar="SHARE")
    rec.add_argument("-o", "--output", required=True)

    det = sub.add_parser("detect", help="check shares (or helper symbols) for corruption")
    det.add_argument("-p", type=int, default=1)
    det.add_argument("--failed", type=int, default=None,
                     help="check the helper symbols a repair of this node would receive")
    det.add_argument("shares", nargs="+", metavar="SHARE")

    aud = sub.add_parser("audit", help="run a security or robustness audit")
    aud.add_argument("kind", choices=("leakage", "rank", "helper-independence", "fuzz"))
    aud.add_argument("--config", required=True, help="JSON file")

    sim = sub.add_parser("simulate", help="run a cluster simulation script")
    sim.add_argument("--config", required=True, help="JSON file")
    sim.add_argument("-o", "--output", default=None, help="write the report here instead of stdout")
    return parser


# --------------------------------------------------------------------------
# helpers


def _read_input(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, "IOError", f"cannot read {path}: {exc.strerror}")


def _write(path: Path, data: bytes):
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise CliError(EXIT_IO, "IOError", f"cannot write {path}: {exc.strerror}")


def _load_shares(paths) -> tuple[ShareHeader, dict]:
    header, shares = None, {}
    for path in paths:
        try:
            h, data = read_share(path)
        except OSError as exc:
            raise CliError(EXIT_IO, "IOError", f"cannot read {path}: {exc.strerror}")
        if header is None:
            header = h
        elif not header.same_code(h):
            raise CliError(EXIT_IO, "ShareFormatError", f"{path} belongs to a different encoding")
        if h.node in shares:
            raise CliError(EXIT_USAGE, "UsageError", f"node {h.node} given twice")
        shares[h.node] = Share(h.node, data)
    return header, shares


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(EXIT_IO, "IOError", f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARAMS, "InvalidConfig", f"{path}: {exc}")


def _emit(obj):
    print(json.dumps(obj, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return sorted(o) if isinstance(o, (set, frozenset)) else list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


# --------------------------------------------------------------------------
# subcommands


def cmd_encode(args) -> int:
    cfg = {"regime": args.regime, "n": args.n, "k": args.k, "d": args.d, "field": args.field,
           "beta": args.beta, "ell": args.ell, "m": args.m}
    if args.points:
        cfg["points"] = args.points
    if args.systematic:
        cfg["systematic"] = True
    code = code_from_config(cfg)
    per_stripe = code.params.B_star
    raw = _read_input(args.input)
    if args.symbols:
        try:
            symbols = np.array([int(x) for x in raw.decode().replace(",", " ").split()], dtype=np.int64)
        except (UnicodeDecodeError, ValueError):
            raise CliError(EXIT_PARAMS, "InvalidInput", "symbols mode expects integers")
        if np.any(symbols < 0) or np.any(symbols >= args.field):
            raise CliError(EXIT_PARAMS, "InvalidInput", "symbol outside the field")
        length = symbols.size
        stripes = max(1, -(-length // per_stripe))
        message = np.zeros(stripes * per_stripe, dtype=np.int64)
        message[:length] = symbols
    else:
        message = bytes_to_symbols(raw, args.field, per_stripe)
        length = len(raw)
        stripes = message.size // per_stripe
    shares = code.encode(message, rng=args.seed)
    out = Path(args.outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, "IOError", f"cannot create {out}: {exc.strerror}")
    base = ShareHeader(args.regime, args.n, args.k, args.d, args.beta, args.ell, args.m, args.field, 1,
                       stripes, length, bool(getattr(code, "systematic", False)), args.symbols,
                       tuple(args.points or ()))
    for s in shares:
        try:
            write_share(out / share_name(s.node), base.with_node(s.node), s.data)
        except OSError as exc:
            raise CliError(EXIT_IO, "IOError", f"cannot write share {s.node}: {exc.strerror}")
    _emit({"shares": [str(out / share_name(s.node)) for s in shares], "stripes": stripes, "length": length,
           **code.describe()})
    return EXIT_OK


def cmd_repair(args) -> int:
    src = Path(args.source or args.outdir)
    header, shares = _load_shares([src / share_name(j) for j in args.helpers])
    code = code_from_config(header.code_config())
    answers = {j: code.helper_symbol(shares[j], args.failed) for j in args.helpers}
    share = code.repair(args.failed, answers, args.p)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_share(out / share_name(args.failed), header.with_node(args.failed), share.data)
    _emit({"repaired": args.failed, "helpers": args.helpers, "p": args.p,
           "path": str(out / share_name(args.failed))})
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    header, shares = _load_shares(args.shares)
    code = code_from_config(header.code_config())
    message = code.reconstruct(shares, args.p)
    if header.symbols:
        data = " ".join(str(int(x)) for x in message[: header.length]).encode() + b"\n"
    else:
        data = symbols_to_bytes(message, header.modulus, header.length)
    _write(Path(args.output), data)
    return EXIT_OK


def cmd_detect(args) -> int:
    header, shares = _load_shares(args.shares)
    code = code_from_config(header.code_config())
    if args.failed is not None:
        answers = {j: code.helper_symbol(s, args.failed) for j, s in shares.items() if j != args.failed}
        verdict = code.detect_repair(args.failed, answers, args.p)
    else:
        verdict = code.detect_reconstruct(shares, args.p)
    _emit({"verdict": verdict, "p": args.p, "nodes": sorted(shares)})
    return EXIT_OK if verdict == CLEAN else EXIT_FLAGGED


def _views(code, cfg) -> list:
    if "views" in cfg:
        return [audit.EavesdropperView(v.get("storage", []), v.get("repair", [])) for v in cfg["views"]]
    ell = int(cfg.get("ell", code.params.ell))
    m = int(cfg.get("m", code.params.m))
    return audit.admissible_views(code.n, ell, m)


def _view_label(v) -> dict:
    return {"storage": sorted(v.storage_nodes), "repair": sorted(v.repair_nodes)}


def cmd_audit(args) -> int:
    cfg = _load_json(args.config)
    if "code" not in cfg:
        raise CliError(EXIT_PARAMS, "InvalidConfig", "audit config needs a 'code' object")
    code = code_from_config(cfg["code"])
    depth = int(cfg.get("depth", audit.DEFAULT_DEPTH))
    if args.kind == "leakage":
        budget = int(cfg.get("budget", audit.DEFAULT_BUDGET))
        results = []
        for v in _views(code, cfg):
            rep = audit.leakage_oracle(code, v, budget=budget, depth=depth)
            results.append({"view": _view_label(v), **rep.to_dict()})
        ok = all(r["verdict"] == "secure" for r in results)
        report = {"audit": "leakage", "ok": ok, "results": results}
    elif args.kind == "rank":
        results = []
        for v in _views(code, cfg):
            rec = audit.randomness_recoverability(code, v, depth=depth)
            ent = audit.entropy_rank_check(code, v, depth=depth)
            results.append({"view": _view_label(v), "recoverability": rec.to_dict(), "entropy": ent.to_dict()})
        ok = all(r["entropy"]["passed"] for r in results)
        report = {"audit": "rank", "ok": ok, "results": results}
    elif args.kind == "helper-independence":
        rep = audit.helper_independence(code, seed=int(cfg.get("seed", 0)))
        ok = rep.verdict == "holds"
        report = {"audit": "helper-independence", "ok": ok, **rep.to_dict()}
    else:
        rep = audit.adversary_fuzz(code, int(cfg.get("p_max", 1)), int(cfg.get("trials", 10_000)),
                                   int(cfg.get("seed", 0)), int(cfg.get("budget", 10**6)))
        ok = rep.total_failures == 0
        report = {"audit": "fuzz", "ok": ok, **rep.to_dict()}
    _emit(report)
    return EXIT_OK if ok else EXIT_FLAGGED


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    report = simulate(doc)
    text = json.dumps(report, indent=2, default=_json_default)
    if args.output:
        _write(Path(args.output), text.encode())
    else:
        print(text)
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "repair": cmd_repair,
    "reconstruct": cmd_reconstruct,
    "detect": cmd_detect,
    "audit": cmd_audit,
    "simulate": cmd_simulate,
}


def _classify(exc: Exception) -> int:
    if isinstance(exc, DecodeFailure):
        return EXIT_DECODE
    if isinstance(exc, (ShareFormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, (InvalidParams, ShortMessage, NotEnoughHelpers, NotEnoughShares, BudgetExceeded,
                        PMCodeError, ValueError)):
        return EXIT_PARAMS
    return EXIT_IO


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        code, kind = exc.code, exc.kind
        message = str(exc)
    except (PMCodeError, ValueError, OSError) as exc:
        code, kind = _classify(exc), type(exc).__name__
        message = str(exc)
    json.dump({"error": kind, "message": message, "exit": code}, sys.stderr)
    sys.stderr.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
