"""Command-line entry point.

Machine-readable JSON goes to stdout; anything meant for humans goes to
stderr. Every failure exits 1 with a single JSON error object on stdout so
scripts never have to parse prose.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import artifact_io, bench, toyrt
from .errors import RsrError
from .kernels import OpCounter, rsr_matvec, rsr_matvec_fused
from .matcore import BINARY, TERNARY, load_rsrm
from .preproc import preprocess


def _emit(payload) -> None:
    json.dump(payload, sys.stdout)
    sys.stdout.write("\n")


def _fail(kind: str, message: str) -> int:
    _emit({"error": kind, "message": message})
    return 1


def _parse_ks(text: str) -> list[int]:
    """Accept '2,4,8' and '2..8' (inclusive range)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p.strip()]


def _load_vector(spec: str, dtype: str):
    """Inline JSON array or a path (.npy, .json, or whitespace text)."""
    if spec.lstrip().startswith("["):
        values = json.loads(spec)
    else:
        p = Path(spec)
        if not p.exists():
            raise FileNotFoundError(spec)
        if p.suffix == ".npy":
            values = np.load(p)
        elif p.suffix == ".json":
            values = json.loads(p.read_text())
        else:
            values = [float(t) for t in p.read_text().split()]
    arr = np.asarray(values)
    if dtype == "int8":
        return arr.astype(np.int8)
    if dtype == "float32":
        return arr.astype(np.float32)
    # auto: integral values in int8 range take the exact path
    if (np.issubdtype(arr.dtype, np.integer)
            or (arr.size and np.all(arr == np.round(arr)))):
        if arr.size and -128 <= arr.min() and arr.max() <= 127:
            return arr.astype(np.int8)
    return arr.astype(np.float32)


def cmd_preprocess(args) -> int:
    matrix = load_rsrm(args.infile)
    t0 = time.perf_counter_ns()
    art = preprocess(matrix, args.k, args.tile_width)
    pre_ms = (time.perf_counter_ns() - t0) / 1e6
    artifact_io.save(art, args.out)
    _emit({
        "out": str(args.out),
        "m": art.m, "n": art.n, "k": art.k, "bitwidth": art.bitwidth,
        "tile_width": art.plan.tile_width,
        "artifact_bytes": art.file_bytes(),
        "preprocess_ms": pre_ms,
    })
    return 0


def cmd_multiply(args) -> int:
    art = artifact_io.load(args.artifact)
    v = _load_vector(args.vec, args.dtype)
    counter = OpCounter()
    t0 = time.perf_counter_ns()
    if args.fused:
        y = rsr_matvec_fused(art, v.astype(np.float32), counter)
    else:
        y = rsr_matvec(art, v, counter)
    ns = time.perf_counter_ns() - t0
    payload = {
        "y": [float(x) if y.dtype.kind == "f" else int(x) for x in y],
        "dtype": str(y.dtype), "ns": ns,
        "gather_adds": counter.gather_adds,
        "scatter_adds": counter.scatter_adds,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload["y"]))
    _emit(payload)
    return 0


def cmd_bench(args) -> int:
    spec = args.config
    if spec.lstrip().startswith("{"):
        payload = json.loads(spec)
    else:
        p = Path(spec)
        if not p.exists():
            raise FileNotFoundError(spec)
        payload = json.loads(p.read_text())
    from .server import BadConfig, parse_config
    try:
        cfg = parse_config(payload)
    except BadConfig as e:
        return _fail(e.kind, str(e))
    report = bench.run_bench(cfg)
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(report.to_json() + "\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = bench.BenchConfig(
        m=args.m, n=args.n, bitwidth=args.bitwidth,
        k_list=_parse_ks(args.ks), reps=args.reps, warmup=args.warmup,
        seed=args.seed, threads=args.threads, baselines=(),
    )
    report = bench.run_bench(cfg)
    for row in report.rows:
        _emit(row)
    for err in report.errors:
        _emit(err)
    return 0


def cmd_decode(args) -> int:
    model = toyrt.build_toy_model(args.seed, args.d, args.V, args.depth,
                                  k=args.k)
    prompt = _parse_ks(args.prompt) if args.prompt else []
    if args.backend == "both":
        toks_n, st_n = toyrt.greedy_decode(model, toyrt.NAIVE, prompt, args.steps)
        toks_r, st_r = toyrt.greedy_decode(model, toyrt.RSR, prompt, args.steps)
        _emit({
            "tokens": toks_r,
            "sequences_equal": toks_n == toks_r,
            "steps": args.steps,
            "naive_tok_s": st_n.tokens_per_second,
            "rsr_tok_s": st_r.tokens_per_second,
        })
        return 0 if toks_n == toks_r else 1
    toks, st = toyrt.greedy_decode(model, args.backend, prompt, args.steps)
    _emit({"tokens": toks, "backend": st.backend, "steps": args.steps,
           "tok_s": st.tokens_per_second})
    return 0


def cmd_serve(args) -> int:
    from .server import dump_history, make_server
    static = Path(args.static).resolve() if args.static else None
    srv = make_server(args.port, static)
    print(f"serving on http://127.0.0.1:{args.port}", file=sys.stderr)
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if args.history_out:
            dump_history(srv.state, Path(args.history_out))
        srv.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rsrmv",
        description="Preprocess low-bit matrices and run segment-reduction "
                    "matvec benchmarks.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("preprocess", help="turn a .rsrm matrix into a .rsra artifact")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tile-width", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("multiply", help="multiply an artifact by a vector")
    p.add_argument("--artifact", required=True)
    p.add_argument("--vec", required=True,
                   help="inline JSON array or a .npy/.json/text path")
    p.add_argument("--dtype", choices=("auto", "int8", "float32"), default="auto")
    p.add_argument("--fused", action="store_true",
                   help="quantize+multiply+rescale in one call (ternary only)")
    p.add_argument("--out", default=None, help="also write the result JSON here")
    p.set_defaults(fn=cmd_multiply)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("--config", required=True, help="inline JSON or a path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sweep", help="k sweep at one shape, one JSON line per k")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bitwidth", choices=(BINARY, TERNARY), required=True)
    p.add_argument("--ks", required=True, help="'2,4,8' or '2..8'")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("decode", help="toy-model greedy decode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--V", type=int, default=256)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--steps", type=int, default=32)
    p.add_argument("--prompt", default="", help="comma-separated token ids")
    p.add_argument("--backend", choices=("naive", "rsr", "both"), default="both")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("serve", help="run the HTTP bench API + dashboard")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--static", default=None,
                   help="directory of dashboard assets (default: bundled)")
    p.add_argument("--history-out", default=None,
                   help="dump run history to this JSON file on exit")
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RsrError as e:
        _emit(e.to_json())
        return 1
    except FileNotFoundError as e:
        return _fail("FileNotFound", str(e))
    except (ValueError, json.JSONDecodeError) as e:
        return _fail("InvalidConfig", str(e))


if __name__ == "__main__":
    sys.exit(main())
