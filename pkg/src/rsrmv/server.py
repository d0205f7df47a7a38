"""HTTP bench server: JSON API plus static hosting for the dashboard.

Request handling is concurrent (ThreadingHTTPServer) but benchmark
execution is serialized through a bounded FIFO queue and a single worker
thread, so no two timed runs ever overlap. Run history lives in memory for
the process lifetime; ids are unique and increase monotonically.
"""

from __future__ import annotations

import json
import mimetypes
import queue
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .bench import BenchConfig, BenchReport, cpu_model, run_bench
from .errors import RsrError
from .kernels import thread_count
from .matcore import BINARY, TERNARY
from .preproc import K_CAP

try:
    VERSION = version("rsrmv")
except PackageNotFoundError:
    VERSION = "0+unknown"

QUEUE_BOUND = 32
MAX_DIM = 16384

QUEUED, RUNNING, DONE, ERROR = "queued", "running", "done", "error"


class BadConfig(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def parse_config(payload) -> BenchConfig:
    """Build a BenchConfig from a JSON body, rejecting anything off-schema."""
    if not isinstance(payload, dict):
        raise BadConfig("InvalidConfig", "config must be a JSON object")
    allowed = {"m", "n", "bitwidth", "k_list", "reps", "warmup", "seed",
               "threads", "baselines", "density", "tile_width"}
    unknown = set(payload) - allowed
    if unknown:
        raise BadConfig("InvalidConfig", f"unknown fields {sorted(unknown)}")
    for req in ("m", "n", "bitwidth"):
        if req not in payload:
            raise BadConfig("InvalidConfig", f"missing field {req!r}")
    m, n = payload["m"], payload["n"]
    if not (isinstance(m, int) and isinstance(n, int)):
        raise BadConfig("InvalidConfig", "m and n must be integers")
    if not (1 <= m <= MAX_DIM and 1 <= n <= MAX_DIM):
        raise BadConfig("InvalidConfig", f"m and n must lie in [1, {MAX_DIM}]")
    bw = payload["bitwidth"]
    if bw not in (BINARY, TERNARY):
        raise BadConfig("InvalidConfig", f"bitwidth must be {BINARY!r} or {TERNARY!r}")
    k_list = payload.get("k_list", [2, 4, 8])
    if (not isinstance(k_list, list) or not k_list
            or not all(isinstance(k, int) for k in k_list)):
        raise BadConfig("InvalidConfig", "k_list must be a nonempty integer list")
    for k in k_list:
        if k < 1:
            raise BadConfig("InvalidConfig", f"k must be positive, got {k}")
        if k > K_CAP[bw]:
            raise BadConfig("KTooLarge",
                            f"k={k} exceeds the {bw} cap of {K_CAP[bw]}")
    try:
        cfg = BenchConfig(
            m=m, n=n, bitwidth=bw, k_list=list(k_list),
            reps=int(payload.get("reps", 30)),
            warmup=int(payload.get("warmup", 3)),
            seed=int(payload.get("seed", 0)),
            threads=int(payload.get("threads", 1)),
            baselines=tuple(payload.get("baselines", ["NaiveF32", "NaiveI8"])),
            density=float(payload.get("density", 0.5)),
            tile_width=payload.get("tile_width"),
        )
    except (TypeError, ValueError) as e:
        raise BadConfig("InvalidConfig", str(e)) from e
    if cfg.reps > 10000:
        raise BadConfig("InvalidConfig", "reps capped at 10000")
    return cfg


@dataclass
class Run:
    id: int
    config: BenchConfig
    config_dict: dict
    status: str = QUEUED
    report: BenchReport | None = None
    error: dict | None = None
    timestamp: float = field(default_factory=time.time)

    def summary(self) -> dict:
        return {"id": self.id, "status": self.status,
                "timestamp": self.timestamp, "config": self.config_dict}

    def full(self) -> dict:
        d = self.summary()
        if self.report is not None:
            d["report"] = json.loads(self.report.to_json())
        if self.error is not None:
            d["error"] = self.error
        return d


class ServeState:
    """Run registry, FIFO job queue, and the best-k cache."""

    def __init__(self):
        self.lock = threading.Lock()
        self.runs: dict[int, Run] = {}
        self.jobs: queue.Queue[int] = queue.Queue(maxsize=QUEUE_BOUND)
        self._next_id = 1
        self.bestk: dict[tuple[int, int, str], dict] = {}
        self._worker = threading.Thread(target=self._drain, daemon=True,
                                        name="bench-worker")
        self._worker.start()

    def submit(self, cfg: BenchConfig, cfg_dict: dict) -> int:
        with self.lock:
            run = Run(self._next_id, cfg, cfg_dict)
            self.runs[run.id] = run
            self._next_id += 1
        try:
            self.jobs.put_nowait(run.id)
        except queue.Full:
            with self.lock:
                del self.runs[run.id]
            raise
        return run.id

    def _drain(self):
        while True:
            run_id = self.jobs.get()
            with self.lock:
                run = self.runs.get(run_id)
                if run is None:
                    continue
                run.status = RUNNING
            try:
                report = run_bench(run.config)
            except RsrError as e:
                with self.lock:
                    run.status = ERROR
                    run.error = e.to_json()
                continue
            except Exception as e:  # keep the worker alive
                with self.lock:
                    run.status = ERROR
                    run.error = {"error": type(e).__name__, "message": str(e)}
                continue
            with self.lock:
                run.status = DONE
                run.report = report
                if report.best_k is not None:
                    key = (run.config.m, run.config.n, run.config.bitwidth)
                    rsr = [r for r in report.rows
                           if r["kind"] == "rsr" and r["k"] == report.best_k]
                    entry = {"m": key[0], "n": key[1], "bitwidth": key[2],
                             "best_k": report.best_k,
                             "ns_median": rsr[0]["ns_median"] if rsr else None,
                             "run_id": run.id}
                    self.bestk[key] = entry

    def snapshot(self) -> list[dict]:
        with self.lock:
            return [self.runs[i].summary() for i in sorted(self.runs)]

    def get(self, run_id: int) -> dict | None:
        with self.lock:
            run = self.runs.get(run_id)
            return run.full() if run else None

    def bestk_table(self) -> list[dict]:
        with self.lock:
            return list(self.bestk.values())

    def bestk_lookup(self, m: int, n: int, bw: str) -> dict | None:
        with self.lock:
            return self.bestk.get((m, n, bw))


def default_static_dir() -> Path | None:
    root = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return root if root.is_dir() else None


class ApiHandler(BaseHTTPRequestHandler):
    state: ServeState
    static_dir: Path | None = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # requests are noise for a local tool
        pass

    def _json(self, code: int, payload) -> None:
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, kind: str, message: str) -> None:
        self._json(code, {"error": kind, "message": message})

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/bench":
            self._error(404, "NotFound", f"no POST route {url.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"null")
        except (ValueError, json.JSONDecodeError):
            self._error(400, "InvalidConfig", "body is not valid JSON")
            return
        try:
            cfg = parse_config(payload)
        except BadConfig as e:
            self._error(400, e.kind, str(e))
            return
        try:
            run_id = self.state.submit(cfg, payload)
        except queue.Full:
            self._error(409, "QueueFull",
                        f"job queue is at its bound of {QUEUE_BOUND}")
            return
        self._json(202, {"id": run_id})

    def do_GET(self):
        url = urlparse(self.path)
        path = url.path
        if path == "/api/runs":
            self._json(200, self.state.snapshot())
        elif path.startswith("/api/runs/"):
            tail = path[len("/api/runs/"):]
            if not tail.isdigit():
                self._error(404, "NotFound", f"bad run id {tail!r}")
                return
            run = self.state.get(int(tail))
            if run is None:
                self._error(404, "NotFound", f"no run {tail}")
            else:
                self._json(200, run)
        elif path == "/api/sysinfo":
            self._json(200, {"cpu": cpu_model(), "threads": thread_count(),
                             "version": VERSION})
        elif path == "/api/bestk":
            q = parse_qs(url.query)
            if not q:
                self._json(200, self.state.bestk_table())
                return
            try:
                m = int(q["m"][0])
                n = int(q["n"][0])
                bw = q["bitwidth"][0]
            except (KeyError, ValueError):
                self._error(400, "InvalidConfig",
                            "bestk needs integer m, n and a bitwidth")
                return
            entry = self.state.bestk_lookup(m, n, bw)
            if entry is None:
                self._error(404, "NotFound",
                            f"no completed run for {m}x{n} {bw}")
            else:
                self._json(200, entry)
        elif path.startswith("/api/"):
            self._error(404, "NotFound", f"no GET route {path}")
        else:
            self._static(path)

    def _static(self, path: str) -> None:
        if self.static_dir is None:
            self._error(404, "NotFound", "no static assets configured")
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())):
            self._error(404, "NotFound", "path escapes static root")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._error(404, "NotFound", f"no asset {rel}")
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(port: int, static_dir: Path | None = None) -> ThreadingHTTPServer:
    """Bind the API on localhost:port; caller runs serve_forever()."""
    state = ServeState()
    handler = type("BoundHandler", (ApiHandler,),
                   {"state": state,
                    "static_dir": static_dir or default_static_dir()})
    srv = ThreadingHTTPServer(("127.0.0.1", port), handler)
    srv.state = state  # handy for tests and history dumps
    return srv


def dump_history(state: ServeState, path: Path) -> None:
    with state.lock:
        runs = [r.full() for r in state.runs.values()]
    path.write_text(json.dumps(runs, indent=2))
