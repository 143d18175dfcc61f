"""End-to-end grid sweeps: scheduling, checkpointing, resume, and export.

A run walks the canonical range partition of [0, x_max) in ascending order:
boundaries are every checkpoint and every multiple of the sieve segment size.
Each range is sieved once and handed to every grid pair; per-pair partials are
committed in fixed pair order, so outputs are bitwise independent of the
thread count.  State is persisted at every range boundary (write-temp-then-
rename), which makes a run interruptible and exactly resumable.
"""

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import PairWorker
from .catalog import MapSeed, classify, default_grid
from .primes import SEGMENT_SIZE, iter_prime_ranges
from .stats import (CheckpointStats, Histogram, MomentAccumulator, checkpoint,
                    deviation_report, g_value, hist_bin_count, inv_sqrt_sum)

FORMAT_VERSION = 1
DEFAULT_X_MAX = 1 << 25
CSV_HEADER = ["c", "alpha", "x", "prime_count", "M1", "M2", "M3", "M4",
              "q_count", "q_scaled", "g_of_x"]


class IneligibleSeedError(ValueError):
    """A grid pair triggers an exclusion condition and --force was not given."""

    def __init__(self, flagged):
        self.flagged = flagged  # list of (MapSeed, [triggered flag names])
        lines = ", ".join(f"(c={s.c}, alpha={s.alpha}): {'+'.join(names)}"
                          for s, names in flagged)
        super().__init__(f"ineligible seeds (use force_ineligible to override): {lines}")


class StoreIntegrityError(RuntimeError):
    """Persisted run state does not match its manifest."""


def default_checkpoints(x_max: int) -> tuple:
    """Powers of two from 2**10 (or x_max if smaller) up to x_max."""
    if x_max <= 1 << 10:
        return (x_max,)
    return tuple(1 << k for k in range(10, x_max.bit_length()))


@dataclass(frozen=True)
class RunConfig:
    out_dir: str
    grid: tuple = field(default_factory=lambda: tuple(default_grid()))
    x_max: int = DEFAULT_X_MAX
    checkpoints: tuple = ()
    threads: int = 1
    histogram: tuple = None  # (w, t_max) or None
    force_ineligible: bool = False
    raw_dump: bool = False

    def normalized(self) -> "RunConfig":
        """Validate and fill derived defaults; raises on a bad config."""
        if self.x_max < 4 or self.x_max & (self.x_max - 1):
            raise ValueError(f"x_max must be a power of two >= 4, got {self.x_max}")
        if self.x_max > 1 << 32:
            raise ValueError("x_max must be <= 2**32")
        cps = tuple(self.checkpoints) or default_checkpoints(self.x_max)
        if list(cps) != sorted(set(cps)):
            raise ValueError("checkpoints must be strictly ascending")
        if cps[-1] > self.x_max:
            raise ValueError("checkpoints must not exceed x_max")
        if cps[-1] != self.x_max:
            cps = cps + (self.x_max,)
        if min(cps) < 4:
            raise ValueError("checkpoints must be >= 4")
        grid = tuple(self.grid)
        if not grid:
            raise ValueError("grid must contain at least one seed")
        if len(set(grid)) != len(grid):
            raise ValueError("grid contains duplicate seeds")
        if self.histogram is not None:
            w, t_max = self.histogram
            if not (w > 0 and t_max > 0):
                raise ValueError("histogram requires positive (w, t_max)")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not self.force_ineligible:
            flagged = [(s, classify(s).triggered()) for s in grid]
            flagged = [(s, names) for s, names in flagged if names]
            if flagged:
                raise IneligibleSeedError(flagged)
        return replace(self, checkpoints=cps, grid=grid)

    def science_dict(self) -> dict:
        """The result-determining fields (threads and out_dir excluded: they
        must not change what a run produces)."""
        return {
            "grid": [[s.c, s.alpha] for s in self.grid],
            "x_max": self.x_max,
            "checkpoints": list(self.checkpoints),
            "histogram": list(self.histogram) if self.histogram else None,
            "raw_dump": self.raw_dump,
            "force_ineligible": self.force_ineligible,
        }


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.science_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def canonical_bounds(cfg: RunConfig) -> list:
    """The fixed range partition every run of this config follows."""
    bounds = {0, cfg.x_max} | set(cfg.checkpoints)
    bounds.update(range(SEGMENT_SIZE, cfg.x_max, SEGMENT_SIZE))
    return sorted(bounds)


def _fmt(v: float) -> str:
    return repr(float(v))


def _atomic_write(path: str, data: bytes):
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class _RunState:
    """Everything a sweep accumulates, exactly restorable from disk."""

    def __init__(self, cfg: RunConfig):
        n = len(cfg.grid)
        self.cfg = cfg
        self.completed_bound = 0
        self.accs = [MomentAccumulator() for _ in range(n)]
        self.g_chunks = []       # per completed range: sum 1/sqrt(p)
        self.chunk_bounds = []   # hi bound per completed range
        self.chunk_sums = []     # float64[n, 4] per completed range
        self.chunk_counts = []   # primes per completed range
        self.chunk_qs = []       # int64[n] per completed range
        self.chunk_last = []     # largest prime per completed range
        nbins = hist_bin_count(*cfg.histogram) if cfg.histogram else 0
        self.hist_counts = np.zeros((n, nbins), dtype=np.int64)
        self.rows = []           # emitted checkpoint rows (dicts)
        self.raw_offsets = [0] * n

    def g_sum(self) -> float:
        total = 0.0
        for s in self.g_chunks:
            total += s
        return total

    def commit_range(self, hi: int, n_primes: int, last_prime: int,
                     g_chunk: float, sums, qs):
        self.chunk_bounds.append(hi)
        self.chunk_counts.append(n_primes)
        self.chunk_last.append(last_prime)
        self.g_chunks.append(g_chunk)
        self.chunk_sums.append(sums)
        self.chunk_qs.append(qs)
        for i, acc in enumerate(self.accs):
            acc.add_chunk(hi, sums[i], n_primes, int(qs[i]), last_prime)
        self.completed_bound = hi

    def emit_checkpoint(self, x: int):
        g = g_value(x, self.g_sum())
        for i, seed in enumerate(self.cfg.grid):
            cs = checkpoint(self.accs[i], x, g)
            self.rows.append({
                "c": seed.c, "alpha": seed.alpha, "x": x,
                "prime_count": cs.prime_count,
                "M1": cs.M[0], "M2": cs.M[1], "M3": cs.M[2], "M4": cs.M[3],
                "q_count": cs.q_count, "q_scaled": cs.q_scaled, "g_of_x": g,
            })

    def to_arrays(self) -> dict:
        n = len(self.cfg.grid)
        rows = self.rows
        return {
            "chunk_bounds": np.asarray(self.chunk_bounds, dtype=np.int64),
            "chunk_counts": np.asarray(self.chunk_counts, dtype=np.int64),
            "chunk_last": np.asarray(self.chunk_last, dtype=np.int64),
            "g_chunks": np.asarray(self.g_chunks, dtype=np.float64),
            "chunk_sums": (np.stack(self.chunk_sums)
                           if self.chunk_sums else np.zeros((0, n, 4))),
            "chunk_qs": (np.stack(self.chunk_qs)
                         if self.chunk_qs else np.zeros((0, n), dtype=np.int64)),
            "hist_counts": self.hist_counts,
            "raw_offsets": np.asarray(self.raw_offsets, dtype=np.int64),
            "rows_pair": np.asarray([self.cfg.grid.index(MapSeed(r["c"], r["alpha"]))
                                     for r in rows], dtype=np.int64),
            "rows_x": np.asarray([r["x"] for r in rows], dtype=np.int64),
            "rows_pi": np.asarray([r["prime_count"] for r in rows], dtype=np.int64),
            "rows_M": (np.asarray([[r["M1"], r["M2"], r["M3"], r["M4"]] for r in rows])
                       if rows else np.zeros((0, 4))),
            "rows_q": np.asarray([r["q_count"] for r in rows], dtype=np.int64),
            "rows_qs": np.asarray([r["q_scaled"] for r in rows], dtype=np.float64),
            "rows_g": np.asarray([r["g_of_x"] for r in rows], dtype=np.float64),
        }

    @classmethod
    def from_arrays(cls, cfg: RunConfig, a: dict) -> "_RunState":
        st = cls(cfg)
        for k in range(len(a["chunk_bounds"])):
            st.commit_range(int(a["chunk_bounds"][k]), int(a["chunk_counts"][k]),
                            int(a["chunk_last"][k]), float(a["g_chunks"][k]),
                            a["chunk_sums"][k].copy(), a["chunk_qs"][k].copy())
        st.hist_counts = a["hist_counts"].copy()
        st.raw_offsets = [int(v) for v in a["raw_offsets"]]
        for j in range(len(a["rows_x"])):
            seed = cfg.grid[int(a["rows_pair"][j])]
            st.rows.append({
                "c": seed.c, "alpha": seed.alpha, "x": int(a["rows_x"][j]),
                "prime_count": int(a["rows_pi"][j]),
                "M1": float(a["rows_M"][j][0]), "M2": float(a["rows_M"][j][1]),
                "M3": float(a["rows_M"][j][2]), "M4": float(a["rows_M"][j][3]),
                "q_count": int(a["rows_q"][j]),
                "q_scaled": float(a["rows_qs"][j]), "g_of_x": float(a["rows_g"][j]),
            })
        return st


class ResultStore:
    """A run's output directory: manifest, persisted state, and CSV/JSON."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.manifest = self._load_manifest()
        self._state = None

    def _load_manifest(self) -> dict:
        path = os.path.join(self.out_dir, "manifest.json")
        try:
            with open(path) as f:
                return json.load(f)
        except FileNotFoundError:
            raise StoreIntegrityError(f"no manifest at {path}")
        except json.JSONDecodeError as e:
            raise StoreIntegrityError(f"corrupt manifest at {path}: {e}")

    @property
    def config(self) -> RunConfig:
        c = self.manifest["config"]
        return RunConfig(
            out_dir=self.out_dir,
            grid=tuple(MapSeed(int(p[0]), int(p[1])) for p in c["grid"]),
            x_max=c["x_max"],
            checkpoints=tuple(c["checkpoints"]),
            histogram=tuple(c["histogram"]) if c["histogram"] else None,
            force_ineligible=c["force_ineligible"],
            raw_dump=c["raw_dump"],
        )

    @property
    def finished(self) -> bool:
        return self.manifest["finished"]

    def state(self) -> _RunState:
        if self._state is None:
            path = os.path.join(self.out_dir, self.manifest["state_file"])
            if not os.path.exists(path):
                raise StoreIntegrityError(f"missing state file {path}")
            if _sha256_file(path) != self.manifest["state_sha256"]:
                raise StoreIntegrityError(
                    f"state file {path} does not match its manifest checksum; "
                    f"re-run the range [0, {self.manifest['completed_bound']})")
            with np.load(path) as data:
                self._state = _RunState.from_arrays(self.config, dict(data))
        return self._state

    def rows(self) -> list:
        return list(self.state().rows)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)


def _raw_path(out_dir: str, seed: MapSeed) -> str:
    return os.path.join(out_dir, f"raw_c{seed.c}_a{seed.alpha}.csv")


def _hist_path(out_dir: str, seed: MapSeed) -> str:
    return os.path.join(out_dir, f"histogram_c{seed.c}_a{seed.alpha}.csv")


def _persist(out_dir: str, cfg: RunConfig, state: _RunState, finished: bool):
    state_file = f"state_{state.completed_bound}.npz"
    path = os.path.join(out_dir, state_file)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        np.savez(f, **state.to_arrays())
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": cfg.science_dict(),
        "config_hash": config_hash(cfg),
        "completed_bound": state.completed_bound,
        "finished": finished,
        "state_file": state_file,
        "state_sha256": _sha256_file(path),
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=1).encode())
    for name in os.listdir(out_dir):
        if name.startswith("state_") and name.endswith(".npz") and name != state_file:
            os.unlink(os.path.join(out_dir, name))


def _write_checkpoint_csv(out_dir: str, state: _RunState):
    lines = [",".join(CSV_HEADER)]
    for r in state.rows:
        lines.append(",".join([
            str(r["c"]), str(r["alpha"]), str(r["x"]), str(r["prime_count"]),
            _fmt(r["M1"]), _fmt(r["M2"]), _fmt(r["M3"]), _fmt(r["M4"]),
            str(r["q_count"]), f"{r['q_scaled']:.5f}", f"{r['g_of_x']:.5f}",
        ]))
    _atomic_write(os.path.join(out_dir, "checkpoints.csv"),
                  ("\n".join(lines) + "\n").encode())


def _stats_at(state: _RunState, x: int) -> list:
    out = []
    for seed in state.cfg.grid:
        r = next(r for r in state.rows
                 if r["x"] == x and r["c"] == seed.c and r["alpha"] == seed.alpha)
        out.append(CheckpointStats(
            x=x, prime_count=r["prime_count"],
            M=(r["M1"], r["M2"], r["M3"], r["M4"]),
            q_count=r["q_count"], q_scaled=r["q_scaled"], g_of_x=r["g_of_x"]))
    return out


def _write_reports(out_dir: str, state: _RunState):
    cfg = state.cfg
    final = deviation_report(_stats_at(state, cfg.x_max))
    lines = ["metric,mean,std,min,max"]
    for row in final.rows:
        lines.append(f"{row.label},{_fmt(row.mean)},{_fmt(row.std)},"
                     f"{_fmt(row.min)},{_fmt(row.max)}")
    _atomic_write(os.path.join(out_dir, "deviation_moments.csv"),
                  ("\n".join(lines) + "\n").encode())

    lines = ["x,g_of_x,mean,std,min,max,abs_err"]
    for x in cfg.checkpoints:
        rep = deviation_report(_stats_at(state, x))
        q = rep.rows[-1]
        lines.append(f"{x},{rep.g_of_x:.5f},{q.mean:.5f},{q.std:.5f},"
                     f"{q.min:.5f},{q.max:.5f},{rep.g_abs_err:.5f}")
    _atomic_write(os.path.join(out_dir, "deviation_qscaled.csv"),
                  ("\n".join(lines) + "\n").encode())


def _write_histograms(out_dir: str, state: _RunState):
    cfg = state.cfg
    if not cfg.histogram:
        return
    w, t_max = cfg.histogram
    for i, seed in enumerate(cfg.grid):
        h = Histogram(w=w, t_max=t_max, counts=state.hist_counts[i],
                      total_primes=sum(state.chunk_counts), x=cfg.x_max)
        lines = ["bin_lo,bin_hi,density"]
        dens = h.bins
        for k in range(len(h.counts)):
            lines.append(f"{_fmt(k * w)},{_fmt((k + 1) * w)},{_fmt(dens[k])}")
        _atomic_write(_hist_path(out_dir, seed), ("\n".join(lines) + "\n").encode())


_worker_local = threading.local()


def _get_worker() -> PairWorker:
    w = getattr(_worker_local, "worker", None)
    if w is None:
        w = _worker_local.worker = PairWorker()
    return w


def _pair_task(primes_u, seed: MapSeed, hist_row, w, want_raw):
    sums = np.zeros(4, dtype=np.float64)
    counters = np.zeros(2, dtype=np.int64)
    raw = None
    if want_raw:
        n = len(primes_u)
        raw = (np.zeros(n, np.int64), np.zeros(n, np.int64), np.zeros(n, np.int64))
    _get_worker().run_range(primes_u, seed.c, seed.alpha, sums, counters,
                            hist=hist_row, w=w, raw=raw)
    return sums, counters, raw


def _append_raw(out_dir: str, state: _RunState, prange, raws):
    for i, seed in enumerate(state.cfg.grid):
        path = _raw_path(out_dir, seed)
        raw_m, raw_tail, raw_zero = raws[i]
        # Truncating to the last recorded offset drops any rows a crash left
        # behind after the previous state commit.
        with open(path, "a+") as f:
            if state.raw_offsets[i] == 0:
                f.truncate(0)
                f.write("p,m,tail,cycle,zero_hit\n")
            else:
                f.truncate(state.raw_offsets[i])
                f.seek(state.raw_offsets[i])
            for j, p in enumerate(prange.primes):
                m = int(raw_m[j])
                t = int(raw_tail[j])
                f.write(f"{int(p)},{m},{t},{m - t},{int(raw_zero[j])}\n")
            f.flush()
            os.fsync(f.fileno())
            state.raw_offsets[i] = f.tell()


def _execute(cfg: RunConfig, state: _RunState, until) -> ResultStore:
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    bounds = canonical_bounds(cfg)
    stop = cfg.x_max if until is None else int(until)
    if stop not in bounds:
        raise ValueError(f"until={stop} is not a range boundary of this config")
    checkpoint_set = set(cfg.checkpoints)
    todo = [b for b in bounds if b >= state.completed_bound]
    if state.completed_bound not in bounds:
        raise StoreIntegrityError(
            f"stored bound {state.completed_bound} is not aligned to this config")
    hist_w = cfg.histogram[0] if cfg.histogram else 1.0

    if len(todo) > 1 and todo[0] < stop:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for prange in iter_prime_ranges(todo):
                if prange.hi > stop:
                    break
                primes_u = prange.primes.astype(np.uint64)
                futures = [
                    pool.submit(_pair_task, primes_u, seed,
                                state.hist_counts[i] if cfg.histogram else
                                np.empty(0, dtype=np.int64),
                                hist_w, cfg.raw_dump)
                    for i, seed in enumerate(cfg.grid)
                ]
                results = [f.result() for f in futures]
                sums = np.stack([r[0] for r in results])
                qs = np.asarray([int(r[1][1]) for r in results], dtype=np.int64)
                if cfg.raw_dump:
                    _append_raw(out_dir, state, prange, [r[2] for r in results])
                last_prime = int(prange.primes[-1]) if len(prange) else 0
                state.commit_range(prange.hi, len(prange), last_prime,
                                   inv_sqrt_sum(prange.primes), sums, qs)
                if prange.hi in checkpoint_set:
                    state.emit_checkpoint(prange.hi)
                    _write_checkpoint_csv(out_dir, state)
                _persist(out_dir, cfg, state, finished=False)

    finished = state.completed_bound == cfg.x_max
    if finished:
        _write_checkpoint_csv(out_dir, state)
        _write_reports(out_dir, state)
        _write_histograms(out_dir, state)
    _persist(out_dir, cfg, state, finished=finished)
    return ResultStore(out_dir)


def run(config: RunConfig, until: int = None) -> ResultStore:
    """Execute a sweep from scratch (an existing store in out_dir is replaced).

    `until` stops cleanly at an intermediate range boundary, leaving a store
    that resume() completes to the same bytes an uninterrupted run produces.
    """
    cfg = config.normalized()
    os.makedirs(cfg.out_dir, exist_ok=True)
    state = _RunState(cfg)
    for name in os.listdir(cfg.out_dir):
        if name.startswith(("state_", "raw_", "histogram_")) or name.endswith(".csv") \
                or name == "manifest.json":
            os.unlink(os.path.join(cfg.out_dir, name))
    _persist(cfg.out_dir, cfg, state, finished=False)
    return _execute(cfg, state, until)


def resume(out_dir: str, config: RunConfig = None, until: int = None) -> ResultStore:
    """Continue an interrupted run from its first incomplete range.

    If `config` is given its result-determining fields must hash-match the
    stored run; a completed store is returned unchanged.
    """
    store = ResultStore(out_dir)
    stored_cfg = store.config.normalized()
    exec_cfg = stored_cfg
    if config is not None:
        if config_hash(config.normalized()) != config_hash(stored_cfg):
            raise ValueError(
                "config mismatch: the store was produced by a different "
                "configuration; refusing to resume")
        # threads/out_dir never affect results, so the caller's preference wins
        exec_cfg = replace(stored_cfg, threads=config.threads)
    if store.manifest["config_hash"] != config_hash(stored_cfg):
        raise StoreIntegrityError("manifest config hash does not match its config")
    if store.finished:
        return store
    state = store.state()
    state.cfg = exec_cfg
    return _execute(exec_cfg, state, until)


def export(store: ResultStore, fmt: str) -> list:
    """Write the store's tables in the requested format; returns the paths."""
    state = store.state()
    out_dir = store.out_dir
    if fmt == "csv":
        _write_checkpoint_csv(out_dir, state)
        paths = [store.path("checkpoints.csv")]
        if store.finished:
            _write_reports(out_dir, state)
            _write_histograms(out_dir, state)
            paths += [store.path("deviation_moments.csv"),
                      store.path("deviation_qscaled.csv")]
            if state.cfg.histogram:
                paths += [_hist_path(out_dir, s) for s in state.cfg.grid]
        return paths
    if fmt == "json":
        pairs = []
        for seed in state.cfg.grid:
            rows = [r for r in state.rows
                    if r["c"] == seed.c and r["alpha"] == seed.alpha]
            pairs.append({"c": seed.c, "alpha": seed.alpha, "rows": rows})
        path = store.path("results.json")
        _atomic_write(path, json.dumps({"pairs": pairs}, indent=1).encode())
        return [path]
    raise ValueError(f"unknown export format {fmt!r} (expected csv or json)")
