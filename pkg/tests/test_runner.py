import json
import os

import numpy as np
import pytest

from orbitlab.catalog import MapSeed
from orbitlab.orbits import orbit_stats
from orbitlab.primes import prime_count
from orbitlab.runner import (CSV_HEADER, IneligibleSeedError, ResultStore,
                             RunConfig, StoreIntegrityError, canonical_bounds,
                             config_hash, export, resume, run)


def small_cfg(tmp_path, **kw):
    defaults = dict(out_dir=str(tmp_path / "out"), grid=(MapSeed(1, 3),),
                    x_max=1 << 12, threads=1)
    defaults.update(kw)
    return RunConfig(**defaults)


def test_single_pair_run(tmp_path):
    store = run(small_cfg(tmp_path, x_max=1 << 13))
    rows = store.rows()
    xs = sorted({r["x"] for r in rows})
    assert xs == [1 << 10, 1 << 11, 1 << 12, 1 << 13]
    q = [r["q_count"] for r in sorted(rows, key=lambda r: r["x"])]
    assert q == sorted(q)  # monotone trace
    assert store.finished


def test_work_conservation(tmp_path):
    store = run(small_cfg(tmp_path, grid=(MapSeed(1, 3), MapSeed(-1, 2))))
    for r in store.rows():
        assert r["prime_count"] == prime_count(r["x"])


def test_rows_match_direct_orbit_stats(tmp_path):
    x = 1 << 10
    store = run(small_cfg(tmp_path, x_max=x))
    row = next(r for r in store.rows() if r["x"] == x)
    from orbitlab.primes import sieve_range
    from orbitlab._kernels import term_powers
    sums = np.zeros(4)
    q = 0
    primes = sieve_range(0, x + 1).primes
    for p in primes:
        rec = orbit_stats(1, 3, int(p))
        sums += term_powers(rec.m, rec.p)
        q += rec.zero_hit
    assert row["q_count"] == q
    for i, key in enumerate(["M1", "M2", "M3", "M4"]):
        assert row[key] == pytest.approx(sums[i] / len(primes), rel=1e-12)


def test_refuses_ineligible_seed(tmp_path):
    cfg = small_cfg(tmp_path, grid=(MapSeed(-1, 1),))
    with pytest.raises(IneligibleSeedError) as exc:
        run(cfg)
    assert "finite_case_ii" in str(exc.value)
    flagged = dict(exc.value.flagged)
    assert "finite_case_ii" in flagged[MapSeed(-1, 1)]


def test_refusal_covers_all_default_grid_exclusions(tmp_path):
    for seed in (MapSeed(-1, 1), MapSeed(-3, 1), MapSeed(-3, 2)):
        with pytest.raises(IneligibleSeedError):
            run(small_cfg(tmp_path, grid=(seed,)))


def test_force_overrides_refusal(tmp_path):
    store = run(small_cfg(tmp_path, grid=(MapSeed(-1, 1),), x_max=1 << 10,
                          force_ineligible=True))
    assert store.finished


def test_zero_preimage_refused_without_force(tmp_path):
    with pytest.raises(IneligibleSeedError) as exc:
        run(small_cfg(tmp_path, grid=(MapSeed(-4, 2),)))
    assert "zero_preimage" in str(exc.value)


def test_csv_header_exact(tmp_path):
    store = run(small_cfg(tmp_path))
    first = open(store.path("checkpoints.csv")).readline().rstrip("\n")
    assert first == "c,alpha,x,prime_count,M1,M2,M3,M4,q_count,q_scaled,g_of_x"
    assert first == ",".join(CSV_HEADER)


def test_export_json_mirrors_rows(tmp_path):
    store = run(small_cfg(tmp_path, grid=(MapSeed(1, 3), MapSeed(2, 5))))
    (path,) = export(store, "json")
    data = json.load(open(path))
    assert [p["c"] for p in data["pairs"]] == [1, 2]
    flat = [r for p in data["pairs"] for r in p["rows"]]
    assert len(flat) == len(store.rows())
    got = next(r for r in data["pairs"] if r["c"] == 2)["rows"][0]
    ref = next(r for r in store.rows() if r["c"] == 2 and r["x"] == got["x"])
    assert got == ref  # full precision survives the round trip


def test_export_unknown_format(tmp_path):
    store = run(small_cfg(tmp_path))
    with pytest.raises(ValueError):
        export(store, "xml")


def test_histogram_export(tmp_path):
    w, t_max = 5.6 / 800, 5.6
    store = run(small_cfg(tmp_path, x_max=1 << 12, histogram=(w, t_max)))
    lines = open(store.path("histogram_c1_a3.csv")).read().splitlines()
    assert lines[0] == "bin_lo,bin_hi,density"
    assert len(lines) == 801  # 800 bins
    dens = [float(l.split(",")[2]) for l in lines[1:]]
    mass = sum(d * w for d in dens)
    assert mass <= 1.0 + 1e-9
    assert mass == pytest.approx(1.0, abs=0.01)  # nearly all ratios below 5.6


def test_raw_dump(tmp_path):
    x = 1 << 10
    store = run(small_cfg(tmp_path, x_max=x, raw_dump=True))
    lines = open(store.path("raw_c1_a3.csv")).read().splitlines()
    assert lines[0] == "p,m,tail,cycle,zero_hit"
    assert len(lines) - 1 == prime_count(x)
    for line in (lines[1], lines[-1]):
        p, m, tail, cycle, zero = map(int, line.split(","))
        rec = orbit_stats(1, 3, p)
        assert (rec.m, rec.tail, rec.cycle, int(rec.zero_hit)) == (m, tail, cycle, zero)


def test_thread_count_does_not_change_bytes(tmp_path):
    cfg1 = small_cfg(tmp_path, out_dir=str(tmp_path / "t1"),
                     grid=(MapSeed(1, 3), MapSeed(3, 4), MapSeed(-1, 5)))
    cfg4 = small_cfg(tmp_path, out_dir=str(tmp_path / "t4"),
                     grid=(MapSeed(1, 3), MapSeed(3, 4), MapSeed(-1, 5)), threads=4)
    a, b = run(cfg1), run(cfg4)
    for name in ("checkpoints.csv", "deviation_moments.csv", "deviation_qscaled.csv"):
        assert open(a.path(name), "rb").read() == open(b.path(name), "rb").read()


def test_interrupt_resume_identical(tmp_path):
    cfg = small_cfg(tmp_path, out_dir=str(tmp_path / "intr"), x_max=1 << 13,
                    raw_dump=True)
    partial = run(cfg, until=1 << 12)
    assert not partial.finished
    assert partial.manifest["completed_bound"] == 1 << 12
    resumed = resume(cfg.out_dir)
    assert resumed.finished
    clean = run(small_cfg(tmp_path, out_dir=str(tmp_path / "clean"),
                          x_max=1 << 13, raw_dump=True))
    for name in ("checkpoints.csv", "deviation_qscaled.csv", "raw_c1_a3.csv"):
        assert open(resumed.path(name), "rb").read() == open(clean.path(name), "rb").read()


def test_resume_finished_is_noop(tmp_path):
    cfg = small_cfg(tmp_path)
    run(cfg)
    before = open(os.path.join(cfg.out_dir, "manifest.json"), "rb").read()
    store = resume(cfg.out_dir)
    assert store.finished
    assert open(os.path.join(cfg.out_dir, "manifest.json"), "rb").read() == before


def test_resume_rejects_changed_config(tmp_path):
    cfg = small_cfg(tmp_path)
    run(cfg, until=1 << 10)
    changed = small_cfg(tmp_path, grid=(MapSeed(2, 5),))
    with pytest.raises(ValueError, match="config mismatch"):
        resume(cfg.out_dir, config=changed)


def test_resume_accepts_matching_config_any_threads(tmp_path):
    cfg = small_cfg(tmp_path)
    run(cfg, until=1 << 10)
    again = small_cfg(tmp_path, threads=3)
    store = resume(cfg.out_dir, config=again)
    assert store.finished


def test_corrupted_state_refused(tmp_path):
    cfg = small_cfg(tmp_path)
    run(cfg, until=1 << 10)
    store = ResultStore(cfg.out_dir)
    path = store.path(store.manifest["state_file"])
    blob = bytearray(open(path, "rb").read())
    blob[-1] ^= 0xFF
    open(path, "wb").write(bytes(blob))
    with pytest.raises(StoreIntegrityError, match="re-run"):
        resume(cfg.out_dir)


def test_missing_manifest(tmp_path):
    with pytest.raises(StoreIntegrityError):
        ResultStore(str(tmp_path / "nowhere"))


def test_until_must_be_range_boundary(tmp_path):
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path), until=1000)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path, x_max=1000))  # not a power of two
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path, x_max=1 << 10, checkpoints=(1 << 11,)))
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path, grid=()))
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path, grid=(MapSeed(1, 3), MapSeed(1, 3))))
    with pytest.raises(ValueError):
        run(small_cfg(tmp_path, threads=0))


def test_config_hash_ignores_threads_and_out_dir(tmp_path):
    a = small_cfg(tmp_path, out_dir="x", threads=1)
    b = small_cfg(tmp_path, out_dir="y", threads=8)
    assert config_hash(a) == config_hash(b)
    c = small_cfg(tmp_path, x_max=1 << 13)
    assert config_hash(a) != config_hash(c)


def test_canonical_bounds_include_checkpoints_and_segments():
    cfg = RunConfig(out_dir="z", grid=(MapSeed(1, 3),), x_max=1 << 22).normalized()
    bounds = canonical_bounds(cfg)
    assert bounds[0] == 0 and bounds[-1] == 1 << 22
    for cp in cfg.checkpoints:
        assert cp in bounds
    assert (1 << 20) in bounds and (3 << 20) in bounds
    assert bounds == sorted(set(bounds))
