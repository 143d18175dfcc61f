"""orbit-lab command line.

Subcommands: run (grid sweep), resume (continue an interrupted sweep),
export (re-emit tables as csv/json), classify (exclusion flags for one pair),
birthday (exact vs limiting collision moments).
Exit codes: 0 success, 2 refusal/usage, 3 I/O or store corruption.
"""

import argparse
import sys

import numpy as np

from . import birthday
from .catalog import MapSeed, classify, parse_grid_spec
from .runner import (DEFAULT_X_MAX, IneligibleSeedError, ResultStore,
                     RunConfig, StoreIntegrityError, export, resume, run)
from .stats import DEFAULT_HIST_TMAX, DEFAULT_HIST_W

EXIT_OK = 0
EXIT_REFUSED = 2
EXIT_IO = 3


def _parse_bound(text: str) -> int:
    """Accept '2^25' or a plain integer."""
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    return int(text)


def _parse_histogram(text: str) -> tuple:
    if text == "default":
        return (DEFAULT_HIST_W, DEFAULT_HIST_TMAX)
    w_s, t_s = text.split(",", 1)
    return (float(w_s), float(t_s))


def _cmd_run(args) -> int:
    if args.c or args.alpha:
        if not (args.c and args.alpha):
            print("error: --c and --alpha must be given together", file=sys.stderr)
            return EXIT_REFUSED
        grid = tuple(parse_grid_spec(args.c, args.alpha))
    else:
        grid = tuple(RunConfig(out_dir="").grid)
    cfg = RunConfig(
        out_dir=args.out,
        grid=grid,
        x_max=_parse_bound(args.x_max),
        threads=args.threads,
        histogram=_parse_histogram(args.histogram) if args.histogram else None,
        force_ineligible=args.force,
        raw_dump=args.raw_dump,
    )
    store = run(cfg)
    print(f"completed to x_max={cfg.x_max}; results in {store.out_dir}")
    return EXIT_OK


def _cmd_resume(args) -> int:
    store = resume(args.dir, until=None)
    status = "finished" if store.finished else "stopped"
    print(f"{status} at bound {store.manifest['completed_bound']}; results in {store.out_dir}")
    return EXIT_OK


def _cmd_export(args) -> int:
    paths = export(ResultStore(args.dir), args.format)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_classify(args) -> int:
    seed = MapSeed(args.c, args.alpha)
    flags = classify(seed)
    print(f"c={seed.c} alpha={seed.alpha}")
    for name in ("finite_case_i", "finite_case_ii", "finite_case_iii",
                 "excluded_c", "zero_preimage"):
        print(f"  {name}: {getattr(flags, name)}")
    print(f"  eligible (orbit-length statistics): {flags.eligible}")
    print(f"  eligible (zero-hit counts): {flags.eligible_zero_count}")
    return EXIT_OK


def _cmd_birthday(args) -> int:
    n = args.n
    print(f"n = {n}")
    print(f"{'r':>2} {'exact E[(X_n/sqrt n)^r]':>24} {'limit':>20}")
    for r in range(1, 5):
        print(f"{r:>2} {birthday.exact_moment(n, r):>24.12f} "
              f"{birthday.limit_moment(r):>20.12f}")
    if args.samples:
        rng = np.random.default_rng(args.seed)
        draws = [birthday.sample_collision_time(n, rng) for _ in range(args.samples)]
        mean = float(np.mean(draws))
        print(f"monte carlo ({args.samples} samples, seed {args.seed}): "
              f"mean draws {mean:.4f}, mean/sqrt(n) {mean / np.sqrt(n):.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orbit-lab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="sweep a (c, alpha) grid over all primes <= x_max")
    p.add_argument("--c", default="", help="c values, e.g. 1,-1,2,3,-3")
    p.add_argument("--alpha", default="", help="alpha values, e.g. 1..9")
    p.add_argument("--x-max", default=str(DEFAULT_X_MAX), help="prime bound, e.g. 2^25")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true",
                   help="run ineligible pairs anyway")
    p.add_argument("--raw-dump", action="store_true",
                   help="write per-prime orbit rows per pair")
    p.add_argument("--histogram", default=None, metavar="W,TMAX",
                   help="bin m_p/sqrt(p) (or 'default' for w=5.6/800, tmax=5.6)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("dir")
    p.set_defaults(func=_cmd_resume)

    p = sub.add_parser("export", help="emit result tables")
    p.add_argument("dir")
    p.add_argument("--format", choices=["csv", "json"], required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("classify", help="exclusion flags for one (c, alpha)")
    p.add_argument("c", type=int)
    p.add_argument("alpha", type=int)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("birthday", help="exact vs limiting collision moments")
    p.add_argument("--n", type=int, required=True, help="number of 'days'")
    p.add_argument("--samples", type=int, default=0,
                   help="also run a seeded monte carlo of this many draws")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_birthday)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IneligibleSeedError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REFUSED
    except (OSError, StoreIntegrityError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
