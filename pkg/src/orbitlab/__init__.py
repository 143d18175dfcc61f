"""orbitlab: orbit lengths of z -> z**2 + c modulo primes, their
birthday-problem limit law, and the statistics connecting the two."""

from .birthday import (collision_prob, exact_moment, limit_cdf, limit_moment,
                       limit_pdf, sample_collision_time, tail_prob)
from .catalog import (ClassificationFlags, MapSeed, classify, default_grid,
                      finite_orbit_oracle, parse_grid_spec)
from .orbits import OrbitRecord, iterate_once, orbit_stats, orbit_stats_oracle
from .primes import PrimeRange, is_prime, prime_count, rosser_check, sieve_range
from .runner import (IneligibleSeedError, ResultStore, RunConfig,
                     StoreIntegrityError, export, resume, run)
from .stats import (CheckpointStats, DeviationReport, Histogram,
                    MomentAccumulator, build_histogram, checkpoint, compute_G,
                    deviation_report, g_series)

__version__ = "0.1.0"

__all__ = [
    "ClassificationFlags", "CheckpointStats", "DeviationReport", "Histogram",
    "IneligibleSeedError", "MapSeed", "MomentAccumulator", "OrbitRecord",
    "PrimeRange", "ResultStore", "RunConfig", "StoreIntegrityError",
    "build_histogram", "checkpoint", "classify", "collision_prob", "compute_G",
    "default_grid", "deviation_report", "exact_moment", "export",
    "finite_orbit_oracle", "g_series", "is_prime", "iterate_once",
    "limit_cdf", "limit_moment", "limit_pdf", "orbit_stats",
    "orbit_stats_oracle", "parse_grid_spec", "prime_count", "resume",
    "rosser_check", "run", "sample_collision_time", "sieve_range", "tail_prob",
]
