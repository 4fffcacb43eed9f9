"""Compare the compiled kernels against the pure-numpy reference path.

Runs representative single replications on both backends and prints wall
times and speedups.  The first numba call includes JIT compilation, so each
kernel is warmed on a short horizon before timing.

    python benchmarks/bench_backends.py [--reps 3]
"""

import argparse
import time

from banditix.harness import (
    ExperimentConfig,
    prepare_replication,
    run_replication,
    simulate_replication,
)
from banditix.rng import policy_stream

WORKLOADS = [
    (
        "exp3ix d=20 T=5000 complete",
        ExperimentConfig(
            policy="exp3ix",
            d=20,
            horizon=5000,
            replications=1,
            base_seed=1,
            env={"losses": {"kind": "iid_uniform"}, "graph": {"kind": "complete"}},
        ),
    ),
    (
        "exp3ix d=20 T=5000 ER(0.2) per-round",
        ExperimentConfig(
            policy="exp3ix",
            d=20,
            horizon=5000,
            replications=1,
            base_seed=1,
            env={
                "losses": {"kind": "iid_uniform"},
                "graph": {"kind": "erdos_renyi", "r": 0.2},
                "per_round": True,
            },
        ),
    ),
    (
        "fplix d=12 m=3 T=3000 ER(0.3) per-round",
        ExperimentConfig(
            policy="fplix",
            d=12,
            horizon=3000,
            replications=1,
            base_seed=1,
            decision_set="msets(3)",
            env={
                "losses": {"kind": "iid_uniform"},
                "graph": {"kind": "erdos_renyi", "r": 0.3},
                "per_round": True,
            },
        ),
    ),
    (
        "exp3dom d=20 T=5000 clique_partition(4)",
        ExperimentConfig(
            policy="exp3dom",
            d=20,
            horizon=5000,
            replications=1,
            base_seed=1,
            env={
                "losses": {"kind": "iid_uniform"},
                "graph": {"kind": "clique_partition", "c": 4},
            },
        ),
    ),
]


def _time_simulation(config, trace, stats, backend, reps):
    best = float("inf")
    for _ in range(reps):
        rng = policy_stream(config.base_seed, 0)
        start = time.perf_counter()
        simulate_replication(config, trace, stats, rng, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=3, help="timing repetitions")
    args = parser.parse_args()

    print("simulation loop only (trace generation is shared between backends)")
    print(f"{'workload':45} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, config in WORKLOADS:
        config.validate()
        warm = ExperimentConfig.from_dict({**config.to_dict(), "horizon": 50})
        run_replication(warm, 0, backend="numba")  # JIT warmup
        trace, stats = prepare_replication(config, 0)
        t_np = _time_simulation(config, trace, stats, "numpy", args.reps)
        t_nb = _time_simulation(config, trace, stats, "numba", args.reps)
        print(f"{name:45} {t_np:9.3f}s {t_nb:9.3f}s {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
