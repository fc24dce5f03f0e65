"""Distribution of the stochastic stopping index over many seeds.

    python3 scripts/seed_sweep.py --example 1 --seeds 20
    python3 scripts/seed_sweep.py --example 1 --seeds 20 --precision-bits 24
"""

from __future__ import annotations

import argparse
import time
from collections import Counter
from dataclasses import dataclass

from cestac_volterra.controller import SaSuccessive, run
from cestac_volterra.problems import EXAMPLE_IDS, builtin_example
from cestac_volterra.sa import SaConfig, common_digits


@dataclass
class SweepConfig:
    example: int = 1
    seeds: int = 20
    first_seed: int = 0
    precision_bits: int = 53


def sweep(cfg: SweepConfig) -> Counter:
    p = builtin_example(cfg.example)
    exact = p.exact_value(p.point) if p.exact is not None else None
    stops: Counter = Counter()
    for seed in range(cfg.first_seed, cfg.first_seed + cfg.seeds):
        t0 = time.perf_counter()
        rep = run(p, SaSuccessive(), sa=SaConfig(rng_seed=seed, precision_bits=cfg.precision_bits))
        dt = time.perf_counter() - t0
        stops[rep.optimal_n] += 1
        digits = common_digits(rep.optimal_value.mean, exact) if exact is not None else float("nan")
        print(f"seed {seed:4d}  n={rep.optimal_n}  value={rep.optimal_value.text}  digits vs exact={digits:5.1f}  {dt:.2f}s")
    return stops


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--example", type=int, choices=EXAMPLE_IDS, default=1)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--precision-bits", type=int, choices=(24, 53), default=53)
    args = ap.parse_args()
    stops = sweep(SweepConfig(args.example, args.seeds, args.first_seed, args.precision_bits))
    print("stopping index histogram:", dict(sorted(stops.items())))


if __name__ == "__main__":
    main()
