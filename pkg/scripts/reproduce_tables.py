"""Print the stochastic run and the epsilon sweep for each built-in example.

    python3 scripts/reproduce_tables.py --examples 1 2 --seed 7
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from cestac_volterra.cli import render_sweep, render_table
from cestac_volterra.controller import FpaAbsolute, FpaCorrection, SaSuccessive, digit_agreement, run
from cestac_volterra.problems import EXAMPLE_IDS, builtin_example
from cestac_volterra.sa import SaConfig


@dataclass
class TablesConfig:
    examples: list[int] = field(default_factory=lambda: list(EXAMPLE_IDS))
    seed: int = 7
    epsilons: tuple[float, ...] = (1e-10, 1e-5, 1e-1, 0.5, 1.0)
    fpa_max_n: int = 20


def reproduce(cfg: TablesConfig) -> None:
    for ex in cfg.examples:
        p = builtin_example(ex)
        sa_report = run(p, SaSuccessive(), sa=SaConfig(rng_seed=cfg.seed))
        print(render_table(sa_report, p.label))

        if len(sa_report.records) >= 2 and p.exact is not None:
            print("digit agreement (n, with exact, with next, gap)")
            for d in digit_agreement(sa_report, p.exact_value(p.point)):
                print(f"  {d.n:3d}  {d.c_exact:6.2f}  {d.c_succ:6.2f}  {d.gap:5.2f}")
            print()

        plain = run(p, FpaCorrection(1e-300), max_n=cfg.fpa_max_n)
        print(render_table(plain, p.label + " (binary64, no stop)"))

        sweep = [(eps, run(p, FpaAbsolute(eps), max_n=cfg.fpa_max_n)) for eps in cfg.epsilons]
        print("absolute-error stop vs epsilon")
        print(render_sweep(sweep, "table"))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--examples", type=int, nargs="+", choices=EXAMPLE_IDS, default=list(EXAMPLE_IDS))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-n", type=int, default=20)
    args = ap.parse_args()
    reproduce(TablesConfig(examples=args.examples, seed=args.seed, fpa_max_n=args.max_n))


if __name__ == "__main__":
    main()
