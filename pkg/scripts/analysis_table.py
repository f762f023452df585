"""Threshold and level-set table for the default parameter set.

    python scripts/analysis_table.py [--k0 -2 -2.5 -3 -4]

Prints R0, the equilibrium classifications, and for each level k0 the orbit
bounds a, b, the ecological R0 and whether the comparison matrix is Hurwitz.
"""
import argparse

from sirsi_lv.analysis import basic_reproduction_number, classify_equilibria, level_set_bounds, metzler_comparison
from sirsi_lv.config import load_config
from sirsi_lv.model import DimensionalParams, nondimensionalize


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None)
    parser.add_argument("--k0", type=float, nargs="+", default=[-2.0, -2.1, -2.5, -3.0, -4.0, -6.0])
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    p = nondimensionalize(cfg.params)[0] if isinstance(cfg.params, DimensionalParams) else cfg.params
    print("rescaled parameters:", ", ".join(f"{k}={v:.6g}" for k, v in p.to_dict().items()))
    print(f"R0 = {basic_reproduction_number(p):.6f}")
    for rep in classify_equilibria(p):
        eig = ", ".join(f"{z.real:+.5f}{z.imag:+.5f}i" for z in rep.eigenvalues)
        print(f"{rep.label:3s} {rep.classification}\n    eigenvalues: {eig}")
    print(f"\n{'k0':>6s} {'a':>10s} {'b':>10s} {'eco_r0':>12s} {'Hurwitz':>8s}")
    for k0 in args.k0:
        b = level_set_bounds(k0, p)
        _, stable = metzler_comparison(p, k0)
        print(f"{k0:6.2f} {b.a:10.6f} {b.b:10.6f} {b.eco_r0:12.4f} {stable!s:>8s}")


if __name__ == "__main__":
    main()
