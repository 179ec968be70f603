#!/usr/bin/env python3
"""Emit free-space sample paths for the four fluctuation regimes.

Writes one CSV per regime (path_id, t, x) into the output directory:

* finite activity, finite variation -- uniform jumps, total rate 0.2
* infinite activity, finite variation -- capped power law, index 1/2
* infinite activity, infinite variation -- capped power law, index 3/2
  (scale 1000 keeps the excursion amplitude comparable)
* zero activity, infinite variation -- Brownian comparator with diffusion
  coefficient 1/2, so the mean square displacement equals t

Plot x against t with steps-post for the jump regimes to reproduce the
characteristic path shapes.
"""

import argparse
from pathlib import Path

from jumpexit import (CompoundPoissonUniform, TruncatedStable, brownian_path,
                      path_rng, simulate_path)

REGIMES = {
    "compound_poisson": CompoundPoissonUniform(rate=0.2, horizon=1.0),
    "stable_alpha05": TruncatedStable(alpha=0.5, m=1.0, horizon=1.0, epsilon=1e-3),
    "stable_alpha15": TruncatedStable(alpha=1.5, m=1000.0, horizon=1.0, epsilon=1e-3),
}


def write_paths(path, paths):
    with open(path, "w") as fh:
        fh.write("path_id,t,x\n")
        for pid, p in enumerate(paths):
            for t, x in zip(p.times, p.positions):
                fh.write(f"{pid},{t:.10g},{x:.10g}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="regime_paths")
    ap.add_argument("--n-paths", type=int, default=5)
    ap.add_argument("--t-max", type=float, default=50.0)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, kernel in REGIMES.items():
        paths = [simulate_path(kernel, 0.0, path_rng(args.seed, i), args.t_max)
                 for i in range(args.n_paths)]
        write_paths(out / f"{name}.csv", paths)
        jumps = [p.times.size - 2 for p in paths]
        print(f"{name}: {args.n_paths} paths, jump counts {jumps}")
    paths = [brownian_path(0.0, path_rng(args.seed, i), args.t_max, n_steps=2000)
             for i in range(args.n_paths)]
    write_paths(out / "brownian.csv", paths)
    print(f"brownian: {args.n_paths} paths, {2000} increments each")
    print(f"wrote {out}/")


if __name__ == "__main__":
    main()
