"""Capacity convergence study for the unit disk.

Sweeps the mesh resolution, reports the capacity error against the
exact value 2 and the equilibrium-density error against the inverse
square root profile, and writes one CSV row per resolution.

    python3 scripts/capacity_convergence.py --out results/capacity
"""

import argparse
import math
import os
import time

import numpy as np

from subwave.aperture import (
    assemble_riesz_matrix,
    disk_density_exact,
    disk_mesh,
    solve_equilibrium,
)
from subwave.serialize import write_csv


def density_error(density, r_max=0.8):
    """Worst relative density error over nodes with |x| <= r_max."""
    r = np.linalg.norm(density.mesh.nodes, axis=1)
    inner = r <= r_max
    exact = disk_density_exact(r[inner])
    return float(np.max(np.abs(density.values[inner] - exact) / exact))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--resolutions", type=int, nargs="+",
                        default=[6, 8, 12, 16, 24, 32])
    parser.add_argument("--out", default="results/capacity")
    parser.add_argument("--plot", action="store_true",
                        help="save a log-log error plot next to the CSV")
    args = parser.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    rows = []
    print(f"{'res':>4} {'nodes':>6} {'capacity':>12} {'cap err':>10} "
          f"{'dens err':>10} {'sec':>6}")
    for res in args.resolutions:
        t0 = time.perf_counter()
        mesh = disk_mesh(res)
        matrix = assemble_riesz_matrix(mesh, check=False)
        density = solve_equilibrium(mesh, matrix)
        elapsed = time.perf_counter() - t0
        cap_err = abs(density.capacity - 2.0) / 2.0
        dens_err = density_error(density)
        rows.append([res, mesh.size, density.capacity, cap_err, dens_err,
                     elapsed])
        print(f"{res:>4} {mesh.size:>6} {density.capacity:>12.8f} "
              f"{cap_err:>10.3e} {dens_err:>10.3e} {elapsed:>6.2f}")

    csv_path = os.path.join(args.out, "convergence.csv")
    write_csv(csv_path,
              ["resolution", "nodes", "capacity", "capacity_rel_err",
               "density_rel_err", "seconds"],
              rows)
    print(f"wrote {csv_path}")

    slope = np.polyfit(np.log([r[1] for r in rows]),
                       np.log([r[3] for r in rows]), 1)[0]
    print(f"capacity error vs nodes: slope {slope:.2f}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        nodes = [r[1] for r in rows]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(nodes, [r[3] for r in rows], "o-", label="capacity")
        ax.loglog(nodes, [r[4] for r in rows], "s--", label="density (r <= 0.8)")
        ax.set_xlabel("nodes")
        ax.set_ylabel("relative error")
        ax.legend()
        fig.tight_layout()
        png = os.path.join(args.out, "convergence.png")
        fig.savefig(png, dpi=150)
        print(f"wrote {png}")


if __name__ == "__main__":
    main()
