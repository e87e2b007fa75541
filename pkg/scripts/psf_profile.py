"""Fixed-frequency point spread profiles across hole sizes.

Scans Im G along a line through the focus at the real part of the
leading resonance and reports the width of the central peak.  The
near-field peak width is set by the geometry (source and scan
heights), not by the wavelength 2 pi / k, so the fwhm*k column shrinks
like sqrt(epsilon): the peak is deeply sub-wavelength.

    python3 scripts/psf_profile.py --out results/psf
"""

import argparse
import os

import numpy as np

from subwave.green import psf_scan_rows
from subwave.imaging import NoPeakError, focal_metrics
from subwave.resonance import resonances_asymptotic
from subwave.serialize import write_csv
from subwave.system import build_system, interaction_matrices


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--epsilons", type=float, nargs="+",
                        default=[1e-2, 2.5e-3])
    parser.add_argument("--alpha0", type=float, default=1.0)
    parser.add_argument("--half-width", type=float, default=4.0,
                        help="scan half width around the hole")
    parser.add_argument("--count", type=int, default=481)
    parser.add_argument("--out", default="results/psf")
    args = parser.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    x0 = np.array([0.0, 0.0, 0.8])
    print(f"{'epsilon':>10} {'k':>10} {'peak |Im G|':>12} {'fwhm':>10} "
          f"{'fwhm*k':>8}")
    for eps in args.epsilons:
        system = build_system(1.0, eps, [[0.0, 0.0]], alpha0=args.alpha0)
        spectral = interaction_matrices(system)
        res = resonances_asymptotic(system, spectral)
        k = res[0].value.real
        xs = np.linspace(-args.half_width, args.half_width, args.count)
        points = np.column_stack(
            [xs, np.zeros_like(xs), np.full_like(xs, 0.5)])
        rows = psf_scan_rows(points, x0, k, system, spectral, res)
        profile = np.abs(np.array([r[3] for r in rows]))
        try:
            met = focal_metrics(xs, profile)
            fwhm, peak = met.fwhm, met.peak_value
        except NoPeakError:
            fwhm, peak = float("nan"), float(np.max(profile))
        print(f"{eps:>10.2e} {k:>10.5f} {peak:>12.4e} {fwhm:>10.4f} "
              f"{fwhm * k:>8.4f}")
        tag = f"{eps:.0e}".replace("-", "m")
        csv_path = os.path.join(args.out, f"psf_{tag}.csv")
        write_csv(
            csv_path,
            ["x1", "x2", "x3", "im_total", "re_g1", "im_g1", "re_g2",
             "im_g2", "re_g3", "im_g3", "re_g4", "im_g4"],
            rows,
        )
        print(f"  wrote {csv_path}")


if __name__ == "__main__":
    main()
