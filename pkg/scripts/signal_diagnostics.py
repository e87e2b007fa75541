"""Quasi-stationarity diagnostics and scaling metrics for root signals.

Prints the Sobolev-norm, spectral-tail and high-frequency diagnostics
for the built-in signal kinds over a range of support lengths, plus
the weight metrics int |s| / eps^(1/4) and max |s'| eps^(3/4).

Note the tail column: the built-in bump keeps a spectral shoulder of
width ~1/c1, so its tail mass beyond eps^(-delta) stays orders of
magnitude above the eps scale no matter how long the support is.  The
diagnostic is expected to flag every row; it exists to quantify the
miss, not to be passed.

    python3 scripts/signal_diagnostics.py
"""

import argparse

from subwave.imaging import (
    make_root_signal,
    quasi_stationary_report,
    signal_lemma_metrics,
)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--epsilon", type=float, default=1e-2)
    parser.add_argument("--supports", type=float, nargs="+",
                        default=[0.5, 1.0, 2.0, 5.0])
    parser.add_argument("--kinds", nargs="+",
                        default=["smooth_bump", "raised_cosine"])
    args = parser.parse_args(argv)

    print(f"epsilon = {args.epsilon:g}")
    print(f"{'kind':>14} {'c1':>5} {'h2':>9} {'tail/eps':>10} "
          f"{'high/eps':>10} {'flags':>9} {'|s|/e^.25':>10} {'lip*e^.75':>10}")
    for kind in args.kinds:
        for c1 in args.supports:
            sig = make_root_signal(kind, c1=c1, epsilon=args.epsilon)
            rep = quasi_stationary_report(sig)
            met = signal_lemma_metrics(sig)
            flags = "".join(
                "y" if ok else "n"
                for ok in (rep.h2_ok, rep.tail_ok, rep.highfreq_ok)
            )
            print(f"{kind:>14} {c1:>5.2f} {rep.h2_norm:>9.3g} "
                  f"{rep.tail_ratio:>10.3g} {rep.highfreq_ratio:>10.3g} "
                  f"{flags:>9} {met['l1_ratio']:>10.4g} "
                  f"{met['lipschitz_ratio']:>10.4g}")


if __name__ == "__main__":
    main()
