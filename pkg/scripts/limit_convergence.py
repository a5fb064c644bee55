"""Sup grid error of every continuum limit along shrinking spreads, plus the COE checks."""
import argparse

from lew import rmt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid-size", type=int, default=20)
    ap.add_argument("--spreads", default="0.2,0.1,0.05,0.025")
    args = ap.parse_args()
    spreads = tuple(float(v) for v in args.spreads.split(","))
    for name in rmt.LIMITS:
        for n in (2, 3):
            rep = rmt.limit_convergence(name, n, spreads, args.grid_size)
            errs = "  ".join(f"{e:.3e}" for e in rep.errors)
            print(f"{name:10s} n={n}  {errs}  monotone={rep.monotone}")
    print()
    for t in (5.0, 10.0, 20.0, 30.0):
        errs = [rmt.coe_limit_check("circle_t_to_infty", n, t).sup_rel_error for n in (2, 3)]
        print(f"circle  t={t:5.1f}  n=2 {errs[0]:.2e}  n=3 {errs[1]:.2e}")
    for r in (1e-2, 1e-3, 1e-4, 1e-5):
        errs = [rmt.coe_limit_check("annulus_r_to_0", n, r).sup_rel_error for n in (2, 3)]
        print(f"annulus r={r:.0e}  n=2 {errs[0]:.2e} ({errs[0] / r:.2f} r)  n=3 {errs[1]:.2e} ({errs[1] / r:.2f} r)")


if __name__ == "__main__":
    main()
