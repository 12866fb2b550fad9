"""Strong-solution feasibility over an (H, p) grid and the recipe check at each feasible point."""

import argparse

import numpy as np

from roughwave.params import CLAIMED, check_system, feasibility_scan, feasible_point, scan_csv, strong_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h-count", type=int, default=24)
    ap.add_argument("--p-max", type=float, default=60.0)
    ap.add_argument("--p-step", type=float, default=0.5)
    ap.add_argument("--csv", default=None, help="write the full table here")
    args = ap.parse_args()

    hs = [float(round(h, 6)) for h in np.linspace(0.26, 0.49, args.h_count)]
    ps = [float(round(p, 6)) for p in np.arange(2.0, args.p_max + args.p_step / 2, args.p_step)]
    table, boundary = feasibility_scan(hs, ps)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(scan_csv(table))
    print("H,p_scan,p_theory,recipe_ok_at_p_scan")
    for h, b in boundary:
        ok = ""
        if b is not None:
            eps = min(1e-3, (h - 1 / b) / 100)
            try:
                pt = feasible_point(h, b, eps)
                ok = all(check_system(s, pt).passed for s in CLAIMED)
            except ValueError as exc:
                ok = f"fail: {exc}"
        print(f"{h},{'' if b is None else b},{strong_threshold(h):.6f},{ok}")


if __name__ == "__main__":
    main()
