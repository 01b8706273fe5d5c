"""Front distance of the discrete and exact solutions at the final time, h = dt = 2^-7."""
import argparse

from gdm_pme.experiments import front_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scheme", default="mlp1")
    ap.add_argument("--mesh", default="tri:181")
    ap.add_argument("--dt", type=float, default=2**-7)
    ap.add_argument("--ms", nargs="+", type=float, default=[2.0, 2.2, 2.5, 2.7, 3.0])
    ap.add_argument("--threshold", type=float, default=1e-6)
    args = ap.parse_args()
    rows = front_study(args.scheme, args.mesh, args.ms, args.dt, threshold_rel=args.threshold)
    print(f"{'m':>4} {'d_u':>8} {'d_uB':>8} {'rel':>7}")
    for r in rows:
        print(f"{r['m']:4.1f} {r['d_u']:8.4f} {r['d_uB']:8.4f} {100 * r['rel_err']:6.2f}%")


if __name__ == "__main__":
    main()
