"""dt-sweep at fixed h = 2^-7 for the MLP1 scheme (tri:181, whose cell diameter is sqrt(2)/181)."""
import argparse

from gdm_pme.experiments import temporal_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mesh", default="tri:181")
    ap.add_argument("--ms", nargs="+", type=float, default=[1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--dts", nargs="+", type=float, default=[1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64])
    args = ap.parse_args()
    for m in args.ms:
        print(f"m={m:g}")
        for r in temporal_sweep("mlp1", args.mesh, m, args.dts):
            rate = "" if r["rate_u"] is None else f"{r['rate_u']:.2f}"
            print(f"  dt={r['dt']:.5f}  E_u={r['err_u']:.3e} {rate:>5}  newton {r['newton_avg']:.2f}/{r['newton_max']}")


if __name__ == "__main__":
    main()
