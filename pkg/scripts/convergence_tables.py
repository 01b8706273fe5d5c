"""h-sweeps with dt = h^2 for both schemes, slow and fast regimes.

Writes one CSV per (scheme, m) under ``--out`` and prints a compact table.
The finest HMM level dominates the runtime (about a minute per exponent).
"""
import argparse
import csv
from pathlib import Path

from gdm_pme.experiments import spatial_sweep

MESHES = {
    "mlp1": ["tri:6", "tri:12", "tri:24", "tri:48"],
    "hmm": ["hex:5", "hex:9", "hex:18", "hex:36"],
}
SLOW = [1.5, 2.0, 2.5, 3.0]
FAST = [0.3, 0.5, 0.7]
COLS = ["h", "dt", "ndof", "err_u", "rate_u", "err_beta", "rate_beta", "newton_avg", "newton_max", "wall"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--schemes", nargs="+", default=["mlp1", "hmm"])
    ap.add_argument("--ms", nargs="+", type=float, default=SLOW + FAST)
    ap.add_argument("--levels", type=int, default=4, help="number of mesh levels from the coarsest")
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for scheme in args.schemes:
        for m in args.ms:
            rows = spatial_sweep(scheme, MESHES[scheme][: args.levels], m)
            with open(out / f"{scheme}_m{m:g}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=COLS, extrasaction="ignore")
                w.writeheader()
                w.writerows(rows)
            print(f"{scheme} m={m:g}")
            for r in rows:
                ru = "" if r["rate_u"] is None else f"{r['rate_u']:.2f}"
                rb = "" if r["rate_beta"] is None else f"{r['rate_beta']:.2f}"
                print(f"  h={r['h']:.4f}  E_u={r['err_u']:.2e} {ru:>5}  E_beta={r['err_beta']:.2e} {rb:>5}"
                      f"  newton {r['newton_avg']:.2f}/{r['newton_max']}  {r['wall']:.1f}s")


if __name__ == "__main__":
    main()
