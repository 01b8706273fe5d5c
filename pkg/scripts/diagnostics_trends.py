"""Consistency, limit-conformity and coercivity indicators over four refinement levels."""
import argparse

from gdm_pme import diagnostics
from gdm_pme.experiments import build

MESHES = {"mlp1": ["tri:2", "tri:4", "tri:8", "tri:16"], "hmm": ["hex:2", "hex:4", "hex:8", "hex:16"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=2.0, help="exponent entering the L^(1+mhat) norm of S_D")
    args = ap.parse_args()
    for scheme, meshes in MESHES.items():
        print(scheme)
        for spec in meshes:
            gd = build(scheme, spec)
            s = diagnostics.consistency_defect(gd, *diagnostics.SCALAR_PROBES["bubble"], m=args.m)
            w = {k: diagnostics.limit_conformity_defect(gd, *v) for k, v in diagnostics.VECTOR_PROBES.items()}
            c = diagnostics.coercivity_constant(gd)
            print(f"  h={gd.h:.4f}  S={s:.3e}  W_shear={w['shear']:.3e}  W_swirl={w['swirl']:.3e}  C_D={c:.4f}")


if __name__ == "__main__":
    main()
