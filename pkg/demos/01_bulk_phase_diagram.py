"""Bifurcation diagram of the uniaxial bulk energy.

Sweeps the concentration parameter c02 and records every stationary
value of the scalar order parameter, colored by stability.  Two
thresholds organize the picture: below the first only the isotropic
state exists, between the two an ordered branch coexists with a still
stable isotropic state, and above the second the isotropic state is a
local maximum.
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qflow import CHI_DOUBLE_STAR, chi_star, stationary_points


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out/bulk_phase_diagram")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    c_star = chi_star()
    print(f"ordered branch appears at  c02 = {c_star:.6f}")
    print(f"isotropic state destabilizes at c02 = {CHI_DOUBLE_STAR}")

    style = {"min": ("tab:blue", "stable"), "max": ("tab:red", "unstable")}
    fig, ax = plt.subplots(figsize=(6, 4))
    seen = set()
    for c02 in np.linspace(8.0, 30.0, 221):
        rep = stationary_points(float(c02))
        for s, kind in zip(rep.roots, rep.kinds):
            color, label = style.get(kind, ("gray", kind))
            ax.plot(c02, s, ".", ms=3, color=color,
                    label=label if label not in seen else None)
            seen.add(label)
    for x, name in ((c_star, "branch point"), (CHI_DOUBLE_STAR, "exchange")):
        ax.axvline(x, color="k", lw=0.6, ls=":")
        ax.text(x, 0.92, f" {name}", fontsize=8, rotation=90, va="top")
    ax.set_xlabel("c02")
    ax.set_ylabel("stationary s")
    ax.legend(loc="center right", fontsize=8)
    fig.tight_layout()
    path = os.path.join(args.out, "phase_diagram.svg")
    fig.savefig(path)
    print(f"wrote {path}")

    rep = stationary_points(20.0)
    print(f"at c02 = 20 the branches sit at {np.round(rep.roots, 4)}"
          f" with kinds {rep.kinds}")


if __name__ == "__main__":
    main()
