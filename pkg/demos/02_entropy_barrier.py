"""How the singular entropy confines the order parameter.

Plots the entropy term along the uniaxial slice.  It is finite only for
scalar order s in (-1/2, 1) and blows up logarithmically at both ends,
which is what keeps every numerical solution inside the physical
eigenvalue range without any projection or clipping.  Adding the
quadratic ordering term tilts the landscape and moves the minimum from
s = 0 toward the nematic branch.
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qflow import ordered_s, uniaxial_energy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out/entropy_barrier")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    s = np.linspace(-0.499, 0.9995, 2000)

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    entropy_only = uniaxial_energy(s, 0.0)[0]
    ax0.plot(s, entropy_only, color="tab:purple")
    ax0.set_xlabel("s")
    ax0.set_ylabel("entropy term")
    ax0.set_title("barrier at s = -1/2 and s = 1")
    ax0.set_ylim(top=40)

    for c02 in (10.0, 13.5, 20.0, 30.0):
        f = uniaxial_energy(s, c02)[0]
        ax1.plot(s, f - f.min(), label=f"c02 = {c02:g}")
    ax1.set_xlabel("s")
    ax1.set_ylabel("bulk energy (shifted)")
    ax1.set_ylim(top=12)
    ax1.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(args.out, "barrier.svg")
    fig.savefig(path)
    print(f"wrote {path}")

    for c02 in (20.0, 50.0, 100.0):
        s2 = ordered_s(c02)
        print(f"c02 = {c02:5.1f}: minimizer s = {s2:.6f}, "
              f"largest eigenvalue 2s/3 = {2 * s2 / 3:.6f} (bound 2/3)")


if __name__ == "__main__":
    main()
