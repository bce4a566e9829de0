"""Two singular potentials, one divergence mechanism.

The entropy term used by the solver is an explicit log-determinant
barrier.  The classical alternative defines the entropy implicitly
through a Bingham density on the sphere, inverting a moment map by
quadrature for every evaluation.  Both blow up as the uniaxial state
approaches the physical bound s = 1; this script pushes a sequence of
states toward that bound and compares the divergence rates.
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qflow import solve_b, uniaxial, eigenvalues, uniaxial_energy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out/bingham_vs_barrier")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    dists = 10.0 ** -np.arange(1, 5, dtype=float)
    psis, qs = [], []
    mu0 = None
    for dist in dists:
        s = 1.0 - 3.0 * dist  # smallest eigenvalue sits at dist above -1/3
        lam = eigenvalues(uniaxial(np.asarray(s), [0.0, 0.0, 1.0]))
        state = solve_b(lam, n_theta=1024, n_phi=64, mu0=mu0)
        mu0 = state.mu  # warm start the next, harder inversion
        psis.append(state.psi)
        qs.append(uniaxial_energy(s, 0.0)[0])
        print(f"dist {dist:.0e}:  bingham entropy {psis[-1]:8.4f}   "
              f"log-det barrier {qs[-1]:8.4f}")

    x = -np.log(dists)
    slope_psi = np.polyfit(x, psis, 1)[0]
    slope_q = np.polyfit(x, qs, 1)[0]
    print(f"divergence rates per unit -ln(dist): bingham {slope_psi:.3f}, "
          f"barrier {slope_q:.3f}, ratio {slope_q / slope_psi:.3f}")
    print("both are logarithmic in the distance to the bound; the barrier "
          "is steeper by a bounded factor, so it confines at least as well")

    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(x, psis, "o-", label="bingham entropy")
    ax.plot(x, qs, "s-", label="log-det barrier")
    ax.set_xlabel("-ln(distance to the eigenvalue bound)")
    ax.set_ylabel("potential value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(args.out, "divergence.svg")
    fig.savefig(path)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
