"""Regenerate the synthetic k(r) tables shipped in the package data.

No k(r) measurements are published, so each table is a power law
k = k_c (r / r_c)^p sampled on the measured range [0.1, 1.1] m.  k_c = v^2 / r_c
puts the circular orbit at the chosen radius; p sets the precession.
"""
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "membrane_orbits" / "data" / "profiles"

# name: (depression D in m, speed v, circular radius r_c, exponent p, note)
TABLES = {
    "D13.9": (0.139, 0.309, 0.60, 0.40, "heavy vehicle"),
    "D9.6": (0.096, 0.286, 0.70, 0.35, "heavy vehicle"),
    "D5.3": (0.053, 0.295, 0.85, 0.30, "heavy vehicle"),
    "light_D17": (0.170, 0.25, 0.45, -0.186, "light vehicle, prograde"),
}


def main():
    r = np.round(np.arange(0.1, 1.1 + 1e-9, 0.025), 4)
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (D, v, rc, p, note) in TABLES.items():
        k = v * v / rc * (r / rc) ** p
        with open(OUT / f"{name}.csv", "w") as fh:
            fh.write(f"# synthetic stand-in, not measured data ({note})\n")
            fh.write(f"# D={D} m, v={v} m/s, r_c={rc} m, k=k_c (r/r_c)^{p}\n")
            fh.write("r_m,k_mps2\n")
            for ri, ki in zip(r, k):
                fh.write(f"{ri:.4f},{ki:.8f}\n")


if __name__ == "__main__":
    main()
