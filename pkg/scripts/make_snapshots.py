"""Regenerate the regression snapshots in tests/data.

Run only after the identity suite passes (``overlap-lab verify``); the
snapshots lock shapes that have no closed-form oracle.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from overlap_lab import asymptotics
from overlap_lab.quad import integrate

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def edge_density_curve():
    zeta = np.linspace(-8.0, 4.0, 25)
    rho = [asymptotics.edge_density(float(z), 0.6) for z in zeta]
    return {"b": 0.6, "zeta": zeta.tolist(), "density": rho}


def bulk_t_integral():
    a, w = math.sqrt(2.0), 1.0

    def f(u):
        # t = u / (1 - u) maps (0, 1) onto (0, inf)
        t = u / (1 - u)
        return asymptotics.bulk_weak_jpdf(w, t, a) / (1 - u) ** 2

    value = integrate(f, 1e-300, 1.0 - 1e-15, None, [0.3, 0.6, 0.9])
    bridge = asymptotics.t_marginal(-64.0 * w, a / (8 * math.sqrt(2.0))) / 8.0
    return {"a": a, "w": w, "integral": value, "bridge_nu8": bridge}


def strong_curve():
    sigma = np.linspace(0.01, 3.0, 300)
    dens = asymptotics.strong_jpdf(delta=-0.5, sigma=sigma)
    return {"delta": -0.5, "sigma": sigma.tolist(), "density": dens.tolist(),
            "argmax": float(sigma[int(np.argmax(dens))]), "step": float(sigma[1] - sigma[0])}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DATA)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    snaps = {"edge_density_b06.json": edge_density_curve(),
             "bulk_t_integral.json": bulk_t_integral(),
             "strong_delta_m05.json": strong_curve()}
    for name, payload in snaps.items():
        (args.out / name).write_text(json.dumps(payload, indent=1) + "\n")
        print(f"wrote {args.out / name}")


if __name__ == "__main__":
    main()
