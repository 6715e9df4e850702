"""Phonon-driven self-discharge: decay time against temperature, bias and tunnelling."""

import argparse
from pathlib import Path

from dqdbattery import PhononParams, QubitHamiltonian, self_discharge_sweep

SWEEPS = {
    "kT": (0.5, 1.0, 2.0),
    "epsilon": (1.0, 2.0, 4.0, 8.0),
    "tc": (1.0, 0.5, 0.25),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--g", type=float, default=4e-4)
    ap.add_argument("--omega-c", type=float, default=500.0)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    h = QubitHamiltonian(1.0, 1.0)
    phonons = PhononParams(g=args.g, omega_c=args.omega_c, beta=1.0)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for axis, values in SWEEPS.items():
        res = self_discharge_sweep(axis, values, h, phonons, workers=args.workers)
        (args.outdir / f"sweep_{axis}.csv").write_text(res.to_csv(), encoding="utf-8")
        (args.outdir / f"sweep_{axis}_curves.csv").write_text(res.curves_to_csv(), encoding="utf-8")
        print(f"{axis}: " + ", ".join(f"{p.param_value:g} -> {p.decay_time:.1f}" for p in res.points))


if __name__ == "__main__":
    main()
