"""Leading eigenvalues of L + K and the Stokes response v_k, mode by mode.

    python3 scripts/spectrum_table.py --kmax 16 --n 128
"""

import argparse

from osmoflow.core import PhysParams
from osmoflow.linop import spectrum_report
from osmoflow.stokes import normal_velocity_response


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=16)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--show", type=int, default=3, help="eigenvalues listed per mode")
    args = ap.parse_args()

    prm = PhysParams()
    rep = spectrum_report(prm, n=args.n, k_max=args.kmax)
    print(f"kernel dimension {rep.kernel_dimension} {rep.kernel_by_mode}")
    print(f"gap {rep.gap:.6f}  max |Im| {rep.max_imag:.2e}  refinement delta {rep.refinement_delta:.2e}")
    print(f"{'k':>3} {'v_k':>12} {'v_k/k':>9}  leading eigenvalues")
    for k in range(0, args.kmax + 1):
        v = normal_velocity_response(k, prm)
        lead = ", ".join(f"{z.real:.5f}" for z in rep.modes[k].eigenvalues[:args.show])
        ratio = f"{v / k:9.4f}" if k else " " * 9
        print(f"{k:3d} {v:12.6f} {ratio}  {lead}")


if __name__ == "__main__":
    main()
