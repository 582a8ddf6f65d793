#!/usr/bin/env python3
"""Print the lowest excitation band versus block size at chosen momenta.

Direct API driver for quick interactive use; the CSV-emitting equivalent is
``quasix converge``.
"""

import argparse
import math
import time

from quasix.models import aklt_projector
from quasix.mps import ExcitationAnsatz, aklt_tensor, excitation_energies


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lmax", type=int, default=5)
    ap.add_argument("--momenta", default="0.6,0.8,1.0",
                    help="comma-separated momenta in units of pi")
    args = ap.parse_args()
    momenta = [float(x) * math.pi for x in args.momenta.split(",")]

    A = aklt_tensor()
    h = aklt_projector()
    prev = {}
    for ell in range(1, args.lmax + 1):
        t0 = time.time()
        ans = ExcitationAnsatz(A, ell, h)
        line = [f"l={ell}"]
        for p in momenta:
            e, _ = excitation_energies(ans.norm_matrix(p),
                                       ans.hamiltonian_matrix(p))
            tag = f"{e[0]:.10f}"
            if p in prev:
                tag += f" (-{prev[p] - e[0]:.2e})"
            prev[p] = e[0]
            line.append(f"E({p / math.pi:.2f}pi)={tag}")
        line.append(f"[{time.time() - t0:.1f}s]")
        print("  ".join(line), flush=True)


if __name__ == "__main__":
    main()
