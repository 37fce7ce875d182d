"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from optofock import _kernels_py, fock
from optofock import dynamics as dyn
from optofock.calibration import first_zero
from optofock.model import SystemParams

try:
    from optofock import _kernels
except ImportError:
    _kernels = None


def cases():
    rho = fock.thermal_dm(0.3, 12)
    rho[10, 10] += 1.0
    rho /= np.trace(rho)
    q = np.linspace(-7, 7, 241)
    Q, P = np.meshgrid(q, q, indexing="ij")
    alphas = ((Q + 1j * P) / np.sqrt(2)).ravel()

    p = SystemParams.for_target(5, nbar_m=0.3, N_c=3)
    L = dyn.full_liouvillian(p.replace(gamma=1e-3 * p.kappa)).matrix
    y0 = dyn.vec(np.kron(fock.fock_dm(0, 3), fock.thermal_dm(0.3, 6))).astype(complex)
    times = np.linspace(0.0, 40.0 / p.kappa, 5)

    return {
        "displacement_block 40x40": lambda k: k.displacement_block(1.3 - 0.4j, 40, 40),
        "wigner_parity 241^2 grid, d=12": lambda k: k.wigner_parity(rho, alphas),
        "dopri5 two-mode M=5": lambda k: k.dopri5(L, y0, times, 1e-8, 1e-10, 10**7, 0.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases().items():
        best = {}
        for b, mod in backends.items():
            best[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{name:34s}" + "".join(f"{best[b]:11.4f}s" for b in backends) + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
