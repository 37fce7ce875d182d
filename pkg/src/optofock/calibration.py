"""Coupling calibration from the zeros of associated Laguerre polynomials.

The target phonon number ``M`` is selected by choosing the scaled coupling
``eta = g / omega_m`` so that ``L_M^(1)(eta^2) = 0``. With the single-photon
blue-sideband resonance ``Delta + g eta = s omega_m`` this also fixes the pump
detuning.
"""

from dataclasses import dataclass
from math import sqrt

MAX_DEGREE = 200


class CalibrationError(RuntimeError):
    pass


def laguerre(n, k, x):
    """Associated Laguerre polynomial L_n^(k)(x) by the three-term recurrence."""
    if n < 0 or k < 0:
        raise ValueError("degree and order must be nonnegative")
    if n > MAX_DEGREE:
        raise ValueError(f"degree {n} above the supported {MAX_DEGREE}")
    if n == 0:
        return 1.0
    prev, cur = 1.0, 1.0 + k - x
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    return cur


@dataclass(frozen=True)
class CalibrationResult:
    M: int
    x_star: float
    eta: float
    delta_eta: float
    detuning: float
    s: int = 1
    residual: float = 0.0

    @property
    def g(self):
        """Single-photon coupling in units of omega_m."""
        return self.eta


def _scan_step(M):
    return 0.01 if M > 40 else 0.05


def _bisect(f, lo, hi):
    flo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def laguerre_zero(M, k=1, index=0):
    """The ``index``-th positive zero (0 = smallest) of L_M^(k)."""
    if not 1 <= M <= MAX_DEGREE:
        raise ValueError(f"M must lie in 1..{MAX_DEGREE}")
    if not 0 <= index < M:
        raise ValueError(f"L_{M}^({k}) has {M} positive zeros; index {index} out of range")

    def f(x):
        return laguerre(M, k, x)

    step = _scan_step(M)
    # all zeros of L_M^(k) lie below 2M + k + (M-1)sqrt(M+k) (Szego-type bound)
    x_max = 2 * M + k + 2 + (M - 1) * sqrt(M + k)
    lo, flo, found = 0.0, f(0.0), -1
    while lo < x_max:
        hi = lo + step
        fhi = f(hi)
        if fhi == 0.0 or (fhi > 0) != (flo > 0):
            found += 1
            if found == index:
                return hi if fhi == 0.0 else _bisect(f, lo, hi)
        lo, flo = hi, fhi
    raise CalibrationError(f"zero {index} of L_{M}^({k}) not bracketed below {x_max:.1f}")


def sideband_detuning(s, eta):
    """Pump detuning Delta / omega_m = s - eta^2 (from Delta + g eta = s omega_m)."""
    return s - eta**2


def first_zero(M, s=1, index=0):
    """Calibrate the coupling that makes |M> dark; see :class:`CalibrationResult`."""
    if not 1 <= M <= 100:
        raise ValueError("M must lie in 1..100")
    x = laguerre_zero(M, 1, index)
    eta = sqrt(x)
    x_next = laguerre_zero(M + 1, 1, min(index, M))
    return CalibrationResult(
        M=M,
        x_star=x,
        eta=eta,
        delta_eta=abs(sqrt(x_next) - eta),
        detuning=sideband_detuning(s, eta),
        s=s,
        residual=abs(laguerre(M, 1, x)),
    )


def eta_spacing(M):
    return first_zero(M).delta_eta


def calibration_table(M_max, s=1):
    if not 1 <= M_max <= 40:
        raise ValueError("M_max must lie in 1..40")
    return [first_zero(M, s=s) for M in range(1, M_max + 1)]
