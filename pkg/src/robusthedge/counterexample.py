"""Numerical witness that pasting can leave the martingale family.

A measure is pasted from Gaussian kernels whose dispersion grows with the
band in which the intermediate spot lands.  Each band contributes at least 1
to the terminal absolute moment once its dispersion is chosen large enough,
so the pasted measure has infinite first moment.  The divergence table below
replicates that construction band by band.

Also here: the capped-ramp truncation family used to approximate
x -> |x| 1_{|x| > n} by bounded uniformly continuous functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
QUAD_TOL = 1e-10


class CounterexampleError(ValueError):
    pass


def _phi(y: float) -> float:
    return math.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)


def _Phi(y: float) -> float:
    return 0.5 * (1.0 + math.erf(y / math.sqrt(2.0)))


def gaussian_abs_mean(m: float) -> float:
    """E|Z + m| for standard normal Z, in closed form."""
    return m * (2.0 * _Phi(m) - 1.0) + 2.0 * _phi(m)


def band_mass(i: int) -> float:
    """Standard-normal mass of the two-sided band (-i-1,-i] u [i,i+1).

    Computed as a difference of tail masses (erfc): the direct Phi difference
    underflows to 0 already around i = 9 in double precision.
    """
    if i < 0:
        raise CounterexampleError("band index must be >= 0")
    rt2 = math.sqrt(2.0)
    return math.erfc(i / rt2) - math.erfc((i + 1.0) / rt2)


def f_band(i: int, sigma: float, t: float = 1.0) -> float:
    """Band contribution to the terminal absolute moment of the pasted measure.

    Normalized form: sigma times the outer-Gaussian band integral of
    E|Z + t*y/sigma|, the inner integral being closed form.  The band is
    symmetric and the integrand even, so only the positive half is computed.
    By Jensen the integrand is >= E|Z|, giving the substitution-independent
    lower bound sigma * sqrt(2/pi) * band_mass(i); divergence in sigma
    follows, which is all the construction needs.
    """
    if sigma <= 0:
        raise CounterexampleError("sigma must be positive")
    if t <= 0:
        raise CounterexampleError("t must be positive")
    if i < 0:
        raise CounterexampleError("band index must be >= 0")

    def integrand(y: float) -> float:
        return gaussian_abs_mean(t * y / sigma) * _phi(y)

    val, _err = quad(integrand, float(i), float(i + 1), epsabs=QUAD_TOL, limit=200)
    return sigma * 2.0 * val


def choose_sigma(i: int, t: float = 1.0, target: float = 1.0) -> float:
    """A dispersion whose band value lands in [target, 2*target].

    f_band(i, .) >= sigma * sqrt(2/pi) * band_mass(i), so the search starts
    at the sigma that bound already certifies (for deep bands this is
    astronomically large and plain doubling from 1 would never reach it),
    doubles until the quadrature confirms it, then bisects down 40 steps."""
    if target <= 0:
        raise CounterexampleError("target must be positive")
    w = band_mass(i)
    if w <= 0.0:
        raise CounterexampleError(
            f"band {i} mass underflows double precision; band index too deep"
        )
    sigma = max(1.0, target / (SQRT_2_OVER_PI * w))
    iters = 0
    while f_band(i, sigma, t) < target:
        sigma *= 2.0
        iters += 1
        if iters > 200:
            raise CounterexampleError(
                "divergence in sigma not observed; quadrature is suspect"
            )
    lo, hi = sigma / 2.0, sigma
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if f_band(i, mid, t) >= target:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DivergenceRow:
    i: int
    sigma: float
    f_value: float
    partial_sum: float


def divergence_demo(N: int, t: float = 1.0) -> list:
    """Band-by-band table showing the partial moment sums exceed N."""
    if N > 50:
        raise CounterexampleError("N > 50 exceeds the quadrature budget")
    rows, total = [], 0.0
    for i in range(N):
        sigma = choose_sigma(i, t)
        f = f_band(i, sigma, t)
        total += f
        rows.append(DivergenceRow(i=i, sigma=sigma, f_value=f, partial_sum=total))
    return rows


def phi_trunc(x: float, n: float, K: float, l: float) -> float:
    """Capped ramp approximation of |x| 1_{|x| > n}.

    (|x| ^ K) times a ramp rising from 0 at |x| = n to 1 at |x| = n + l; the
    product reading is the only one that stays bounded by both the cap and
    the target function.
    """
    if K <= 0 or l <= 0:
        raise CounterexampleError("K and l must be positive")
    if n < 0:
        raise CounterexampleError("n must be >= 0")
    a = abs(x)
    ramp = (max(a - n, 0.0) - max(a - n - l, 0.0)) / l
    return min(a, K) * ramp


def phi_limit(x: float, n: float) -> float:
    """Pointwise limit of phi_trunc as the cap grows and the ramp sharpens."""
    a = abs(x)
    return a if a > n else 0.0
