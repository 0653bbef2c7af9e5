"""Smooth dyadic cutoffs and the time window.

The base bump ``eta0`` is even, equal to 1 on [-5/4, 5/4] and supported in
[-8/5, 8/5].  Ring cutoffs ``eta_k`` telescope it into a dyadic partition of
unity; the time window ``psi`` reuses the same profile.  Everything here is a
pure function of its arguments.
"""

from dataclasses import dataclass

import numpy as np

INNER_PLATEAU = 1.25
OUTER_SUPPORT = 1.6


def _smooth_step(r, sharpness=1.0):
    """C-infinity step: 0 for r <= 0, 1 for r >= 1, strictly monotone between.

    Built from exp(-a/r) / (exp(-a/r) + exp(-a/(1-r))); every derivative
    vanishes at both ends, so gluing it to the plateaus stays smooth.
    """
    r = np.asarray(r, dtype=float)
    lo = r <= 0.0
    hi = r >= 1.0
    mid = ~(lo | hi)
    out = np.empty_like(r)
    out[lo] = 0.0
    out[hi] = 1.0
    rm = r[mid]
    a = np.exp(-sharpness / rm)
    b = np.exp(-sharpness / (1.0 - rm))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Even bump: 1 on [-inner, inner], 0 outside [-outer, outer]."""

    inner_plateau: float = INNER_PLATEAU
    outer_support: float = OUTER_SUPPORT
    transition_sharpness: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.inner_plateau < self.outer_support):
            raise ValueError("need 0 < inner_plateau < outer_support")
        if self.transition_sharpness <= 0.0:
            raise ValueError("transition_sharpness must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = (np.abs(x) - self.inner_plateau) / (self.outer_support - self.inner_plateau)
        return 1.0 - _smooth_step(r, self.transition_sharpness)


_DEFAULT = CutoffProfile()


def eta0(x):
    """Base cutoff: even, smooth, 1 on [-5/4, 5/4], 0 outside [-8/5, 8/5]."""
    return _DEFAULT(x)


def eta_k(xi, k):
    """Dyadic ring cutoff eta0(xi/2^k) - eta0(xi/2^(k-1)) for k >= 1.

    k = 0 returns the low cutoff eta0 itself; k <= -1 is identically zero.
    """
    xi = np.asarray(xi, dtype=float)
    if k <= -1:
        return np.zeros_like(xi)
    if k == 0:
        return eta0(xi)
    return eta0(xi / 2.0**k) - eta0(xi / 2.0 ** (k - 1))


def psi(t):
    """Unit time window; same profile as eta0."""
    return eta0(t)


def partition_defect(xi_samples, k_max):
    """Max defect of the telescoped frame over the samples.

    eta0 + sum_{k=1..k_max} eta_k telescopes to eta0(xi / 2^k_max) pointwise,
    so the return value is zero up to roundoff.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    xi = np.asarray(xi_samples, dtype=float)
    acc = eta0(xi)
    for k in range(1, k_max + 1):
        acc = acc + eta_k(xi, k)
    return float(np.max(np.abs(acc - eta0(xi / 2.0**k_max))))


def fourth_difference(f, x, h=1e-3):
    """Central 4th difference quotient of f at x; bounded iff f has no kink.

    Used by the sampled-smoothness checks: a C^4 profile keeps this uniformly
    bounded as h shrinks, a corner makes it blow up like 1/h^3.
    """
    x = np.asarray(x, dtype=float)
    num = f(x - 2 * h) - 4 * f(x - h) + 6 * f(x) - 4 * f(x + h) + f(x + 2 * h)
    return num / h**4
