"""Dyadic block geometry on the modulation side and the case predictions.

A block D_{k,j} collects the points with xi in the one-sided ring
[2^{k-1}, 2^{k+1}] and modulation tau + xi^2 in the dyadic set I_j; the
reflected block negates both coordinates.  For a triple of blocks feeding
the restricted convolution, `classify` produces the predicted sup bound
and the support-constraint verdict.
"""

from dataclasses import dataclass

import numpy as np

# "comparable" means exponents within SIM, "much larger" means a gap above it.
SIM = 3

# Support constraints: the two largest frequency exponents must be within
# KMED_SLACK, and the largest modulation exponent must reach
# k_max + k_min - JMAX_SLACK, or the convolution misses the output block.
KMED_SLACK = 3
JMAX_SLACK = 10


@dataclass(frozen=True)
class BlockTriple:
    """Output block (k1, j1) fed by input blocks (k2, j2) and (k3, j3)."""

    k1: int
    j1: int
    k2: int
    j2: int
    k3: int
    j3: int

    def __post_init__(self):
        if min(self.j1, self.j2, self.j3) < 0:
            raise ValueError("modulation exponents must be nonnegative")

    @property
    def ks(self):
        return (self.k1, self.k2, self.k3)

    @property
    def js(self):
        return (self.j1, self.j2, self.j3)

    def key(self):
        return (self.k1, self.j1, self.k2, self.j2, self.k3, self.j3)


@dataclass(frozen=True)
class CasePrediction:
    feasible: bool
    case_label: str  # "i", "ii", "iii" or "zero"
    predicted: float


@dataclass
class MeasuredNorm:
    value: float
    iterations: int
    restarts: int
    converged: bool
    grid_density: tuple  # points per unit actually used, (xi, tau)


def support_feasible(t: BlockTriple) -> bool:
    ks = sorted(t.ks)
    if ks[2] - ks[1] > KMED_SLACK:
        return False
    if max(t.js) < ks[2] + ks[0] - JMAX_SLACK:
        return False
    return True


def classify(t: BlockTriple) -> CasePrediction:
    """Predicted bound for the restricted convolution over the triple.

    Case (i): all frequency scales comparable and the top modulation sits at
    the resonance scale N_max * N_min; bound L_min^{1/2} L_med^{1/4}.
    Case (ii): two legs share a comparable frequency scale far above the
    third, and that lone low-frequency leg carries the resonance-scale top
    modulation; bound L_min^{1/2} L_med^{1/2} N_min^{-1/2}.  The pairing is
    invariant under permuting its legs (the duality exchange), so the
    low-frequency slot may sit in any of the three positions.
    Case (iii): everything else; bound
    L_min^{1/2} N_max^{-1/2} min(N_max N_min, L_med)^{1/2}.
    Ties resolve with precedence (i) > (ii) > (iii).
    """
    if not support_feasible(t):
        return CasePrediction(False, "zero", 0.0)

    ks = sorted(t.ks)
    js = sorted(t.js)
    k_min, k_max = ks[0], ks[2]
    j_min, j_med, j_max = js

    resonant_top = abs(j_max - (k_max + k_min)) <= SIM

    if k_max - k_min <= SIM and resonant_top:
        return CasePrediction(True, "i", 2.0 ** (j_min / 2.0 + j_med / 4.0))

    if resonant_top and k_max - k_min > SIM:
        pairs = ((t.k1, t.j1, t.k2, t.k3), (t.k2, t.j2, t.k1, t.k3), (t.k3, t.j3, t.k1, t.k2))
        for k_lo, j_lo, ka, kb in pairs:
            if abs(ka - kb) <= SIM and k_lo == k_min and j_lo == j_max:
                return CasePrediction(
                    True, "ii", 2.0 ** (j_min / 2.0 + j_med / 2.0 - k_min / 2.0)
                )

    pred = 2.0 ** (j_min / 2.0 - k_max / 2.0) * np.sqrt(min(2.0 ** (k_max + k_min), 2.0**j_med))
    return CasePrediction(True, "iii", float(pred))


def modulation_interval(j: int):
    """Absolute modulation range of the j-th shell: a ball for j = 0."""
    if j == 0:
        return (0.0, 2.0)
    return (2.0 ** (j - 1), 2.0 ** (j + 1))


def block_region(k: int, j: int, density: float, reflected=False, max_points=2_000_000):
    """Dual-lattice points of the block at the given points-per-unit density.

    Returns an (n, 2) array of (xi, tau) pairs on the lattice with spacing
    1/density in both coordinates.  The reflected flag negates both axes.
    """
    if j < 0:
        raise ValueError("j must be nonnegative")
    if density <= 0:
        raise ValueError("density must be positive")
    step = 1.0 / density
    xi_lo, xi_hi = 2.0 ** (k - 1), 2.0 ** (k + 1)
    a_lo = int(np.ceil(xi_lo / step - 1e-12))
    a_hi = int(np.floor(xi_hi / step + 1e-12))
    if a_hi < a_lo:
        raise ValueError(
            f"block k={k}, j={j} is empty at density {density}; use a finer density"
        )
    xi = np.arange(a_lo, a_hi + 1) * step

    lo, hi = modulation_interval(j)
    pts_xi = []
    pts_tau = []
    for x in xi:
        if j == 0:
            lo_t, hi_t = -x * x - hi, -x * x + hi
            b = np.arange(int(np.ceil(lo_t / step - 1e-12)), int(np.floor(hi_t / step + 1e-12)) + 1)
            taus = b * step
        else:
            taus = []
            for sgn in (-1.0, 1.0):
                lo_t, hi_t = -x * x + sgn * hi, -x * x + sgn * lo
                if sgn > 0:
                    lo_t, hi_t = -x * x + lo, -x * x + hi
                b = np.arange(int(np.ceil(lo_t / step - 1e-12)), int(np.floor(hi_t / step + 1e-12)) + 1)
                taus.append(b * step)
            taus = np.concatenate(taus)
        pts_xi.append(np.full(taus.shape, x))
        pts_tau.append(taus)
        if sum(p.size for p in pts_tau) > max_points:
            raise ValueError(f"block k={k}, j={j} exceeds {max_points} lattice points")
    out = np.column_stack([np.concatenate(pts_xi), np.concatenate(pts_tau)])
    if out.shape[0] == 0:
        raise ValueError(f"block k={k}, j={j} is empty at density {density}; use a finer density")
    if reflected:
        out = -out
    return out


def resonance_defect(xi1, tau1, xi2, tau2):
    """Defect of (tau'+xi^2) - (tau1+xi1^2) - (tau2-xi2^2) = 2 xi xi2.

    xi = xi1 + xi2 and tau' = tau1 + tau2; identically zero in exact
    arithmetic, so the return value is pure floating-point noise.
    """
    xi1 = np.asarray(xi1, dtype=float)
    tau1 = np.asarray(tau1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    xi = xi1 + xi2
    taup = tau1 + tau2
    lhs = (taup + xi**2) - (tau1 + xi1**2) - (tau2 - xi2**2)
    return lhs - 2.0 * xi * xi2
