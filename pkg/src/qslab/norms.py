"""Dyadic modulation norms and the resolution-space norm on grid fields.

X_k weighs the modulation shells of one frequency shell with 2^{j/2} and
sums them l1-style; the resolution norm combines weighted X_k norms in l2
over high shells with a plain sup-in-time L2 norm of the low-frequency
part.  Spectral L2 quantities carry the dual cell measure dxi*dtau on the
raw spectral arrays; modulation is always the wrapped tau + xi^2 of the
grid (see spacetime.PhaseGrid.wrap_modulation).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .lp_frame import eta0, eta_k
from .spacetime import PHYSICAL, SPECTRAL, Field, InitialData, from_spectral, project_low, to_spectral

SHELL_MASS_TOL = 1e-10
TAIL_FRACTION = 1e-8


@dataclass
class NormBreakdown:
    """Total plus per-shell contributions of one norm evaluation."""

    space: str
    s: float
    total: float
    shells: list = field(default_factory=list)  # (k, j, value); None marks an unused slot
    tail: float = 0.0

    def to_json(self):
        return json.dumps(
            {
                "space": self.space,
                "s": self.s,
                "total": self.total,
                "tail": self.tail,
                "shells": [{"k": k, "j": j, "value": v} for (k, j, v) in self.shells],
            },
            sort_keys=True,
        )


def _spectral_l2(grid, vals):
    """L2 with the dual cell measure dxi*dtau."""
    return float(np.sqrt(grid.dxi * grid.dtau) * np.linalg.norm(vals))


def _shell_mask(grid, k):
    axi = np.abs(grid.xi)
    if k == 0:
        return axi <= 2.0
    return (axi >= 2.0 ** (k - 1)) & (axi <= 2.0 ** (k + 1))


def default_j_max(grid):
    """Smallest j whose plateau covers the wrapped modulation range."""
    return max(1, int(np.ceil(np.log2(grid.tau_max / 1.25))))


def xk_norm(f: Field, k: int, j_max=None) -> NormBreakdown:
    """Modulation-shell norm sum_j 2^{j/2} |eta_j(tau + xi^2) f|_2 on shell k.

    f must be spectral and supported (up to mass fraction 1e-10) in the
    frequency shell.  The j = 0 term uses eta0.  Mass beyond j_max is
    reported as the tail and must stay below 1e-8 of the total.
    """
    if f.domain != SPECTRAL:
        raise ValueError("xk_norm expects a spectral field")
    grid = f.grid
    if j_max is None:
        j_max = default_j_max(grid)

    total_mass = _spectral_l2(grid, f.values)
    if total_mass > 0.0:
        outside = ~_shell_mask(grid, k)
        off = _spectral_l2(grid, f.values[outside, :])
        frac = (off / total_mass) ** 2
        if frac > SHELL_MASS_TOL:
            raise ValueError(
                f"spectral mass fraction {frac:.3e} lies outside shell k={k} "
                f"(tolerance {SHELL_MASS_TOL:.0e})"
            )

    rows = np.nonzero(_shell_mask(grid, k))[0]
    sig = grid.wrap_modulation(grid.tau[None, :] + grid.xi[rows, None] ** 2)
    vals = f.values[rows, :]
    shells = []
    total = 0.0
    for j in range(0, j_max + 1):
        wj = eta0(sig) if j == 0 else eta_k(sig, j)
        val = 2.0 ** (j / 2.0) * _spectral_l2(grid, wj * vals)
        shells.append((k, j, val))
        total += val

    tail = _spectral_l2(grid, (1.0 - eta0(sig / 2.0**j_max)) * vals)
    bd = NormBreakdown("Xk", float("nan"), total, shells, tail)
    if total > 0.0 and tail > TAIL_FRACTION * total:
        raise ValueError(f"modulation tail {tail:.3e} exceeds {TAIL_FRACTION:.0e} of total {total:.3e}")
    return bd


def linf_l2_norm(u: Field) -> float:
    """Max over time slices of the spatial L2 norm (physical measure)."""
    w = u.values if u.domain == PHYSICAL else from_spectral(u).values
    slice_norms = np.sqrt(u.grid.dx * np.sum(np.abs(w) ** 2, axis=0))
    return float(np.max(slice_norms))


def _fbar_shell_range(grid):
    """High shells 1..K with the telescoped cover reaching the Nyquist ring."""
    return range(1, max(2, int(np.ceil(np.log2(grid.xi_max / 1.25)))) + 1)


def fbar_norm(u: Field, s: float) -> NormBreakdown:
    """Resolution-space norm: l2 over k >= 1 of 2^{sk} X_k plus low-part sup-L2.

    total^2 = sum_k 2^{2sk} |eta_k(xi) F(u)|_{X_k}^2 + |P_{<=0} u|_{LinfL2}^2.
    """
    if not (-0.75 <= s <= 0.0):
        raise ValueError(f"s = {s} outside the admissible range [-3/4, 0]")
    phys = u if u.domain == PHYSICAL else from_spectral(u)
    spec = to_spectral(phys) if u.domain == PHYSICAL else u
    grid = u.grid

    shells = []
    acc = 0.0
    j_max = default_j_max(grid)
    for k in _fbar_shell_range(grid):
        ek = eta_k(grid.xi, k)
        rows = np.nonzero(ek)[0]
        if rows.size == 0:
            shells.append((k, None, 0.0))
            continue
        g = ek[rows, None] * spec.values[rows, :]
        if not np.any(g):
            shells.append((k, None, 0.0))
            continue
        sig = grid.wrap_modulation(grid.tau[None, :] + grid.xi[rows, None] ** 2)
        xk_total = 0.0
        for j in range(0, j_max + 1):
            wj = eta0(sig) if j == 0 else eta_k(sig, j)
            xk_total += 2.0 ** (j / 2.0) * _spectral_l2(grid, wj * g)
        contrib = 2.0 ** (s * k) * xk_total
        shells.append((k, None, contrib))
        acc += contrib**2

    low = linf_l2_norm(project_low(phys, 0))
    shells.append((None, None, low))
    total = float(np.sqrt(acc + low**2))
    return NormBreakdown("Fbar", s, total, shells)


def hs_norm(phi: InitialData, s: float) -> float:
    """Sobolev norm |<xi>^s phi_hat|_{L2(dxi)} with the symmetric transform.

    Calibrated so that s = 0 reproduces the physical L2 norm exactly.
    """
    grid = phi.grid
    phat = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(phi.values))) * grid.dx / np.sqrt(2.0 * np.pi)
    weight = (1.0 + grid.xi**2) ** (s / 2.0)
    return float(np.sqrt(grid.dxi * np.sum(np.abs(weight * phat) ** 2)))


def l1tau_l2xi_norm(f: Field) -> float:
    """Mixed norm dtau * sum_tau (dxi * sum_xi |f|^2)^{1/2} of a spectral field."""
    if f.domain != SPECTRAL:
        raise ValueError("l1tau_l2xi_norm expects a spectral field")
    grid = f.grid
    col = np.sqrt(grid.dxi * np.sum(np.abs(f.values) ** 2, axis=0))
    return float(grid.dtau * np.sum(col))
