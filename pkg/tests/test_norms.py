import numpy as np
import pytest
from scipy.integrate import quad

from qslab.lp_frame import eta_k, psi
from qslab.norms import (
    default_j_max,
    fbar_norm,
    hs_norm,
    l1tau_l2xi_norm,
    linf_l2_norm,
    xk_norm,
)
from qslab.spacetime import (
    Field,
    InitialData,
    PhaseGrid,
    free_evolve,
    initial_from_spectral,
    to_spectral,
)


@pytest.fixture
def grid():
    return PhaseGrid(nx=256, nt=256, xlen=8 * np.pi, tlen=8.0)


def _shell_mask(grid, k):
    return ((np.abs(grid.xi) >= 2.0 ** (k - 1)) & (np.abs(grid.xi) <= 2.0 ** (k + 1)))[:, None]


def _normalized(grid, arr):
    return arr / (np.sqrt(grid.dxi * grid.dtau) * np.linalg.norm(arr))


def test_xk_single_low_shell_indicator(grid):
    k = 3
    sig = grid.modulation()
    f = (_shell_mask(grid, k) & (np.abs(sig) <= 1.0)).astype(complex)
    bd = xk_norm(Field(grid, "spectral", _normalized(grid, f)), k)
    assert bd.total == pytest.approx(1.0, rel=0.05)
    assert bd.tail <= 1e-8


def test_xk_single_high_shell_scaling(grid):
    k = 3
    sig = grid.modulation()
    f = (_shell_mask(grid, k) & (eta_k(sig, 4) >= 1.0 - 1e-12)).astype(complex)
    bd = xk_norm(Field(grid, "spectral", _normalized(grid, f)), k)
    assert 4.0 <= bd.total <= 4.0 * 1.5


def test_xk_windowed_free_wave_uniform():
    grid = PhaseGrid(nx=512, nt=128, xlen=4 * np.pi, tlen=8.0)
    rng = np.random.default_rng(0)
    totals = []
    for k in range(2, grid.k_grid + 1):
        coeff = np.where(
            (np.abs(grid.xi) >= 2.0 ** (k - 1) * 1.25) & (np.abs(grid.xi) <= 2.0**k * 1.25),
            rng.standard_normal(grid.nx) + 1j * rng.standard_normal(grid.nx),
            0.0,
        )
        phi = initial_from_spectral(grid, coeff)
        phi = InitialData(grid, phi.values / phi.l2())
        u = free_evolve(phi)
        u = Field(grid, "physical", u.values * psi(grid.t)[None, :])
        spec = to_spectral(u)
        shell = Field(grid, "spectral", np.where(_shell_mask(grid, k), spec.values, 0.0))
        totals.append(xk_norm(shell, k).total)
    totals = np.array(totals)
    # one constant across shells: spread within a factor 1.5
    assert totals.max() / totals.min() <= 1.5


def test_xk_support_contract(grid):
    f = np.ones((grid.nx, grid.nt), dtype=complex)
    with pytest.raises(ValueError, match="mass fraction"):
        xk_norm(Field(grid, "spectral", f), 3)
    with pytest.raises(ValueError):
        xk_norm(Field(grid, "physical", f), 3)


def test_fbar_low_frequency_collapse(grid):
    vals = np.outer(np.exp(-grid.x**2), np.exp(-grid.t**2)).astype(complex)
    spec = to_spectral(Field(grid, "physical", vals))
    cut = np.where((np.abs(grid.xi) <= 0.6)[:, None], spec.values, 0.0)
    from qslab.spacetime import from_spectral

    u = from_spectral(Field(grid, "spectral", cut))
    bd = fbar_norm(u, -0.25)
    low = linf_l2_norm(u)
    # strictly low-frequency content: the norm collapses to the sup-L2 part
    assert bd.total == pytest.approx(low, rel=1e-9)


def test_fbar_single_shell_matches_weighted_xk(grid):
    k = 3
    sig = grid.modulation()
    f = np.where(
        (eta_k(np.abs(grid.xi), k) >= 1.0 - 1e-12)[:, None] & (np.abs(sig) <= 1.0),
        1.0 + 0.0j,
        0.0,
    )
    f = _normalized(grid, f)
    fld = Field(grid, "spectral", f)
    s = -0.25
    bd = fbar_norm(fld, s)
    xk = xk_norm(Field(grid, "spectral", f), k)
    assert bd.total == pytest.approx(2.0 ** (s * k) * xk.total, rel=0.25)


def test_fbar_range_contract(grid):
    u = Field(grid, "physical", np.zeros((grid.nx, grid.nt), dtype=complex))
    with pytest.raises(ValueError):
        fbar_norm(u, 0.5)
    with pytest.raises(ValueError):
        fbar_norm(u, -1.0)


def test_fbar_linf_hs_embedding(grid):
    rng = np.random.default_rng(7)
    s = -0.25
    for _ in range(10):
        spec = np.where(
            (np.abs(grid.xi) <= 24.0)[:, None] & (np.abs(grid.tau) <= 30.0)[None, :],
            rng.standard_normal((grid.nx, grid.nt)) + 1j * rng.standard_normal((grid.nx, grid.nt)),
            0.0,
        )
        u = Field(grid, "spectral", spec)
        bd = fbar_norm(u, s)
        from qslab.spacetime import from_spectral

        phys = from_spectral(u)
        weights = (1.0 + grid.xi**2) ** (s / 2.0)
        linf_hs = 0.0
        for j in range(grid.nt):
            col = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(phys.values[:, j]), norm="ortho"))
            linf_hs = max(linf_hs, np.sqrt(grid.dx * np.sum(np.abs(weights * col) ** 2)))
        assert linf_hs <= 3.0 * bd.total


def test_hs_plancherel_calibration():
    grid = PhaseGrid(nx=1024, nt=8, xlen=64 * np.pi, tlen=8.0)
    phat = ((grid.xi >= 0.0) & (grid.xi < 1.0)).astype(complex)
    raw = np.fft.ifftshift(phat) / (grid.dx / np.sqrt(2 * np.pi))
    phi = InitialData(grid, np.fft.fftshift(np.fft.ifft(raw)))
    assert hs_norm(phi, 0.0) == pytest.approx(1.0, abs=1e-9)
    exact = np.sqrt(quad(lambda q: (1 + q**2) ** -0.25, 0.0, 1.0)[0])
    got = hs_norm(phi, -0.25)
    assert got == pytest.approx(exact, rel=2e-3)
    assert 2.0**-0.125 < got < 1.0
    assert hs_norm(InitialData(grid, np.zeros(grid.nx)), -0.25) == 0.0


def test_hs_matches_l2_at_zero(grid):
    rng = np.random.default_rng(11)
    phi = InitialData(grid, rng.standard_normal(grid.nx) + 1j * rng.standard_normal(grid.nx))
    assert hs_norm(phi, 0.0) == pytest.approx(phi.l2(), rel=1e-12)


def test_l1tau_l2xi_point_mass(grid):
    f = np.zeros((grid.nx, grid.nt), dtype=complex)
    f[130, 100] = 3.7
    got = l1tau_l2xi_norm(Field(grid, "spectral", f))
    assert got == pytest.approx(grid.dtau * np.sqrt(grid.dxi) * 3.7, rel=1e-12)


def test_l1tau_l2xi_controlled_by_xk_for_concentrated_rows(grid):
    # a single dual time row stays within the stated overlap slack
    k = 3
    rng = np.random.default_rng(5)
    f = np.zeros((grid.nx, grid.nt), dtype=complex)
    rows = np.nonzero(_shell_mask(grid, k)[:, 0])[0]
    f[rows, 77] = rng.standard_normal(rows.size) + 1j * rng.standard_normal(rows.size)
    fld = Field(grid, "spectral", f)
    assert l1tau_l2xi_norm(fld) <= 1.1 * xk_norm(fld, k).total


def test_l1tau_l2xi_row_spreading_growth(grid):
    # equal mass on M rows grows like sqrt(M) against the concentrated case
    k = 3
    rows = np.nonzero(_shell_mask(grid, k)[:, 0])[0]
    base = np.zeros((grid.nx, grid.nt), dtype=complex)
    base[rows, 100] = 1.0
    vals = {}
    for m in (1, 4, 16):
        f = np.zeros_like(base)
        for c in range(m):
            f[rows, 90 + c] = 1.0 / np.sqrt(m)
        vals[m] = l1tau_l2xi_norm(Field(grid, "spectral", f))
    assert vals[4] == pytest.approx(2.0 * vals[1], rel=1e-9)
    assert vals[16] == pytest.approx(4.0 * vals[1], rel=1e-9)


def test_homogeneity_and_monotonicity(grid):
    k = 3
    sig = grid.modulation()
    f = np.where(_shell_mask(grid, k) & (np.abs(sig) <= 4.0), 0.3 + 0.1j, 0.0)
    fld = Field(grid, "spectral", f)
    lam = 3.7
    assert xk_norm(Field(grid, "spectral", lam * f), k).total == pytest.approx(
        lam * xk_norm(fld, k).total, rel=1e-12
    )
    assert l1tau_l2xi_norm(Field(grid, "spectral", lam * f)) == pytest.approx(
        lam * l1tau_l2xi_norm(fld), rel=1e-12
    )
    g = f.copy()
    extra = _shell_mask(grid, k) & (np.abs(sig) > 16.0) & (np.abs(sig) < 40.0)
    g[extra] = 0.5
    assert xk_norm(Field(grid, "spectral", g), k).total >= xk_norm(fld, k).total


def test_breakdown_serialization(grid):
    k = 2
    sig = grid.modulation()
    f = np.where(_shell_mask(grid, k) & (np.abs(sig) <= 1.0), 1.0 + 0.0j, 0.0)
    bd = xk_norm(Field(grid, "spectral", _normalized(grid, f)), k)
    import json

    doc = json.loads(bd.to_json())
    assert doc["space"] == "Xk"
    assert doc["total"] == pytest.approx(bd.total)
    assert len(doc["shells"]) == default_j_max(grid) + 1
