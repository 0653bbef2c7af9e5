"""Discretized space-time fields on a periodic surrogate of the plane.

A PhaseGrid is a torus in x and t together with its centered dual lattice in
(xi, tau).  Fields live on it tagged physical or spectral; this module holds
the transforms, the free Schrodinger propagator, the dyadic projectors and
the windowed Duhamel integral of a product nonlinearity.

Grid semantics: on the time torus the modulation tau + xi^2 is only defined
modulo the dual period, so all modulation bookkeeping reduces it to the
principal window [-tau_nyquist, tau_nyquist).  The trapezoidal Duhamel
integral is consistent with that reduction (its Fourier-side denominator is
the tan-warped modulation, which wraps the same way).
"""

from dataclasses import dataclass, field

import numpy as np

from .lp_frame import eta0, eta_k, psi

PHYSICAL = "physical"
SPECTRAL = "spectral"

# psi is supported in [-8/5, 8/5]; the Duhamel window must contain it.
OUTER_TIME_SUPPORT = 1.6


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseGrid:
    """Periodic space-time grid and its dual lattice."""

    nx: int = 1024
    nt: int = 1024
    xlen: float = 64.0 * np.pi
    tlen: float = 8.0

    def __post_init__(self):
        if not (_is_pow2(self.nx) and _is_pow2(self.nt)):
            raise ValueError("nx and nt must be powers of two")
        if self.nx < 8 or self.nt < 8:
            raise ValueError("nx and nt must be >= 8")
        if self.xlen <= 0 or self.tlen <= 0:
            raise ValueError("xlen and tlen must be positive")

    @property
    def dx(self):
        return self.xlen / self.nx

    @property
    def dt(self):
        return self.tlen / self.nt

    @property
    def dxi(self):
        return 2.0 * np.pi / self.xlen

    @property
    def dtau(self):
        return 2.0 * np.pi / self.tlen

    @property
    def x(self):
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    @property
    def t(self):
        return (np.arange(self.nt) - self.nt // 2) * self.dt

    @property
    def xi(self):
        """Centered spatial-frequency lattice (fftshift order)."""
        return (np.arange(self.nx) - self.nx // 2) * self.dxi

    @property
    def tau(self):
        return (np.arange(self.nt) - self.nt // 2) * self.dtau

    @property
    def xi_max(self):
        return np.pi * self.nx / self.xlen

    @property
    def tau_max(self):
        return np.pi * self.nt / self.tlen

    @property
    def k_grid(self):
        """Largest dyadic shell fully representable on this grid."""
        return int(np.floor(np.log2(self.xi_max))) - 1

    def wrap_modulation(self, sigma):
        """Reduce tau + xi^2 to the principal dual window [-tau_max, tau_max)."""
        period = 2.0 * self.tau_max
        return np.mod(sigma + self.tau_max, period) - self.tau_max

    def modulation(self):
        """Wrapped modulation tau + xi^2 on the centered dual lattice, shape nx x nt."""
        sig = self.tau[None, :] + self.xi[:, None] ** 2
        return self.wrap_modulation(sig)


@dataclass
class Field:
    """Complex function on a PhaseGrid, tagged physical or spectral.

    values has shape (nx, nt); rows index space/frequency, columns index
    time/modulation.  Spectral arrays are centered (fftshift order) samples
    of the space-time transform in grid-calibrated (orthonormal DFT) units.
    """

    grid: PhaseGrid
    domain: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.domain not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.nx, self.grid.nt):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.nt})"
            )

    def copy(self):
        return Field(self.grid, self.domain, self.values.copy())

    def l2(self):
        """Physical-measure L2 norm; equals the spectral one by Parseval."""
        w = self.grid.dx * self.grid.dt
        return float(np.sqrt(w) * np.linalg.norm(self.values))


@dataclass
class InitialData:
    """Complex data on the spatial grid only (nt ignored)."""

    grid: PhaseGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.nx,):
            raise ValueError("values must be a vector of length nx")

    def l2(self):
        return float(np.sqrt(self.grid.dx) * np.linalg.norm(self.values))


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def to_spectral(f: Field) -> Field:
    """Forward transform (convention e^{-i(x xi + t tau)}), array-unitary."""
    _require(f.domain == PHYSICAL, "to_spectral expects a physical field")
    vals = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(f.values), norm="ortho"))
    return Field(f.grid, SPECTRAL, vals)


def from_spectral(f: Field) -> Field:
    _require(f.domain == SPECTRAL, "from_spectral expects a spectral field")
    vals = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(f.values), norm="ortho"))
    return Field(f.grid, PHYSICAL, vals)


def spectral_initial(phi: InitialData) -> np.ndarray:
    """Centered unitary transform of initial data (length nx)."""
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(phi.values), norm="ortho"))


def initial_from_spectral(grid: PhaseGrid, phat: np.ndarray) -> InitialData:
    vals = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(phat), norm="ortho"))
    return InitialData(grid, vals)


def free_evolve(phi: InitialData, t_samples=None):
    """Schrodinger group W(t): spatial coefficients pick up e^{-i xi^2 t}.

    With t_samples None, evaluates on the grid's own time lattice and returns
    a physical Field; an explicit array of times returns the raw nx x len(t)
    array instead.
    """
    grid = phi.grid
    custom = t_samples is not None
    t = np.asarray(t_samples, dtype=float) if custom else grid.t
    phat = spectral_initial(phi)
    phase = np.exp(-1j * grid.xi[:, None] ** 2 * t[None, :])
    slices = np.fft.fftshift(
        np.fft.ifft(np.fft.ifftshift(phat[:, None] * phase, axes=0), axis=0, norm="ortho"),
        axes=0,
    )
    if custom:
        return slices
    return Field(grid, PHYSICAL, slices)


def _spatial_multiplier(u: Field, mult: np.ndarray) -> Field:
    """Apply a multiplier in xi (centered order) regardless of domain tag."""
    if u.domain == SPECTRAL:
        return Field(u.grid, SPECTRAL, u.values * mult[:, None])
    spec = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(u.values, axes=0), axis=0, norm="ortho"), axes=0)
    spec *= mult[:, None]
    vals = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(spec, axes=0), axis=0, norm="ortho"), axes=0)
    return Field(u.grid, PHYSICAL, vals)


def project(u: Field, k: int) -> Field:
    """Dyadic frequency projector with symbol eta_k; zero field for k <= -1."""
    if k <= -1:
        return Field(u.grid, u.domain, np.zeros_like(u.values))
    return _spatial_multiplier(u, eta_k(u.grid.xi, k))


def project_low(u: Field, l: int) -> Field:
    """Projector onto shells <= l; telescoped symbol eta0(xi / 2^l)."""
    return _spatial_multiplier(u, eta0(u.grid.xi / 2.0**l))


def project_high(u: Field, l: int) -> Field:
    """Projector onto shells >= l (complement of project_low at l-1)."""
    return _spatial_multiplier(u, 1.0 - eta0(u.grid.xi / 2.0 ** (l - 1)))


def _cumtrap_from_zero(g, dt, i0):
    """Signed trapezoidal integral from the t=0 node along the last axis."""
    c = np.empty_like(g)
    c[..., 0] = 0.0
    np.cumsum(0.5 * dt * (g[..., 1:] + g[..., :-1]), axis=-1, out=c[..., 1:])
    return c - c[..., i0][..., None]


def duhamel_bilinear(u: Field, v: Field, with_derivative=False, with_conjugate=True) -> Field:
    """Windowed Duhamel integral of the product nonlinearity.

    Returns psi(t/4) * int_0^t W(t-s) [psi^2(s) u(s) Cv(s)] ds where C is
    conjugation when with_conjugate is set, and the integrand carries an
    extra d/dx when with_derivative is set.  Time quadrature is the
    composite trapezoid rule on the grid's own time lattice, so the result
    is exactly bilinear (conjugate-linear in v when C is on).
    """
    _require(u.grid == v.grid, "duhamel_bilinear needs matching grids")
    _require(u.domain == PHYSICAL and v.domain == PHYSICAL, "duhamel_bilinear expects physical fields")
    grid = u.grid
    _require(grid.tlen >= 2 * OUTER_TIME_SUPPORT, "time window must contain the support of psi")
    t = grid.t
    i0 = grid.nt // 2

    vv = np.conj(v.values) if with_conjugate else v.values
    f = (psi(t) ** 2)[None, :] * u.values * vv

    fx = np.fft.fft(np.fft.ifftshift(f, axes=0), axis=0, norm="ortho")
    xi = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    if with_derivative:
        fx *= (1j * xi)[:, None]
    phase = np.exp(1j * xi[:, None] ** 2 * t[None, :])
    c = _cumtrap_from_zero(phase * fx, grid.dt, i0)
    yx = np.conj(phase) * c
    y = np.fft.fftshift(np.fft.ifft(yx, axis=0, norm="ortho"), axes=0)
    y *= psi(t / 4.0)[None, :]
    return Field(grid, PHYSICAL, y)


def duhamel_kernel_fourier(u: Field, v: Field, with_derivative=False, with_conjugate=True,
                           warped=True) -> Field:
    """Fourier-side kernel evaluation of the same Duhamel operator.

    Uses the representation whose tau-side kernel carries the factor
    (psihat(tau - tau') - psihat(tau + xi^2)) / (tau' + xi^2): concretely, the
    time signal splits into an inverse transform of F~ / (i mu) minus
    e^{-i t xi^2} times the mode average of the same quantity, both windowed.
    With warped=True the denominator is the trapezoid-consistent discrete
    modulation (2/dt) tan((tau' + xi^2) dt / 2), which reproduces
    duhamel_bilinear to machine precision; warped=False keeps the raw
    continuum denominator tau' + xi^2.
    """
    _require(u.grid == v.grid, "duhamel_kernel_fourier needs matching grids")
    grid = u.grid
    t = grid.t

    vv = np.conj(v.values) if with_conjugate else v.values
    f = (psi(t) ** 2)[None, :] * u.values * vv
    fx = np.fft.fft(np.fft.ifftshift(f, axes=0), axis=0, norm="ortho")
    xi = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    if with_derivative:
        fx *= (1j * xi)[:, None]

    # tau' modes of the time signal, unshifted order, with the t-lattice
    # origin at -tlen/2 accounted for by ifftshift.
    ftilde = np.fft.fft(np.fft.ifftshift(fx, axes=1), axis=1)
    tau_p = 2.0 * np.pi * np.fft.fftfreq(grid.nt, d=grid.dt)
    mu = tau_p[None, :] + xi[:, None] ** 2
    if warped:
        denom = (2.0 / grid.dt) * np.tan(0.5 * mu * grid.dt)
    else:
        denom = mu.copy()
    # Modes aliased onto zero modulation integrate to a linear-in-t ramp.
    resonant = np.abs(np.sin(0.5 * mu * grid.dt)) < 1e-12 if warped else np.abs(mu) < 1e-12
    denom = np.where(resonant, 1.0, denom)
    w1 = np.where(resonant, 0.0, ftilde / (1j * denom))

    osc = np.fft.fftshift(np.fft.ifft(w1, axis=1), axes=1)
    flat = np.mean(w1, axis=1)
    yx = osc - np.exp(-1j * xi[:, None] ** 2 * t[None, :]) * flat[:, None]
    if np.any(resonant):
        ramp = np.where(resonant, ftilde, 0.0)
        ramp_t = np.fft.fftshift(np.fft.ifft(ramp, axis=1), axes=1)
        yx = yx + ramp_t * t[None, :]
    y = np.fft.fftshift(np.fft.ifft(yx, axis=0, norm="ortho"), axes=0)
    y *= psi(t / 4.0)[None, :]
    return Field(grid, PHYSICAL, y)


def residual(u: Field, phi: InitialData) -> float:
    """Equation defect of u on the core window plus the data mismatch.

    Discrete L2 norm over {|t| <= 1} of i u_t + u_xx - psi^2 |u|^2 with
    spectral derivatives, plus |u(., 0) - phi|_{L2}.  The time derivative is
    taken on eta0(5t/8) * u, which agrees with u on |t| <= 2 and vanishes at
    the wrap, so the periodic transform never sees a jump.
    """
    _require(u.domain == PHYSICAL, "residual expects a physical field")
    grid = u.grid
    _require(grid.tlen >= 5.2, "time window too short to isolate |t| <= 1")
    t = grid.t
    i0 = grid.nt // 2

    chi = eta0(5.0 * t / 8.0)
    w = u.values * chi[None, :]
    tau = 2.0 * np.pi * np.fft.fftfreq(grid.nt, d=grid.dt)
    ut = np.fft.ifft(1j * tau[None, :] * np.fft.fft(w, axis=1), axis=1)

    xi = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    uxx = np.fft.fftshift(
        np.fft.ifft(-(xi**2)[:, None] * np.fft.fft(np.fft.ifftshift(u.values, axes=0), axis=0), axis=0),
        axes=0,
    )

    defect = 1j * ut + uxx - (psi(t) ** 2)[None, :] * np.abs(u.values) ** 2
    mask = np.abs(t) <= 1.0
    core = np.sqrt(grid.dx * grid.dt * np.sum(np.abs(defect[:, mask]) ** 2))
    data = np.sqrt(grid.dx) * np.linalg.norm(u.values[:, i0] - phi.values)
    return float(core + data)
