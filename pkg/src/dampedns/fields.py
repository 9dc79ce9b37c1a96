"""Velocity and forcing fields in spectral and physical representations.

A :class:`SpectralVelocity` is the solver state: three half-spectrum
coefficient arrays of a real, zero-mean, divergence-free, dealiased
velocity field. :class:`PhysicalVelocity` is the collocation-grid scratch
representation used by the nonlinear and damping terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import WaveGrid

__all__ = [
    "FieldError",
    "SpectralVelocity",
    "PhysicalVelocity",
    "ForcingField",
    "h_norm_sq",
    "h_inner",
    "divergence_max",
    "hermitian_defect",
    "dealias_leak",
    "make_initial_condition",
]

DIV_TOL = 1e-12


class FieldError(ValueError):
    """Invalid field construction or invariant violation."""


# ----------------------------------------------------------------------
# norms on raw coefficient arrays
# ----------------------------------------------------------------------

def h_norm_sq(coeffs: np.ndarray, grid: WaveGrid) -> float:
    """Squared L2 norm |u|^2 via Parseval on half-spectrum coefficients."""
    p = coeffs.real ** 2 + coeffs.imag ** 2
    return grid.length ** 3 * float(np.einsum("az,z->", p.reshape(-1, grid.nk), grid.hermitian_weight))


def h_inner(a: np.ndarray, b: np.ndarray, grid: WaveGrid) -> float:
    """L2 inner product (a, b) of two real fields given as coefficients."""
    p = a.real * b.real + a.imag * b.imag
    return grid.length ** 3 * float(np.einsum("az,z->", p.reshape(-1, grid.nk), grid.hermitian_weight))


# ----------------------------------------------------------------------
# invariant probes
# ----------------------------------------------------------------------

def divergence_max(coeffs: np.ndarray, grid: WaveGrid) -> float:
    """max_k |k . u_hat(k)|."""
    div = (
        grid.kvec[0] * coeffs[0]
        + grid.kvec[1] * coeffs[1]
        + grid.kvec[2] * coeffs[2]
    )
    return float(np.abs(div).max())


def hermitian_defect(coeffs: np.ndarray, grid: WaveGrid) -> float:
    """Self-conjugacy defect of the k3 = 0 and k3 = Nyquist planes.

    Columns with 0 < k3 < Nyquist are Hermitian by the storage layout; the
    two self-conjugate planes must satisfy c(-k1,-k2) = conj(c(k1,k2)).
    """
    neg = grid._negated
    worst = 0.0
    for plane in (0, grid.nk - 1):
        p = coeffs[..., plane]
        refl = p[..., neg, :][..., :, neg]
        worst = max(worst, float(np.abs(p - np.conj(refl)).max()))
    return worst


def dealias_leak(coeffs: np.ndarray, grid: WaveGrid) -> float:
    """Largest coefficient magnitude outside the dealias mask."""
    out = coeffs * (~grid.dealias_mask)
    return float(np.abs(out).max())


# ----------------------------------------------------------------------
# field containers
# ----------------------------------------------------------------------

@dataclass
class SpectralVelocity:
    """Divergence-free velocity as truncated Fourier coefficients.

    Invariants (enforced by the constructors in this package, probed by
    the validators above): real field (Hermitian symmetry), zero mean,
    |k . u_hat| <= 1e-12 max|u_hat|, coefficients zero outside the
    dealias mask.
    """

    grid: WaveGrid
    coeffs: np.ndarray  # complex128, shape (3, N, N, N//2+1)

    def copy(self) -> "SpectralVelocity":
        return SpectralVelocity(self.grid, self.coeffs.copy())

    def to_physical(self) -> "PhysicalVelocity":
        return PhysicalVelocity(self.grid, self.grid.to_physical(self.coeffs))

    @property
    def norm_h_sq(self) -> float:
        return h_norm_sq(self.coeffs, self.grid)

    def max_coeff(self) -> float:
        return float(np.abs(self.coeffs).max())

    def validate(self, div_tol: float = DIV_TOL) -> None:
        """Raise FieldError if any invariant is violated."""
        peak = self.max_coeff()
        if not np.isfinite(peak):
            raise FieldError("non-finite spectral coefficients")
        if np.abs(self.coeffs[:, 0, 0, 0]).max() != 0.0:
            raise FieldError("zero mode is not zero")
        if dealias_leak(self.coeffs, self.grid) != 0.0:
            raise FieldError("coefficients leak outside the dealias mask")
        scale = max(peak, 1e-300)
        if divergence_max(self.coeffs, self.grid) > div_tol * scale:
            raise FieldError("field is not divergence-free")
        if hermitian_defect(self.coeffs, self.grid) > 1e-12 * scale:
            raise FieldError("field is not Hermitian-symmetric (not real)")


@dataclass
class PhysicalVelocity:
    """Collocation-grid velocity values, one real array per component."""

    grid: WaveGrid
    values: np.ndarray  # float64, shape (3, N, N, N)

    def to_spectral(self) -> SpectralVelocity:
        c = self.grid.to_spectral(self.values)
        c *= self.grid.dealias_mask_f
        c[:, 0, 0, 0] = 0.0
        return SpectralVelocity(self.grid, c)

    def speed(self) -> np.ndarray:
        """Pointwise Euclidean magnitude |u(x)|."""
        return np.sqrt(self.values[0] ** 2 + self.values[1] ** 2 + self.values[2] ** 2)

    def max_speed(self) -> float:
        return float(self.speed().max())

    def mean_abs_max(self) -> float:
        return float(np.abs(self.values.mean(axis=(1, 2, 3))).max())


# ----------------------------------------------------------------------
# forcing
# ----------------------------------------------------------------------

class ForcingField:
    """Autonomous body force, cached as projected dealiased coefficients.

    The cached spectral form is divergence-free and zero-mean: the Leray
    projection is applied once at construction, so the force can be added
    directly to the spectral right-hand side.
    """

    def __init__(self, grid: WaveGrid, coeffs: np.ndarray, description: str = "explicit"):
        from .operators import project_coeffs  # local import breaks the cycle

        if coeffs.shape != grid.shape():
            raise FieldError(f"forcing coefficients have shape {coeffs.shape}, expected {grid.shape()}")
        c = np.array(coeffs, dtype=np.complex128, order="C")
        c *= grid.dealias_mask_f
        project_coeffs(c, grid)
        self.grid = grid
        self.coeffs = c
        self.description = description
        self.norm_sq = h_norm_sq(c, grid)

    @classmethod
    def zero(cls, grid: WaveGrid) -> "ForcingField":
        return cls(grid, np.zeros(grid.shape(), np.complex128), "zero")

    @classmethod
    def from_values(cls, grid: WaveGrid, values: np.ndarray) -> "ForcingField":
        if values.shape != (3, grid.n, grid.n, grid.n):
            raise FieldError(f"forcing values have shape {values.shape}")
        return cls(grid, grid.to_spectral(np.asarray(values, float)), "grid values")

    @classmethod
    def cylinder(
        cls,
        grid: WaveGrid,
        *,
        center: tuple[float, float, float] | None = None,
        radius: float | None = None,
        height: float | None = None,
        axis: str = "y",
        force: tuple[float, float, float] = (0.0, 2.0, 0.0),
        smooth_cells: float = 1.0,
    ) -> "ForcingField":
        """Constant force inside a cylinder, zero outside.

        Defaults mirror the canonical configuration: a cylinder of radius
        and height L/3 centred in the box with its axis along y, carrying
        the force (0, 2, 0). The indicator is smoothed over ``smooth_cells``
        grid cells in spectral space to limit Gibbs ringing.
        """
        L = grid.length
        if center is None:
            center = (L / 2.0, L / 2.0, L / 2.0)
        if radius is None:
            radius = L / 3.0
        if height is None:
            height = L / 3.0
        if axis not in ("x", "y", "z"):
            raise FieldError(f"cylinder axis must be one of x, y, z, got {axis!r}")
        if radius <= 0 or height <= 0:
            raise FieldError("cylinder radius and height must be positive")

        coords = grid.meshgrid()
        # periodic minimum-image offsets from the centre
        d = [c - ctr - L * np.round((c - ctr) / L) for c, ctr in zip(coords, center)]
        ax = "xyz".index(axis)
        radial = [d[i] for i in range(3) if i != ax]
        inside = (radial[0] ** 2 + radial[1] ** 2 <= radius ** 2) & (np.abs(d[ax]) <= height / 2.0)

        values = np.zeros((3, grid.n, grid.n, grid.n))
        for j in range(3):
            if force[j] != 0.0:
                values[j][inside] = force[j]
        c = grid.to_spectral(values)
        if smooth_cells > 0.0:
            sigma = smooth_cells * grid.dx
            c *= np.exp(-0.5 * grid.ksq * sigma ** 2)
        name = f"cylinder(axis={axis}, r={radius:g}, h={height:g}, g={tuple(force)})"
        return cls(grid, c, name)


# ----------------------------------------------------------------------
# initial conditions
# ----------------------------------------------------------------------

def _zero(grid: WaveGrid) -> SpectralVelocity:
    return SpectralVelocity(grid, np.zeros(grid.shape(), np.complex128))


def _shear(grid: WaveGrid, amplitude: float) -> SpectralVelocity:
    """u(x) = (A sin(2 pi y / L), 0, 0): a single divergence-free mode."""
    c = np.zeros(grid.shape(), np.complex128)
    c[0, 0, 1, 0] = -0.5j * amplitude
    c[0, 0, grid.n - 1, 0] = +0.5j * amplitude
    return SpectralVelocity(grid, c)


def _random_divfree(grid: WaveGrid, seed: int, energy: float, slope: float) -> SpectralVelocity:
    """Seeded random divergence-free field scaled to |u|^2 = energy.

    Per-mode energy follows |u_hat(k)|^2 ~ |k|^slope before projection;
    negative slopes concentrate energy at large scales.
    """
    if energy < 0.0:
        raise FieldError(f"initial energy must be nonnegative, got {energy}")
    from .operators import project_coeffs

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3, grid.n, grid.n, grid.n))
    c = grid.to_spectral(noise)
    kmag = np.sqrt(grid.ksq)
    k0 = 2.0 * np.pi / grid.length
    amp = np.zeros_like(kmag)
    np.power(kmag / k0, slope / 2.0, out=amp, where=kmag > 0.0)
    c *= amp
    c *= grid.dealias_mask_f
    project_coeffs(c, grid)
    if energy == 0.0:
        c[:] = 0.0
        return SpectralVelocity(grid, c)
    e = h_norm_sq(c, grid)
    if e == 0.0:
        raise FieldError("random field degenerated to zero; cannot scale to target energy")
    c *= np.sqrt(energy / e)
    return SpectralVelocity(grid, c)


def _uniform_projected(grid: WaveGrid, vector: tuple[float, float, float]) -> SpectralVelocity:
    """Leray projection of a spatially uniform field.

    On the zero-mean torus the projection annihilates constants, so this
    is the zero field for every vector; the path exists so configurations
    written for other domains stay expressible.
    """
    from .operators import project_coeffs

    c = np.zeros(grid.shape(), np.complex128)
    for j in range(3):
        c[j, 0, 0, 0] = vector[j]
    project_coeffs(c, grid)
    return SpectralVelocity(grid, c)


def make_initial_condition(
    grid: WaveGrid,
    kind: str,
    *,
    amplitude: float = 1.0,
    seed: int = 0,
    energy: float = 1.0,
    slope: float = -4.0,
    vector: tuple[float, float, float] = (1.0, 0.0, 0.0),
) -> SpectralVelocity:
    """Build an initial velocity satisfying all field invariants.

    ``kind`` is one of ``zero``, ``shear``, ``random`` (deterministic for a
    fixed seed, scaled so |u0|^2 = energy) or ``uniform`` (a constant vector
    passed through the projection).
    """
    if kind == "zero":
        return _zero(grid)
    if kind == "shear":
        return _shear(grid, amplitude)
    if kind == "random":
        return _random_divfree(grid, seed, energy, slope)
    if kind == "uniform":
        return _uniform_projected(grid, vector)
    raise FieldError(f"unknown initial condition kind {kind!r}")
