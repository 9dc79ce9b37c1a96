"""Spatial operators of the damped Navier-Stokes system.

Everything here acts on the projected, dealiased spectral representation:
the Leray projection eliminates the pressure, the viscous term is diagonal
(handled by the time integrator), and the convective and damping terms are
evaluated pseudo-spectrally with 2/3-rule dealiasing.
"""

from __future__ import annotations

import numpy as np

from .grid import WaveGrid
from .fields import SpectralVelocity

__all__ = [
    "project_coeffs",
    "leray_project",
    "nonlinear_term",
    "damping_term",
    "nonviscous_rhs",
]


def project_coeffs(coeffs: np.ndarray, grid: WaveGrid) -> np.ndarray:
    """In-place Leray projection: u_hat -= k (k . u_hat) / |k|^2, zero mean.

    Acts mode-by-mode with the real symmetric matrix I - k k^T/|k|^2, so it
    is idempotent and preserves Hermitian symmetry and the dealias support.
    The k = 0 mode is zeroed outright (zero-mean constraint).
    """
    kv = grid.kvec
    div = kv[0] * coeffs[0]
    div += kv[1] * coeffs[1]
    div += kv[2] * coeffs[2]
    div *= grid.inv_ksq
    coeffs[0] -= kv[0] * div
    coeffs[1] -= kv[1] * div
    coeffs[2] -= kv[2] * div
    coeffs[:, 0, 0, 0] = 0.0
    return coeffs


def leray_project(v_hat: np.ndarray, grid: WaveGrid) -> SpectralVelocity:
    """Project raw Hermitian-symmetric coefficients onto divergence-free fields.

    Returns a field satisfying every SpectralVelocity invariant: the gradient
    part of each mode is removed, the zero mode is dropped and the dealias
    mask is applied. Idempotent up to rounding.
    """
    v_hat = np.asarray(v_hat, dtype=np.complex128)
    if v_hat.shape != grid.shape():
        raise ValueError(f"expected coefficients of shape {grid.shape()}, got {v_hat.shape}")
    out = v_hat * grid.dealias_mask_f
    project_coeffs(out, grid)
    return SpectralVelocity(grid, out)


def _convective_spectral(coeffs: np.ndarray, grid: WaveGrid) -> tuple[np.ndarray, np.ndarray]:
    """Physical-space velocity and convective product (u . grad) u.

    Transforms u and grad u to the collocation grid in one batched call and
    forms the products there; the caller transforms back and dealiases.
    Returns (u_phys, conv_phys).
    """
    n = grid.n
    stack = np.empty((12, n, n, grid.nk), np.complex128)
    stack[:3] = coeffs
    np.multiply(grid._ikvec[:, None], coeffs[None], out=stack[3:].reshape(3, 3, n, n, grid.nk))
    phys = grid.to_physical(stack)
    u_phys = phys[:3]
    grad = phys[3:].reshape(3, 3, n, n, n)
    conv = np.einsum("ixyz,ijxyz->jxyz", u_phys, grad)
    return u_phys, conv


def nonlinear_term(u: SpectralVelocity) -> SpectralVelocity:
    """Convective contribution N(u) = -P[(u . grad) u], dealiased.

    With the 2/3 mask the pseudo-spectral product is alias-free for the
    retained modes, so the discrete term inherits the energy orthogonality
    <N(u), u> = 0 of the continuous trilinear form up to rounding.
    """
    grid = u.grid
    _, conv = _convective_spectral(u.coeffs, grid)
    out = grid.to_spectral(conv)
    out *= -grid.dealias_mask_f
    project_coeffs(out, grid)
    return SpectralVelocity(grid, out)


def damping_term(u: SpectralVelocity, alpha: float, beta: float) -> SpectralVelocity:
    """Damping contribution -P[alpha |u|^(beta-1) u].

    The pointwise magnitude is evaluated on the collocation grid, so
    <damping, u> = -alpha (dx^3 sum |u(x)|^(beta+1)) holds exactly by the
    discrete Parseval identity regardless of aliasing in the unretained
    modes. For beta = 1 the factor |u|^0 is identically one and the result
    is -alpha u with no transforms at all.
    """
    if alpha <= 0.0:
        raise ValueError(f"damping strength alpha must be positive, got {alpha}")
    if beta < 1.0:
        raise ValueError(f"damping exponent beta must be >= 1, got {beta}")
    grid = u.grid
    if beta == 1.0:
        return SpectralVelocity(grid, -alpha * u.coeffs)
    u_phys = grid.to_physical(u.coeffs)
    s2 = u_phys[0] ** 2 + u_phys[1] ** 2 + u_phys[2] ** 2
    w = (alpha * s2 ** ((beta - 1.0) / 2.0)) * u_phys
    out = grid.to_spectral(w)
    out *= -grid.dealias_mask_f
    project_coeffs(out, grid)
    return SpectralVelocity(grid, out)


def nonviscous_rhs(
    coeffs: np.ndarray,
    grid: WaveGrid,
    alpha: float,
    beta: float,
    forcing_coeffs: np.ndarray | None,
) -> np.ndarray:
    """Fused convective + damping + forcing right-hand side on raw coefficients.

    Equals nonlinear_term(u) + damping_term(u, alpha, beta) + f_hat up to
    rounding, at a fraction of the transforms: for exactly divergence-free
    dealiased input the convective term coincides mode-by-mode with the
    divergence form d_i(u_i u_j), which needs only the velocity itself in
    physical space. The six distinct products u_i u_j and the three damping
    components share one batched forward transform; the derivative is taken
    spectrally. The viscous term is excluded; the integrator applies it
    exactly through the integrating factor.
    """
    n = grid.n
    u_phys = grid.to_physical(coeffs)
    buf = np.empty((9, n, n, n))
    np.multiply(u_phys[0], u_phys[0], out=buf[0])
    np.multiply(u_phys[0], u_phys[1], out=buf[1])
    np.multiply(u_phys[0], u_phys[2], out=buf[2])
    np.multiply(u_phys[1], u_phys[1], out=buf[3])
    np.multiply(u_phys[1], u_phys[2], out=buf[4])
    np.multiply(u_phys[2], u_phys[2], out=buf[5])
    if beta == 1.0:
        np.multiply(alpha, u_phys, out=buf[6:9])
    else:
        s2 = buf[0] + buf[3]
        s2 += buf[5]
        fac = s2 ** ((beta - 1.0) / 2.0)
        fac *= alpha
        np.multiply(fac, u_phys, out=buf[6:9])
    th = grid.to_spectral(buf)

    kv = grid.kvec
    out = np.empty_like(coeffs)
    # out_j = k_i T_hat[i, j] with T indexed (00, 01, 02, 11, 12, 22)
    np.multiply(kv[0], th[0], out=out[0])
    out[0] += kv[1] * th[1]
    out[0] += kv[2] * th[2]
    np.multiply(kv[0], th[1], out=out[1])
    out[1] += kv[1] * th[3]
    out[1] += kv[2] * th[4]
    np.multiply(kv[0], th[2], out=out[2])
    out[2] += kv[1] * th[4]
    out[2] += kv[2] * th[5]
    out *= -1j  # minus the convective divergence i k . T
    out -= th[6:9]  # minus the damping force
    out *= grid.dealias_mask_f
    project_coeffs(out, grid)
    if forcing_coeffs is not None:
        out += forcing_coeffs
    return out
