"""Matrix eigensolvers for the same spectral data the shooting route computes.

These are an independent route: truncated Fourier (Hill) matrices for the
periodic / anti-periodic eigenvalues (band edges), and sine / cosine
Galerkin matrices on [0, 1] for the Dirichlet / Neumann spectra.  The
designer iterates against this fast forward map; the shooting route in
``bands`` stays the authoritative public implementation, and tests compare
the two.

Basis sizes auto-scale with the potential so that deep-well designs (whose
low eigenvalues involve Fourier modes up to the classical turning index)
stay resolved.  The Hill blocks are banded Hermitian, solved by LAPACK's
banded drivers; the Galerkin matrices are dense.

Only Fourier-form potentials are supported here.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

from .potential import Potential

__all__ = [
    "hill_band_edges",
    "galerkin_dirichlet",
    "galerkin_neumann",
    "hill_edges_and_vectors",
    "galerkin_dirichlet_vectors",
    "exp_vector_gradient",
    "sine_vector_gradient",
]

DEFAULT_MODES = 64
DEFAULT_GALERKIN = 256


def _turning_index(p: Potential, count: int, spacing: float) -> int:
    """Smallest basis index safely past the classical turning point."""
    sup = p.sup_norm_bound
    k_turn = math.sqrt(max(2.0 * sup, 1.0)) / spacing
    return int(1.3 * k_turn) + 8 * (count + 2)


def _hill_block(vhat, wavenumbers, constant, n_lowest):
    """Lowest eigenvalues of a banded Hermitian Fourier block."""
    dim = wavenumbers.size
    bw = (vhat.size - 1) // 2  # largest coupled mode offset
    band = np.zeros((bw + 1, dim), dtype=vhat.dtype)
    band[0] = wavenumbers**2 + constant
    for off in range(1, bw + 1):
        band[off, : dim - off] = vhat[bw + off]
    return sla.eig_banded(
        band,
        lower=True,
        eigvals_only=True,
        select="i",
        select_range=(0, min(n_lowest, dim) - 1),
    )


def _mode_coeffs(p: Potential):
    const, ks, a, b = p.effective_fourier()
    if len(ks) == 0:
        return const, np.zeros(0, dtype=int), a, b
    return const, np.asarray(ks, dtype=int), a, b


def hill_band_edges(p: Potential, n_gaps: int, modes: int | None = None):
    """Band edges from truncated Fourier matrices.

    Returns (lambda0, gap_lo, gap_hi, next_band_end) for gaps 1..n_gaps:
    the periodic block (wavenumbers 2 pi k) carries the even-index edges,
    the anti-periodic block (2 pi (k + 1/2)) the odd-index ones.
    """
    const, ks, a, b = _mode_coeffs(p)
    if modes is None:
        modes = max(DEFAULT_MODES, _turning_index(p, n_gaps, 2.0 * math.pi))
    K = modes
    kmax = int(ks.max()) if ks.size else 0
    vhat = np.zeros(2 * kmax + 1, dtype=complex if np.any(b) else float)
    for k, ak, bk in zip(ks, a, b):
        if np.any(b):
            vhat[kmax + k] = 0.5 * (ak - 1j * bk)
            vhat[kmax - k] = 0.5 * (ak + 1j * bk)
        else:
            vhat[kmax + k] = 0.5 * ak
            vhat[kmax - k] = 0.5 * ak

    need = 2 * (n_gaps + 2) + 3
    per_k = 2.0 * np.pi * np.arange(-K, K + 1)
    anti_k = 2.0 * np.pi * (np.arange(-K, K) + 0.5)
    ev_per = _hill_block(vhat, per_k, const, need)
    ev_anti = _hill_block(vhat, anti_k, const, need)

    edges = {}
    lambda0 = ev_per[0]
    m = 1
    i_per, i_anti = 1, 0
    while m <= n_gaps + 1:
        if m % 2 == 1:
            edges[m] = (ev_anti[i_anti], ev_anti[i_anti + 1])
            i_anti += 2
        else:
            edges[m] = (ev_per[i_per], ev_per[i_per + 1])
            i_per += 2
        m += 1
    gap_lo = np.array([edges[n][0] for n in range(1, n_gaps + 1)])
    gap_hi = np.array([edges[n][1] for n in range(1, n_gaps + 1)])
    next_band_end = edges[n_gaps + 1][0]
    return float(lambda0), gap_lo, gap_hi, float(next_band_end)


def _cosine_moments(p: Potential, jmax: int) -> np.ndarray:
    """C[j] = integral_0^1 v(x) cos(pi j x) dx for j = 0..jmax."""
    const, ks, a, b = _mode_coeffs(p)
    C = np.zeros(jmax + 1)
    C[0] = const
    j = np.arange(jmax + 1)
    odd = j % 2 == 1
    for k, ak, bk in zip(ks, a, b):
        if 2 * k <= jmax:
            C[2 * k] += 0.5 * ak
        if bk != 0.0 and np.any(odd):
            C[odd] += bk * (4.0 * k / np.pi) / (4.0 * k**2 - j[odd] ** 2)
    return C


def galerkin_dirichlet(p: Potential, count: int, dim: int | None = None) -> np.ndarray:
    """First `count` Dirichlet eigenvalues on [0, 1] via a sine basis."""
    if dim is None:
        dim = max(DEFAULT_GALERKIN, _turning_index(p, count, math.pi))
    m = np.arange(1, dim + 1)
    C = _cosine_moments(p, 2 * dim)
    H = C[np.abs(m[:, None] - m[None, :])] - C[m[:, None] + m[None, :]]
    H[m - 1, m - 1] += (np.pi * m) ** 2
    ev = sla.eigh(H, eigvals_only=True, subset_by_index=(0, count - 1))
    return ev


def galerkin_neumann(p: Potential, count: int, dim: int | None = None) -> np.ndarray:
    """First `count` Neumann eigenvalues on [0, 1] via a cosine basis.

    Basis: 1, sqrt(2) cos(pi m x); indices 0..dim-1, eigenvalues nu_0..
    """
    if dim is None:
        dim = max(DEFAULT_GALERKIN, _turning_index(p, count, math.pi))
    m = np.arange(dim)
    C = _cosine_moments(p, 2 * dim)
    H = C[np.abs(m[:, None] - m[None, :])] + C[m[:, None] + m[None, :]]
    H[0, :] /= np.sqrt(2.0)
    H[:, 0] /= np.sqrt(2.0)
    H[m, m] += (np.pi * m) ** 2
    ev = sla.eigh(H, eigvals_only=True, subset_by_index=(0, count - 1))
    return ev


# --- eigenvector routes for analytic design Jacobians -----------------------


def _hill_block_vectors(vhat, wavenumbers, constant, n_lowest):
    dim = wavenumbers.size
    bw = (vhat.size - 1) // 2
    band = np.zeros((bw + 1, dim), dtype=vhat.dtype)
    band[0] = wavenumbers**2 + constant
    for off in range(1, bw + 1):
        band[off, : dim - off] = vhat[bw + off]
    w, v = sla.eig_banded(
        band,
        lower=True,
        select="i",
        select_range=(0, min(n_lowest, dim) - 1),
    )
    return w, v


def hill_edges_and_vectors(p: Potential, n_gaps: int, modes: int | None = None):
    """Band edges as in hill_band_edges, plus the edge eigenvectors.

    Returns (lambda0, gap_lo, gap_hi, next_band_end, info) where
    info[(which, n)] = (offset, u) gives the eigenvector u over exponential
    wavenumbers 2 pi (j + offset), offset 0 for periodic edges and 1/2 for
    anti-periodic ones.  Keys: ("lo", n), ("hi", n) for n = 1..n_gaps,
    ("lambda0", 0) and ("next", n_gaps + 1).
    """
    const, ks, a, b = _mode_coeffs(p)
    if modes is None:
        modes = max(DEFAULT_MODES, _turning_index(p, n_gaps, 2.0 * math.pi))
    K = modes
    kmax = int(ks.max()) if ks.size else 0
    vhat = np.zeros(2 * kmax + 1, dtype=complex)
    for k, ak, bk in zip(ks, a, b):
        vhat[kmax + k] = 0.5 * (ak - 1j * bk)
        vhat[kmax - k] = 0.5 * (ak + 1j * bk)

    need = 2 * (n_gaps + 2) + 3
    per_k = 2.0 * np.pi * np.arange(-K, K + 1)
    anti_k = 2.0 * np.pi * (np.arange(-K, K) + 0.5)
    ev_per, vec_per = _hill_block_vectors(vhat, per_k, const, need)
    ev_anti, vec_anti = _hill_block_vectors(vhat, anti_k, const, need)

    info = {}
    edges = {}
    lambda0 = ev_per[0]
    info[("lambda0", 0)] = (0.0, vec_per[:, 0])
    m = 1
    i_per, i_anti = 1, 0
    while m <= n_gaps + 1:
        if m % 2 == 1:
            edges[m] = (ev_anti[i_anti], ev_anti[i_anti + 1])
            info[("lo", m)] = (0.5, vec_anti[:, i_anti])
            info[("hi", m)] = (0.5, vec_anti[:, i_anti + 1])
            i_anti += 2
        else:
            edges[m] = (ev_per[i_per], ev_per[i_per + 1])
            info[("lo", m)] = (0.0, vec_per[:, i_per])
            info[("hi", m)] = (0.0, vec_per[:, i_per + 1])
            i_per += 2
        m += 1
    gap_lo = np.array([edges[n][0] for n in range(1, n_gaps + 1)])
    gap_hi = np.array([edges[n][1] for n in range(1, n_gaps + 1)])
    info[("next", n_gaps + 1)] = info.pop(("lo", n_gaps + 1))
    next_band_end = edges[n_gaps + 1][0]
    return float(lambda0), gap_lo, gap_hi, float(next_band_end), info


def galerkin_dirichlet_vectors(p: Potential, count: int, dim: int | None = None):
    """(mu, Y): Dirichlet eigenvalues and eigenvectors in the sine basis."""
    if dim is None:
        dim = max(DEFAULT_GALERKIN, _turning_index(p, count, math.pi))
    m = np.arange(1, dim + 1)
    C = _cosine_moments(p, 2 * dim)
    H = C[np.abs(m[:, None] - m[None, :])] - C[m[:, None] + m[None, :]]
    H[m - 1, m - 1] += (np.pi * m) ** 2
    w, v = sla.eigh(H, subset_by_index=(0, count - 1))
    return w, v


def exp_vector_gradient(u: np.ndarray, max_mode: int):
    """d lambda / d (cos_k, sin_k) for an exponential-basis eigenvector.

    The eigenvalue derivative with respect to the coefficient of
    cos(2 pi k x) is Re sum_j conj(u_{j+k}) u_j, and Im of the same
    correlation for sin(2 pi k x); the derivative in the constant is 1.
    """
    dim = u.size
    da = np.empty(max_mode)
    db = np.empty(max_mode)
    for k in range(1, max_mode + 1):
        corr = np.vdot(u[k:], u[: dim - k])
        da[k - 1] = corr.real
        db[k - 1] = corr.imag
    return da, db


def sine_vector_gradient(y: np.ndarray, max_mode: int):
    """d mu / d (cos_k, sin_k) for a sine-Galerkin eigenvector.

    Uses the autocorrelation rho(delta) = sum_m y_m y_{m+delta} and the
    convolution sigma(s) = sum_{m+m'=s} y_m y_{m'} of the coefficient
    vector (indices m start at 1).
    """
    dim = y.size
    da = np.empty(max_mode)
    db = np.empty(max_mode)
    rho = np.correlate(y, y, mode="full")[dim - 1 :]  # rho[delta], delta=0..dim-1
    sigma_full = np.convolve(y, y)  # index i -> s = i + 2
    jmax = 2 * dim
    sigma = np.zeros(jmax + 1)
    sigma[2 : 2 * dim + 1] = sigma_full
    w = np.zeros(jmax + 1)
    w[: dim] += 2.0 * rho
    w -= sigma
    j = np.arange(jmax + 1)
    odd = j % 2 == 1
    for k in range(1, max_mode + 1):
        da[k - 1] = w[2 * k] / 2.0 if 2 * k <= jmax else 0.0
        g = (4.0 * k / np.pi) / (4.0 * k**2 - j[odd] ** 2)
        db[k - 1] = float(np.sum(g * w[odd]))
    return da, db
