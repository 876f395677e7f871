"""Band edges, Dirichlet/Neumann spectra, gap states and the xi map.

Strategy: the Prufer phase of the shooting solutions at x = 1 is strictly
increasing in lambda, so Dirichlet points mu_n (phase of phi through n pi)
and Neumann points nu_n (phase of theta through pi/2 + n pi) are found by a
globally safe bracketed Newton iteration.  Both mu_n and nu_n lie in the
closure of gap n, and for an open gap their midpoint lies strictly inside,
so (-1)^n F > 1 there.  Those midpoints anchor brackets with exactly one
sign change for every band edge, which subdivision plus a Newton polish
(dF/dlambda comes from the variational system) resolves even for
near-closed gaps and for states sitting exactly on an edge.

Gaps narrower than the double-precision resolution of F -+ 1 (roots become
near-double) fall back to the hull [min(mu, nu), max(mu, nu)], which is a
guaranteed inner approximation computed from well-conditioned simple roots;
gaps below the merge tolerance collapse to a point.

All searches are batched: each refinement round costs one integration pass
over a single vector of energies.  Bracketing rounds run the integrator at
a coarse tolerance; final Newton polishes run at the full tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import monodromy as mo
from . import spectral_matrix as sm
from .errors import BracketFailure, CountMismatch
from .potential import Potential

__all__ = [
    "GapState",
    "BandStructure",
    "band_structure",
    "band_edges",
    "dirichlet_eigs",
    "neumann_eigs",
    "classify_states",
    "xi_map",
]

EDGE_MERGE_REL = 1e-9
VIRTUAL_EDGE_REL = 1e-7
VIRTUAL_A_TOL = 1e-9
COARSE_RTOL = 1e-8
MAX_NEWTON = 60


@dataclass(frozen=True)
class GapState:
    """State attached to gap n: the Dirichlet point plus its sheet."""

    index: int
    mu: float
    sign: int  # +1 bound, -1 anti-bound, 0 virtual (or closed gap)
    closed: bool
    a_value: float
    discriminant: float
    phi_lam: float

    @property
    def b_sheet1(self) -> float:
        excess = max(self.discriminant**2 - 1.0, 0.0)
        return (-1) ** self.index * math.sqrt(excess)


@dataclass(frozen=True)
class BandStructure:
    potential: Potential
    n_gaps: int
    lambda0: float
    gap_lo: np.ndarray
    gap_hi: np.ndarray
    next_band_end: float
    dirichlet: np.ndarray
    neumann: np.ndarray
    states: tuple[GapState, ...] = ()
    xi: np.ndarray | None = None

    def bands(self) -> list[tuple[float, float]]:
        """sigma_0 .. sigma_N as closed intervals (N+1 of them)."""
        lo = np.concatenate(([self.lambda0], self.gap_hi))
        hi = np.concatenate((self.gap_lo, [self.next_band_end]))
        return list(zip(lo.tolist(), hi.tolist()))

    def gaps(self) -> list[tuple[float, float]]:
        """gamma_1 .. gamma_N (closed ones have zero length)."""
        return list(zip(self.gap_lo.tolist(), self.gap_hi.tolist()))

    @property
    def gap_lengths(self) -> np.ndarray:
        return self.gap_hi - self.gap_lo

    def state(self, n: int) -> GapState:
        return self.states[n - 1]

    def bound_states(self) -> list[GapState]:
        return [s for s in self.states if s.sign == +1 and not s.closed]


# --- Prufer angles ---------------------------------------------------------


def _angles(p, lams, rtol):
    """Dirichlet and Neumann Prufer phases at x = 1 plus lambda-derivatives."""
    mb = mo.integrate_batch(p, lams, rtol=rtol, count_zeros=True)
    angD = np.pi * mb.phi_zeros + np.mod(np.arctan2(mb.phi_1, mb.phi_prime_1), np.pi)
    angN = np.pi * mb.theta_zeros + np.mod(np.arctan2(mb.theta_1, mb.theta_prime_1), np.pi)
    dD = (mb.phi_prime_1 * mb.phi_lam - mb.phi_1 * mb.phi_prime_lam) / (
        mb.phi_1**2 + mb.phi_prime_1**2
    )
    dN = (mb.theta_prime_1 * mb.theta_lam - mb.theta_1 * mb.theta_prime_lam) / (
        mb.theta_1**2 + mb.theta_prime_1**2
    )
    return angD, dD, angN, dN


def _initial_guesses(p: Potential, n_need: int):
    """Cheap eigenvalue guesses to seed the shooting solver."""
    if p.fourier:
        mu = sm.galerkin_dirichlet(p, n_need)
        nu = sm.galerkin_neumann(p, n_need + 1)
        return mu, nu
    mean = p.constant
    if p.piecewise:
        mean += sum(s.value * (s.hi - s.lo) for s in p.piecewise)
    n = np.arange(1, n_need + 1)
    mu = (np.pi * n) ** 2 + mean
    nu = np.concatenate(([mean], mu))
    return mu, nu


def _phase_solve(p, targets, kinds, lo, hi, rtol, tol_rel):
    """Bracketed Newton on the monotone phases, iterating active entries only."""
    x = 0.5 * (lo + hi)
    active = np.ones(x.size, dtype=bool)
    for _ in range(MAX_NEWTON):
        idx = np.nonzero(active)[0]
        angD, dD, angN, dN = _angles(p, x[idx], rtol)
        f = np.where(kinds[idx], angN, angD) - targets[idx]
        df = np.where(kinds[idx], dN, dD)
        below = f <= 0
        lo[idx] = np.where(below, x[idx], lo[idx])
        hi[idx] = np.where(~below, x[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x[idx] - f / df
        inside = (x_new > lo[idx]) & (x_new < hi[idx]) & np.isfinite(x_new)
        x_new = np.where(inside, x_new, 0.5 * (lo[idx] + hi[idx]))
        conv = np.abs(x_new - x[idx]) <= tol_rel * np.maximum(1.0, np.abs(x[idx]))
        x[idx] = x_new
        active[idx[conv]] = False
        if not np.any(active):
            return x
    raise CountMismatch("Dirichlet/Neumann phase iteration did not converge")


def _anchor_points(p: Potential, n_need: int, rtol):
    """mu_1..mu_{n_need} and nu_0..nu_{n_need} via the monotone phases.

    Returns (mu, nu, mb_mu) where mb_mu holds monodromy data at the mu_n
    (reused for state classification).
    """
    mu_guess, nu_guess = _initial_guesses(p, n_need)
    targets = np.concatenate(
        (np.pi * np.arange(1, n_need + 1), np.pi * np.arange(n_need + 1) + np.pi / 2)
    )
    kinds = np.concatenate((np.zeros(n_need, dtype=bool), np.ones(n_need + 1, dtype=bool)))
    lam = np.concatenate((mu_guess, nu_guess)).astype(float)
    width = np.maximum(1e-4, 1e-5 * np.abs(lam))
    lo = lam - width
    hi = lam + width

    kinds2 = np.concatenate((kinds, kinds))
    targets2 = np.concatenate((targets, targets))
    for _ in range(40):
        angD, dD, angN, dN = _angles(p, np.concatenate((lo, hi)), COARSE_RTOL)
        f2 = np.where(kinds2, angN, angD) - targets2
        f_lo, f_hi = np.split(f2, 2)
        bad_lo = f_lo > 0
        bad_hi = f_hi < 0
        if not (np.any(bad_lo) or np.any(bad_hi)):
            break
        width = (hi - lo) * 4.0
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
    else:
        raise CountMismatch("could not bracket the Dirichlet/Neumann phases")

    x = _phase_solve(p, targets, kinds, lo.copy(), hi.copy(), COARSE_RTOL, 1e-8)
    # fine polish at the full tolerance from a tight bracket
    w2 = 1e-7 * np.maximum(1.0, np.abs(x))
    x = _phase_solve(p, targets, kinds, x - w2, x + w2, rtol, 3e-12)

    mu = x[:n_need]
    nu = x[n_need:]
    if np.any(np.diff(mu) <= 0) or np.any(np.diff(nu) <= 0):
        raise CountMismatch("eigenvalue ordering violated: bracketing failed")
    mb_mu = mo.integrate_batch(p, mu, rtol=rtol)
    return mu, nu, mb_mu


# --- band edges ------------------------------------------------------------


def _edge_roots(p, lo, hi, f_lo_disc, parities, rtol, tol_scale=1e-12, points=14, scan_rtol=COARSE_RTOL):
    """Roots of (-1)^parity F(lambda) = 1, one sign change per bracket.

    Multi-point bracket subdivision (one batched integration per round) at
    the scan tolerance, ending in a bracketed Newton polish at the full
    tolerance.
    """
    m = lo.size
    if m == 0:
        return np.empty(0)
    sgn = np.asarray([(-1.0) ** k for k in parities])
    s_lo = np.sign(sgn * f_lo_disc - 1.0)
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    offsets = np.arange(1, points + 1) / (points + 1.0)
    for _ in range(80):
        if np.all(hi - lo <= 1e-4 * np.maximum(1.0, np.abs(hi))):
            return _edge_newton(p, lo, hi, s_lo, sgn, rtol, tol_scale)
        grid = lo[:, None] + (hi - lo)[:, None] * offsets
        mb = mo.integrate_batch(p, grid.ravel(), rtol=scan_rtol)
        fv = sgn[:, None] * mb.discriminant.reshape(m, points) - 1.0
        signs = np.sign(fv)
        flip = (signs != s_lo[:, None]) & (signs != 0)
        first = np.argmax(flip, axis=1)
        has = flip.any(axis=1)
        new_lo = np.where(
            first > 0, np.take_along_axis(grid, np.maximum(first - 1, 0)[:, None], 1)[:, 0], lo
        )
        new_lo = np.where(has, new_lo, grid[:, -1])
        new_hi = np.where(has, np.take_along_axis(grid, first[:, None], 1)[:, 0], hi)
        lo, hi = new_lo, new_hi
    return 0.5 * (lo + hi)


def _edge_newton(p, lo, hi, s_lo, sgn, rtol, tol_scale):
    """Bracketed Newton; falls back to bisection whenever the Newton step
    escapes (the discriminant has interior critical points in flat gaps)."""
    x = 0.5 * (lo + hi)
    active = np.ones(x.size, dtype=bool)
    for _ in range(60):
        idx = np.nonzero(active)[0]
        mb = mo.integrate_batch(p, x[idx], rtol=rtol)
        g = sgn[idx] * mb.discriminant - 1.0
        dg = sgn[idx] * mb.discriminant_lam
        left = np.sign(g) == s_lo[idx]
        lo[idx] = np.where(left, x[idx], lo[idx])
        hi[idx] = np.where(~left, x[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x[idx] - g / dg
        ok = (x_new > lo[idx]) & (x_new < hi[idx]) & np.isfinite(x_new)
        x_new = np.where(ok, x_new, 0.5 * (lo[idx] + hi[idx]))
        scale = tol_scale * np.maximum(1.0, np.abs(x[idx]))
        conv = (np.abs(x_new - x[idx]) <= scale) | ((hi[idx] - lo[idx]) <= 4.0 * scale)
        x[idx] = x_new
        active[idx[conv]] = False
        if not np.any(active):
            return x
    return x


# --- main computation ------------------------------------------------------


_PROBE_FRACS = (0.0, 1e-7, -1e-7, 1e-4, -1e-4, 0.02, -0.02, 0.1, -0.1, 0.25, -0.25, 0.45, -0.45)


def _gap_interiors(p, hull_lo, hull_hi, lam_min, N):
    """One interior point per gap, or nan where the gap is unresolvable.

    Probes a ladder of candidates around the [mu, nu] hull of each gap;
    (-1)^n F > 1 identifies points inside gap n unambiguously because the
    probes stay between the neighbouring hulls.  Gaps where no probe beats
    the coarse integration noise cannot be resolved through F -+ 1.
    """
    n_need = hull_lo.size
    spacing_r = np.empty(n_need)
    spacing_r[:-1] = hull_lo[1:] - hull_hi[:-1]
    spacing_r[-1] = max(1.0, math.pi**2 * (2 * (N + 1) + 1))
    spacing_l = np.empty(n_need)
    spacing_l[0] = hull_lo[0] - lam_min
    spacing_l[1:] = hull_lo[1:] - hull_hi[:-1]
    fr = np.asarray(_PROBE_FRACS)
    probes = np.where(
        fr == 0.0,
        0.5 * (hull_lo + hull_hi)[:, None],
        np.where(
            fr > 0,
            hull_hi[:, None] + fr * spacing_r[:, None],
            hull_lo[:, None] + fr * spacing_l[:, None],
        ),
    )
    mb = mo.integrate_batch(p, probes.ravel(), rtol=mo.RTOL)
    F = mb.discriminant.reshape(n_need, fr.size)
    parity = (-1.0) ** np.arange(1, n_need + 1)
    excess = parity[:, None] * F - 1.0
    noise = 200.0 * mo.RTOL * np.maximum(1.0, np.abs(F))
    valid = excess > noise
    score = np.where(valid, excess, -np.inf)
    best = np.argmax(score, axis=1)
    has = valid[np.arange(n_need), best]
    centers = np.where(has, probes[np.arange(n_need), best], np.nan)
    center_F = np.where(has, F[np.arange(n_need), best], np.nan)
    best_excess = np.where(has, score[np.arange(n_need), best], np.nan)
    return centers, center_F, best_excess


def band_structure(p: Potential, N: int, rtol: float = mo.RTOL) -> BandStructure:
    """Spectral data for gaps 1..N plus the band ending at lambda_{N+1}^-."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n_need = N + 1
    mu, nu, mb_mu = _anchor_points(p, n_need, rtol)

    hull_lo = np.minimum(mu, nu[1:])
    hull_hi = np.maximum(mu, nu[1:])
    lam_min = -p.sup_norm_bound - 1.0

    centers, center_F, center_excess = _gap_interiors(p, hull_lo, hull_hi, lam_min, N)
    resolved = np.isfinite(centers)
    # gaps whose discriminant excess sits within two decades of the coarse
    # scan noise need the full tolerance even during bracketing
    delicate = resolved & (center_excess < 100.0 * COARSE_RTOL * np.maximum(1.0, np.abs(center_F)))
    merge_tol = EDGE_MERGE_REL * np.maximum(1.0, np.abs(hull_lo))

    # neighbour anchors: interior point where available, hull midpoint
    # otherwise (F there is within noise of (-1)^n, still a strict sign
    # anchor for the adjacent parities)
    anchor_x = np.where(resolved, centers, 0.5 * (hull_lo + hull_hi))
    anchor_Fv = np.empty(n_need)
    if np.all(resolved):
        anchor_Fv = center_F.copy()
    else:
        need = 0.5 * (hull_lo + hull_hi)[~resolved]
        mb_f = mo.integrate_batch(p, need, rtol=rtol)
        anchor_Fv[resolved] = center_F[resolved]
        anchor_Fv[~resolved] = mb_f.discriminant
    x_anchor = np.concatenate(([lam_min], anchor_x))
    F_anchor = np.concatenate(
        (mo.integrate_batch(p, [lam_min], rtol=rtol).discriminant, anchor_Fv)
    )

    t_lo, t_hi, t_flo, t_par, t_tag, t_fine = [], [], [], [], [], []

    def add(lo_v, hi_v, flo_v, par, tag, fine):
        t_lo.append(lo_v)
        t_hi.append(hi_v)
        t_flo.append(flo_v)
        t_par.append(par)
        t_tag.append(tag)
        t_fine.append(fine)

    add(x_anchor[0], x_anchor[1], F_anchor[0], 0, ("edge0", 0), False)
    for n in range(1, n_need + 1):
        if not resolved[n - 1]:
            continue
        fine = bool(delicate[n - 1])
        add(x_anchor[n - 1], centers[n - 1], F_anchor[n - 1], n, ("lo", n), fine)
        if n <= N:
            add(centers[n - 1], x_anchor[n + 1], center_F[n - 1], n, ("hi", n), fine)

    # near-double roots amplify integration noise by 1/|dF/dlambda|; the
    # delicate group runs at a tighter tolerance throughout
    fine_rtol = min(rtol, 2e-13)
    roots = np.empty(len(t_lo))
    t_fine = np.asarray(t_fine, dtype=bool)
    for fine_mask, use_rtol, scan_rtol in (
        (~t_fine, rtol, COARSE_RTOL),
        (t_fine, fine_rtol, fine_rtol),
    ):
        idx = np.nonzero(fine_mask)[0]
        if idx.size == 0:
            continue
        roots[idx] = _edge_roots(
            p,
            np.asarray(t_lo, dtype=float)[idx],
            np.asarray(t_hi, dtype=float)[idx],
            np.asarray(t_flo, dtype=float)[idx],
            [t_par[i] for i in idx],
            use_rtol,
            scan_rtol=scan_rtol,
        )

    lambda0 = math.nan
    gap_lo = hull_lo.copy()
    gap_hi = hull_hi.copy()
    next_band_end = hull_lo[n_need - 1] if not resolved[n_need - 1] else math.nan
    for (kind, n), val in zip(t_tag, roots):
        if kind == "edge0":
            lambda0 = float(val)
        elif kind == "lo" and n <= N:
            gap_lo[n - 1] = val
        elif kind == "hi":
            gap_hi[n - 1] = val
        else:
            next_band_end = float(val)

    # containment guarantees: mu_n, nu_n in [lambda_n^-, lambda_n^+].  The
    # anchors are simple well-conditioned roots, so they win over edge noise.
    gap_lo = np.minimum(gap_lo[:N], hull_lo[:N])
    gap_hi = np.maximum(gap_hi[:N], hull_hi[:N])

    # collapse point-like gaps and anything below the merge tolerance
    closed_flags = np.zeros(N, dtype=bool)
    for i in range(N):
        if (not resolved[i] or (gap_hi[i] - gap_lo[i]) < merge_tol[i]) and (
            hull_hi[i] - hull_lo[i]
        ) < merge_tol[i]:
            mid = 0.5 * (hull_lo[i] + hull_hi[i])
            gap_lo[i] = gap_hi[i] = mid
            closed_flags[i] = True
    # exponentially thin bands can make consecutive edges collide at double
    # precision; clamp to a monotone sequence
    if lambda0 > gap_lo[0]:
        if lambda0 - gap_lo[0] > 1e-8 * max(1.0, abs(lambda0)):
            raise BracketFailure("lambda_0^+ is not below the first gap")
        lambda0 = gap_lo[0]
    for i in range(N - 1):
        if gap_hi[i] > gap_lo[i + 1]:
            if gap_hi[i] - gap_lo[i + 1] > 1e-8 * max(1.0, abs(gap_hi[i])):
                raise BracketFailure("band edges out of order")
            gap_lo[i + 1] = gap_hi[i]
    next_band_end = max(next_band_end, gap_hi[N - 1])

    states = []
    xi = np.empty((N, 2))
    for n in range(1, N + 1):
        i = n - 1
        mu_n = float(mu[i])
        a_n = float(mb_mu.a_value[i])
        F_n = float(mb_mu.discriminant[i])
        phl_n = float(mb_mu.phi_lam[i])
        width = gap_hi[i] - gap_lo[i]
        if closed_flags[i]:
            sign = 0
            mu_n = gap_lo[i]
        else:
            edge_dist = min(mu_n - gap_lo[i], gap_hi[i] - mu_n)
            # |a(mu)| = sqrt(F^2 - 1) at the Dirichlet point measures the
            # sheet distance; it is well-conditioned even for tiny gaps
            if abs(a_n) <= VIRTUAL_A_TOL * max(1.0, abs(F_n)) or (
                edge_dist < VIRTUAL_EDGE_REL * width and abs(a_n) <= 1e-6 * max(1.0, abs(F_n))
            ):
                sign = 0
            elif a_n * (-1.0) ** (n + 1) > 0:
                sign = +1
            else:
                sign = -1
        states.append(GapState(n, mu_n, sign, bool(closed_flags[i]), a_n, F_n, phl_n))
        xi1 = 0.5 * (gap_lo[i] + gap_hi[i]) - mu_n
        xi2 = math.sqrt(abs(0.25 * width**2 - xi1**2)) * sign
        xi[i] = (xi1, xi2)

    return BandStructure(
        potential=p,
        n_gaps=N,
        lambda0=float(lambda0),
        gap_lo=gap_lo,
        gap_hi=gap_hi,
        next_band_end=float(next_band_end),
        dirichlet=mu[:N].copy(),
        neumann=nu[: N + 1].copy(),
        states=tuple(states),
        xi=xi,
    )


def band_edges(p: Potential, N: int, rtol: float = mo.RTOL) -> BandStructure:
    """Edges for gaps 1..N (classification comes along for free)."""
    return band_structure(p, N, rtol=rtol)


def dirichlet_eigs(p: Potential, N: int, rtol: float = mo.RTOL) -> np.ndarray:
    """mu_1 .. mu_N."""
    mu, _, _ = _anchor_points(p, N, rtol)
    return mu


def neumann_eigs(p: Potential, N: int, rtol: float = mo.RTOL) -> np.ndarray:
    """nu_0 .. nu_N (N+1 values)."""
    _, nu, _ = _anchor_points(p, N, rtol)
    return nu


def classify_states(p: Potential, N: int, rtol: float = mo.RTOL) -> list[tuple[float, int]]:
    """Per gap: (mu_n, sign_n); closed gaps report sign 0."""
    bs = band_structure(p, N, rtol=rtol)
    return [(s.mu, s.sign) for s in bs.states]


def xi_map(p: Potential, N: int, rtol: float = mo.RTOL) -> np.ndarray:
    """Rows (xi_1n, xi_2n) for n = 1..N."""
    bs = band_structure(p, N, rtol=rtol)
    return bs.xi
