"""Monodromy of -y'' + v y = lambda y over one period.

Integrates the canonical fundamental pair theta, phi (theta(0)=1,
theta'(0)=0, phi(0)=0, phi'(0)=1) together with their lambda-derivatives
(which satisfy the same equation forced by -y) and exposes the Lyapunov
function F = (phi'(1) + theta(1))/2, the auxiliary a = (phi'(1) -
theta(1))/2, the gap branch b and the Weyl function m_+.

Two evaluation routes:
  * Fourier-form potentials: adaptive embedded Runge-Kutta (Verner 6(5)
    pair) on the coupled 8-dimensional system, vectorized over a batch of
    energies; per-step tolerance 1e-12 relative / 1e-13 absolute.
  * Piecewise-constant (and constant) potentials: exact per-segment
    transfer matrices with derivatives by the product rule.

The batch integrator can also count sign changes of phi and theta' along
[0, 1], which gives Sturm oscillation counts for Dirichlet and Neumann
eigenvalue bracketing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput, OutsideGap, PoleAt, StepUnderflow
from .potential import Potential

__all__ = [
    "MonodromyData",
    "MonodromyBatch",
    "integrate",
    "integrate_batch",
    "discriminant",
    "branch_b",
    "m_plus",
    "m_plus_batch",
]

RTOL = 1e-12
ATOL = 1e-13

# Verner's 6(5) "most robust" embedded pair, nine stages.
_C = np.array([0.0, 9 / 50, 1 / 6, 1 / 4, 53 / 100, 3 / 5, 4 / 5, 1.0, 1.0])
_A = [
    [],
    [9 / 50],
    [29 / 324, 25 / 324],
    [1 / 16, 0.0, 3 / 16],
    [79129 / 250000, 0.0, -261237 / 250000, 19663 / 15625],
    [1336883 / 4909125, 0.0, -25476 / 30875, 194159 / 185250, 8225 / 78546],
    [-2459386 / 14727375, 0.0, 19504 / 30875, 2377474 / 13615875, -6157250 / 5773131, 902 / 735],
    [2699 / 7410, 0.0, -252 / 1235, -1393253 / 3993990, 236875 / 72618, -135 / 49, 15 / 22],
    [11 / 144, 0.0, 0.0, 256 / 693, 0.0, 125 / 504, 125 / 528, 5 / 72],
]
_B = np.array([11 / 144, 0.0, 0.0, 256 / 693, 0.0, 125 / 504, 125 / 528, 5 / 72, 0.0])
_BHAT = np.array(
    [28 / 477, 0.0, 0.0, 212 / 441, -312500 / 366177, 2125 / 1764, 0.0, -2105 / 35532, 2995 / 17766]
)
_ERR = _B - _BHAT
_ORDER_EXP = 1.0 / 6.0


@dataclass(frozen=True)
class MonodromyData:
    """Values and lambda-derivatives of the fundamental pair at x = 1."""

    lam: float
    theta_1: float
    theta_prime_1: float
    phi_1: float
    phi_prime_1: float
    theta_lam: float
    theta_prime_lam: float
    phi_lam: float
    phi_prime_lam: float

    @property
    def discriminant(self) -> float:
        return 0.5 * (self.phi_prime_1 + self.theta_1)

    @property
    def a_value(self) -> float:
        return 0.5 * (self.phi_prime_1 - self.theta_1)

    @property
    def discriminant_lam(self) -> float:
        return 0.5 * (self.phi_prime_lam + self.theta_lam)

    @property
    def a_lam(self) -> float:
        return 0.5 * (self.phi_prime_lam - self.theta_lam)

    @property
    def wronskian(self) -> float:
        return self.theta_1 * self.phi_prime_1 - self.theta_prime_1 * self.phi_1


class MonodromyBatch:
    """Structure-of-arrays monodromy data for a vector of energies.

    Deep potentials can push the fundamental solutions past the float64
    range; the integrator then renormalizes the state and accumulates
    `log_scale`, so the stored components are the true values times
    e^{-log_scale}.  Scale-free consumers (Prufer angles, sheet signs,
    ratios like the m_+ residue) use the components directly; absolute
    quantities re-apply the factor and saturate at +-inf when it cannot
    be represented.
    """

    def __init__(
        self, lams, state, phi_zeros=None, theta_zeros=None, checkpoints=None, log_scale=None
    ):
        self.lams = lams
        self.theta_1 = state[0]
        self.theta_prime_1 = state[1]
        self.phi_1 = state[2]
        self.phi_prime_1 = state[3]
        self.theta_lam = state[4]
        self.theta_prime_lam = state[5]
        self.phi_lam = state[6]
        self.phi_prime_lam = state[7]
        self.phi_zeros = phi_zeros
        self.theta_zeros = theta_zeros
        self.checkpoints = checkpoints
        self.log_scale = np.zeros(np.atleast_1d(lams).size) if log_scale is None else log_scale

    def _rescale(self, values):
        with np.errstate(over="ignore"):
            return values * np.exp(np.minimum(self.log_scale, 710.0))

    @property
    def discriminant(self):
        return self._rescale(0.5 * (self.phi_prime_1 + self.theta_1))

    @property
    def a_value(self):
        return self._rescale(0.5 * (self.phi_prime_1 - self.theta_1))

    @property
    def a_sign(self):
        """Sign of a = (phi'(1) - theta(1))/2, valid at any scale."""
        return np.sign(self.phi_prime_1 - self.theta_1)

    @property
    def discriminant_lam(self):
        return self._rescale(0.5 * (self.phi_prime_lam + self.theta_lam))

    @property
    def wronskian(self):
        return self._rescale(
            self._rescale(self.theta_1 * self.phi_prime_1 - self.theta_prime_1 * self.phi_1)
        )

    def item(self, i: int) -> MonodromyData:
        s = math.exp(min(float(self.log_scale[i]), 710.0))
        return MonodromyData(
            float(self.lams[i]),
            float(self.theta_1[i]) * s,
            float(self.theta_prime_1[i]) * s,
            float(self.phi_1[i]) * s,
            float(self.phi_prime_1[i]) * s,
            float(self.theta_lam[i]) * s,
            float(self.theta_prime_lam[i]) * s,
            float(self.phi_lam[i]) * s,
            float(self.phi_prime_lam[i]) * s,
        )


def _initial_state(n: int) -> np.ndarray:
    u = np.zeros((8, n))
    u[0] = 1.0  # theta(0)
    u[3] = 1.0  # phi'(0)
    return u


# --- adaptive Runge-Kutta route (Fourier potentials) ----------------------

_A_MAT = np.zeros((9, 9))
for _i, _row in enumerate(_A):
    _A_MAT[_i, : len(_row)] = _row


def _rhs_into(out, u, w):
    """du for the coupled fundamental + variational system, in place."""
    out[0::2] = u[1::2]
    np.multiply(w, u[0::2], out=out[1::2])
    out[5] -= u[0]
    out[7] -= u[2]


def _rk_segment(p, lams, u, x0, x1, rtol, atol, trackers, log_scale):
    """Advance the batch state from x0 to x1 with embedded RK steps.

    Columns whose magnitude passes 1e120 are renormalized, with the factor
    recorded in log_scale (deep potentials grow like e^{sqrt(v - lambda)}).
    """
    n = lams.size
    k = np.empty((9, 8, n))
    kf = k.reshape(9, 8 * n)
    scale0 = math.sqrt(max(1.0, p.sup_norm_bound + float(np.max(np.abs(lams)))))
    h = min(0.1, (x1 - x0), 0.5 / scale0)
    x = x0
    while x < x1 - 1e-15:
        h = min(h, x1 - x)
        vs = p.evaluate(x + _C * h)
        _rhs_into(k[0], u, vs[0] - lams)
        for i in range(1, 9):
            ui = u + h * (_A_MAT[i, :i] @ kf[:i]).reshape(8, n)
            _rhs_into(k[i], ui, vs[i] - lams)
        u_new = u + h * (_B @ kf).reshape(8, n)
        err = h * (_ERR @ kf).reshape(8, n)
        tol = atol + rtol * np.maximum(np.abs(u), np.abs(u_new))
        ratio = float(np.max(np.abs(err) / tol))
        if not math.isfinite(ratio):
            raise StepUnderflow(f"non-finite state during integration near x={x:.6g}")
        if ratio <= 1.0:
            x += h
            if trackers is not None:
                trackers.update(u_new)
            m = np.max(np.abs(u_new), axis=0)
            big = m > 1e120
            if np.any(big):
                f = np.where(big, m, 1.0)
                u_new = u_new / f
                log_scale += np.log(f)
            u = u_new
        factor = 0.9 * ratio ** -_ORDER_EXP if ratio > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < 1e-14:
            raise StepUnderflow(f"step size underflow at x={x:.6g}")
    return u


class _SignTrackers:
    """Counts sign changes of phi (row 2) and theta (row 0) between steps.

    Solutions of a second-order ODE have simple zeros, and the Prufer phase
    crosses multiples of pi strictly upward, so sign changes at the accepted
    step endpoints count zeros exactly as long as steps stay well below one
    oscillation period (guaranteed by the per-step tolerance).
    """

    def __init__(self, n: int):
        # phi leaves 0 with slope phi'(0) = 1, theta starts at theta(0) = 1
        self.phi_sign = np.ones(n)
        self.phi_count = np.zeros(n, dtype=int)
        self.theta_sign = np.ones(n)
        self.theta_count = np.zeros(n, dtype=int)

    def update(self, u: np.ndarray) -> None:
        s = np.sign(u[2])
        self.phi_count += (self.phi_sign * s) < 0
        self.phi_sign = np.where(s != 0, s, self.phi_sign)
        s = np.sign(u[0])
        self.theta_count += (self.theta_sign * s) < 0
        self.theta_sign = np.where(s != 0, s, self.theta_sign)


# --- exact transfer-matrix route (piecewise-constant potentials) ----------


def _cs_functions(q, length):
    """C, S, dC/dq, dS/dq for y'' = q y over an interval of given length.

    C and S are the cos/cosh- and sin/sinh-type entries of the transfer
    matrix [[C, S], [q S, C]]; formulas are branch-uniform in q.
    """
    q = np.asarray(q, dtype=float)
    L = length
    out_c = np.empty_like(q)
    out_s = np.empty_like(q)
    pos = q > 0
    neg = q < 0
    zer = ~(pos | neg)
    if np.any(pos):
        s = np.sqrt(q[pos])
        out_c[pos] = np.cosh(s * L)
        out_s[pos] = np.sinh(s * L) / s
    if np.any(neg):
        w = np.sqrt(-q[neg])
        out_c[neg] = np.cos(w * L)
        out_s[neg] = np.sin(w * L) / w
    if np.any(zer):
        out_c[zer] = 1.0
        out_s[zer] = L
    dc = 0.5 * L * out_s
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = np.where(zer, L**3 / 6.0, (L * out_c - out_s) / (2.0 * np.where(zer, 1.0, q)))
    return out_c, out_s, dc, ds


def _transfer_route(p, lams, count_zeros, checkpoints):
    """Exact monodromy for piecewise-constant potentials."""
    lams = np.asarray(lams, dtype=float)
    n = lams.size
    segments = p.piecewise or ()
    if not segments:
        pieces = [(0.0, 1.0, p.constant)]
    else:
        # shift moves the sampling window; cut [0,1] at the shifted breakpoints
        t = p.shift
        cuts = sorted({(s.lo - t) % 1.0 for s in segments} | {0.0, 1.0})
        if cuts[-1] < 1.0:
            cuts.append(1.0)
        pieces = []
        for lo, hi in zip(cuts, cuts[1:]):
            if hi - lo < 1e-15:
                continue
            pieces.append((lo, hi, p.evaluate(0.5 * (lo + hi))))

    xs = [0.0]
    vals = []
    for lo, hi, v in pieces:
        xs.append(hi)
        vals.append(v)
    if checkpoints:
        # split pieces further at requested checkpoints
        marks = sorted(set(checkpoints))
        new_pieces = []
        for lo, hi, v in pieces:
            inner = [m for m in marks if lo < m < hi]
            edges = [lo] + inner + [hi]
            for a, b in zip(edges, edges[1:]):
                new_pieces.append((a, b, v))
        pieces = new_pieces

    M = np.zeros((2, 2, n))
    M[0, 0] = 1.0
    M[1, 1] = 1.0
    D = np.zeros((2, 2, n))
    log_scale = np.zeros(n)
    phi_count = np.zeros(n, dtype=int) if count_zeros else None
    thp_count = np.zeros(n, dtype=int) if count_zeros else None
    snap = {} if checkpoints else None

    for lo, hi, v in pieces:
        # long forbidden stretches overflow cosh; split so each sub-piece
        # grows at most e^200 and renormalize in between
        q_max = float(np.max(v - lams))
        growth = math.sqrt(max(q_max, 0.0)) * (hi - lo)
        parts = max(1, int(math.ceil(growth / 200.0)))
        sub = np.linspace(lo, hi, parts + 1)
        for a_pt, b_pt in zip(sub, sub[1:]):
            L = b_pt - a_pt
            q = v - lams
            C, S, dC, dS = _cs_functions(q, L)
            if count_zeros:
                _count_piece_zeros(q, L, M, phi_count, thp_count)
            qS = q * S
            dqS = S + q * dS
            # T = [[C, S], [qS, C]]; dT/dlam = -dT/dq
            M00, M01, M10, M11 = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
            D00, D01, D10, D11 = D[0, 0], D[0, 1], D[1, 0], D[1, 1]
            nM = np.empty_like(M)
            nM[0, 0] = C * M00 + S * M10
            nM[0, 1] = C * M01 + S * M11
            nM[1, 0] = qS * M00 + C * M10
            nM[1, 1] = qS * M01 + C * M11
            nD = np.empty_like(D)
            nD[0, 0] = C * D00 + S * D10 - (dC * M00 + dS * M10)
            nD[0, 1] = C * D01 + S * D11 - (dC * M01 + dS * M11)
            nD[1, 0] = qS * D00 + C * D10 - (dqS * M00 + dC * M10)
            nD[1, 1] = qS * D01 + C * D11 - (dqS * M01 + dC * M11)
            M, D = nM, nD
            m_abs = np.maximum(np.max(np.abs(M), axis=(0, 1)), np.max(np.abs(D), axis=(0, 1)))
            big = m_abs > 1e120
            if np.any(big):
                f = np.where(big, m_abs, 1.0)
                M = M / f
                D = D / f
                log_scale += np.log(f)
        if checkpoints and any(abs(hi - m) < 1e-14 for m in checkpoints):
            snap[round(hi, 12)] = _pack_state(M, D)

    state = _pack_state(M, D)
    return state, phi_count, thp_count, snap, log_scale


def _pack_state(M, D):
    # columns of M are (theta, theta') and (phi, phi')
    state = np.empty((8, M.shape[2]))
    state[0] = M[0, 0]
    state[1] = M[1, 0]
    state[2] = M[0, 1]
    state[3] = M[1, 1]
    state[4] = D[0, 0]
    state[5] = D[1, 0]
    state[6] = D[0, 1]
    state[7] = D[1, 1]
    return state


def _count_piece_zeros(q, L, M, phi_count, theta_count):
    """Add the zeros of phi and theta inside one constant piece."""
    th0, thp0 = M[0, 0], M[1, 0]
    ph0, php0 = M[0, 1], M[1, 1]
    osc = q < 0
    if np.any(osc):
        w = np.sqrt(-q[osc])
        # y(xi) = R sin(w xi + delta): zeros where the phase crosses k*pi
        for y0, yp0, cnt in ((ph0, php0, phi_count), (th0, thp0, theta_count)):
            delta = np.arctan2(y0[osc], yp0[osc] / w)
            lo = delta / np.pi
            hi = (w * L + delta) / np.pi
            cnt[osc] += (np.floor(hi + 1e-12) - np.floor(lo + 1e-12)).astype(int)
    fb = ~osc
    if np.any(fb):
        C, S, _, _ = _cs_functions(q[fb], L)
        ph1 = C * ph0[fb] + S * php0[fb]
        th1 = C * th0[fb] + S * thp0[fb]
        phi_count[fb] += (ph0[fb] * ph1) < 0
        theta_count[fb] += (th0[fb] * th1) < 0


# --- public API -----------------------------------------------------------


def integrate_batch(
    p: Potential,
    lams,
    rtol: float = RTOL,
    atol: float = ATOL,
    count_zeros: bool = False,
    checkpoints=None,
) -> MonodromyBatch:
    """Monodromy data for a vector of energies in one pass."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if not np.all(np.isfinite(lams)):
        raise NonFiniteInput("lambda values must be finite")
    if p.piecewise or not p.fourier:
        state, pc, tc, snap, log_scale = _transfer_route(p, lams, count_zeros, checkpoints)
        return MonodromyBatch(lams, state, pc, tc, snap, log_scale)
    u = _initial_state(lams.size)
    log_scale = np.zeros(lams.size)
    trackers = _SignTrackers(lams.size) if count_zeros else None
    snap = {} if checkpoints else None
    stops = sorted(set(checkpoints or [])) + [1.0]
    x0 = 0.0
    for x1 in stops:
        if x1 <= x0 + 1e-15 and x1 < 1.0:
            continue
        u = _rk_segment(p, lams, u, x0, min(x1, 1.0), rtol, atol, trackers, log_scale)
        if checkpoints and x1 < 1.0:
            snap[round(x1, 12)] = u.copy()
        x0 = x1
        if x0 >= 1.0:
            break
    pc = trackers.phi_count if trackers else None
    tc = trackers.theta_count if trackers else None
    return MonodromyBatch(lams, u, pc, tc, snap, log_scale)


def integrate(p: Potential, lam: float, rtol: float = RTOL, atol: float = ATOL) -> MonodromyData:
    """Monodromy data for a single energy."""
    if not math.isfinite(lam):
        raise NonFiniteInput(f"lambda must be finite, got {lam}")
    return integrate_batch(p, [lam], rtol=rtol, atol=atol).item(0)


def discriminant(p: Potential, lam: float) -> float:
    """Lyapunov function F(lambda) = (phi'(1) + theta(1)) / 2."""
    return integrate(p, lam).discriminant


def branch_b(p: Potential, lam: float, gap_index: int, sheet: int = 1) -> float:
    """Gap branch b = (-1)^n sqrt(F^2 - 1) on sheet 1, its negative on sheet 2.

    Requires lambda in the closure of gap n, i.e. F^2 >= 1.
    """
    data = integrate(p, lam)
    return _branch_from_disc(data.discriminant, gap_index, sheet, lam)


def _branch_from_disc(F, gap_index: int, sheet: int, lam) -> float:
    excess = F * F - 1.0
    if excess < -1e-12:
        raise OutsideGap(f"F^2 - 1 = {excess:.3e} < 0 at lambda = {lam}: not in a gap")
    val = math.sqrt(max(excess, 0.0))
    b = (-1) ** gap_index * val
    return b if sheet == 1 else -b


def m_plus(p: Potential, lam: float, gap_index: int) -> float:
    """Weyl function m_+ = (a - b) / phi(1, .) with b on the physical sheet."""
    data = integrate(p, lam)
    a = data.a_value
    b = _branch_from_disc(data.discriminant, gap_index, 1, lam)
    if abs(data.phi_1) < 1e-13 * max(1.0, abs(a - b)):
        raise PoleAt(f"phi(1, {lam}) = {data.phi_1:.3e}: too close to a Dirichlet point", lam=lam)
    return (a - b) / data.phi_1


def m_plus_batch(p: Potential, lams, gap_index: int) -> np.ndarray:
    """Vectorized m_+ over energies inside one gap; no pole guard.

    Values near the Dirichlet point come out huge but correctly signed,
    which is what sign-scanning root finders need.
    """
    mb = integrate_batch(p, lams)
    F = mb.discriminant
    excess = np.maximum(F * F - 1.0, 0.0)
    b = (-1) ** gap_index * np.sqrt(excess)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (mb.a_value - b) / mb.phi_1
