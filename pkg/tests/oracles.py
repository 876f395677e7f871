"""Independent reference computations used only by the tests.

The fixed-step fourth-order integrator below shares no code with the
adaptive engine in the package; it is the oracle the monodromy outputs are
checked against.
"""

import numpy as np


def rk4_monodromy(p, lam, nsteps=8192):
    """Fundamental pair + lambda-derivatives at x = 1, classical RK4.

    For piecewise-constant potentials each piece is integrated separately
    (otherwise the stage evaluations straddling a jump degrade the order).
    """
    u = np.zeros(8)
    u[0] = 1.0  # theta(0)
    u[3] = 1.0  # phi'(0)

    if p.piecewise:
        cuts = sorted({(s.lo - p.shift) % 1.0 for s in p.piecewise} | {0.0, 1.0})
        if cuts[-1] < 1.0:
            cuts.append(1.0)
        segments = [
            (a, b, p.evaluate(0.5 * (a + b)))
            for a, b in zip(cuts, cuts[1:])
            if b - a > 1e-15
        ]
    else:
        segments = [(0.0, 1.0, None)]

    for a, b, v_const in segments:
        n = max(8, int(round(nsteps * (b - a))))
        h = (b - a) / n

        def f(x, u):
            w = (v_const if v_const is not None else p.evaluate(x)) - lam
            return np.array(
                [
                    u[1],
                    w * u[0],
                    u[3],
                    w * u[2],
                    u[5],
                    w * u[4] - u[0],
                    u[7],
                    w * u[6] - u[2],
                ]
            )

        x = a
        for _ in range(n):
            k1 = f(x, u)
            k2 = f(x + h / 2, u + h / 2 * k1)
            k3 = f(x + h / 2, u + h / 2 * k2)
            k4 = f(x + h, u + h * k3)
            u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            x += h
    return u


def dense_spectrum_samples(bands, eigenvalues, step):
    """Point samples of a 1D spectrum: band grids plus eigenvalues."""
    pts = []
    for lo, hi in bands:
        if not np.isfinite(hi):
            hi = lo + 3.0
        n = max(2, int(np.ceil((hi - lo) / step)) + 1)
        pts.extend(np.linspace(lo, hi, n))
    pts.extend(eigenvalues)
    return np.asarray(pts)
