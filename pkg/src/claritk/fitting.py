"""Damped Gauss-Newton (Levenberg-Marquardt style) least squares.

Used by the Takacs settling fit and the Herschel-Bulkley rheology fit, both
of which wrap it with positivity-enforcing parameterizations. Small and
dependency-free on purpose: three-parameter problems do not need a general
optimization stack.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class LeastSquaresResult:
    theta: np.ndarray
    residual_norm: float
    converged: bool
    n_iter: int


def _numeric_jacobian(fun, theta, r0):
    m, p = r0.size, theta.size
    jac = np.empty((m, p))
    for j in range(p):
        h = 1e-7 * max(abs(theta[j]), 1.0)
        tp = theta.copy()
        tp[j] += h
        jac[:, j] = (fun(tp) - r0) / h
    return jac


def least_squares(fun, theta0, jac=None, max_iter=200, tol=1e-10):
    """Minimize ||fun(theta)||^2 by damped Gauss-Newton steps.

    Converged when both the step norm and the gradient norm drop below
    ``tol`` (relative to the parameter scale); otherwise the best iterate is
    returned with ``converged=False`` after ``max_iter`` iterations.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    r = fun(theta)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jmat = jac(theta) if jac is not None else _numeric_jacobian(fun, theta, r)
        g = jmat.T @ r
        jtj = jmat.T @ jmat
        scale = max(1.0, float(np.linalg.norm(theta)))
        if np.linalg.norm(g) < tol * max(1.0, cost):
            converged = True
            break
        stepped = False
        for _ in range(50):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-30), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = fun(theta + step)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                theta += step
                r, cost = r_new, cost_new
                lam = max(lam / 3.0, 1e-14)
                stepped = True
                break
            lam *= 4.0
        if not stepped:
            break
        if np.linalg.norm(step) < tol * scale and np.linalg.norm(g) < tol * max(1.0, cost):
            converged = True
            break
    return LeastSquaresResult(theta, float(np.sqrt(cost)), converged, it)


def ols_line(x, y):
    """Ordinary least squares of y = a + b x; returns (a, b, r2, ss_res).

    ``r2`` is 1.0 by convention when the fit is exact and the y-variance is
    zero (two points, or constant y matched exactly).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    sx, sy = x.sum(), y.sum()
    sxx, sxy, syy = (x * x).sum(), (x * y).sum(), (y * y).sum()
    det = n * sxx - sx * sx
    if det == 0:
        raise ZeroDivisionError("all x identical")
    b = (n * sxy - sx * sy) / det
    a = (sy - b * sx) / n
    resid = y - (a + b * x)
    ss_res = float(resid @ resid)
    ss_tot = float(syy - sy * sy / n)
    if ss_tot <= 0:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return a, b, r2, ss_res
