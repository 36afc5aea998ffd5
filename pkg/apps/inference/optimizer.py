"""
Damped least-squares (Levenberg-Marquardt) engine shared by every model fit.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

LAMBDA_INITIAL = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 10.0
LAMBDA_MAX = 1e16
STEP_RTOL = 1e-10
MAX_ITERATIONS = 200
SSE_FLOOR_RTOL = 1e-24

STOP_SSE_FLOOR = 'sse-floor'
STOP_STEP = 'step'
STOP_STALLED = 'stalled'
STOP_MAX_ITERATIONS = 'max-iterations'


@dataclass(eq=False)
class LMSolution:
    params: np.ndarray
    jacobian: np.ndarray
    sse: float
    initial_sse: float
    n_iterations: int
    converged: bool
    n_points: int
    stop_reason: str = STOP_MAX_ITERATIONS

    def covariance(self):
        """(J^T J)^-1 scaled by the residual variance SSE / (n - p)."""
        n_params = len(self.params)
        dof = self.n_points - n_params
        scale = self.sse / dof if dof > 0 else 0.0
        return np.linalg.pinv(self.jacobian.T @ self.jacobian) * scale

    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance()), 0.0, None))


def numerical_jacobian(model, params, x):
    """Forward-difference Jacobian of model(x, params)."""
    base = model(x, params)
    jac = np.empty((len(base), len(params)))
    for k in range(len(params)):
        h = 1e-7 * max(abs(params[k]), 1e-12)
        shifted = params.copy()
        shifted[k] += h
        jac[:, k] = (model(x, shifted) - base) / h
    return jac


def _solve_damped(A, g, lam):
    diag = np.diag(A).copy()
    diag[diag <= 0] = 1.0
    try:
        return np.linalg.solve(A + lam * np.diag(diag), -g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A + lam * np.diag(diag), -g, rcond=None)[0]


def levenberg_marquardt(model, x, y, p0, jacobian=None, max_iterations=MAX_ITERATIONS, step_rtol=STEP_RTOL):
    """
    Minimize sum((model(x, p) - y)^2) from p0.

    Marquardt scaling with diag(J^T J); lambda starts at 1e-3, grows x10 on a
    rejected step and shrinks /10 on an accepted one. Converged when every
    parameter step is below step_rtol relative to the parameter, or at once
    when the residual is already at the floor SSE_FLOOR_RTOL * sum(y^2)
    (an exact guess, for instance).

    Returns:
        LMSolution: best parameters found and the stop_reason; converged
        False after max_iterations without meeting a stop criterion
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    jac_fn = jacobian or (lambda xs, ps: numerical_jacobian(model, ps, xs))

    r = model(x, p) - y
    sse = float(r @ r)
    initial_sse = sse
    sse_floor = SSE_FLOOR_RTOL * float(y @ y)
    lam = LAMBDA_INITIAL
    converged = sse <= sse_floor
    reason = STOP_SSE_FLOOR if converged else STOP_MAX_ITERATIONS
    iteration = 0

    while not converged and iteration < max_iterations:
        iteration += 1
        J = jac_fn(x, p)
        A = J.T @ J
        g = J.T @ r

        while True:
            step = _solve_damped(A, g, lam)
            candidate = p + step
            r_new = model(x, candidate) - y
            sse_new = float(r_new @ r_new)
            if np.isfinite(sse_new) and sse_new <= sse:
                break
            lam *= LAMBDA_UP
            if lam > LAMBDA_MAX:
                break

        if lam > LAMBDA_MAX:
            # no descent left at working precision
            converged, reason = True, STOP_STALLED
            break

        p, r, sse = candidate, r_new, sse_new
        lam = max(lam / LAMBDA_DOWN, 1e-300)
        if sse <= sse_floor:
            converged, reason = True, STOP_SSE_FLOOR
        elif np.all(np.abs(step) <= step_rtol * (np.abs(p) + step_rtol)):
            converged, reason = True, STOP_STEP

    if not converged:
        logger.warning("Least squares did not converge in %d iterations (SSE %.3e)", iteration, sse)
    logger.debug("LM finished (%s): %d iterations, SSE %.3e -> %.3e", reason, iteration, initial_sse, sse)
    return LMSolution(
        params=p,
        jacobian=jac_fn(x, p),
        sse=sse,
        initial_sse=initial_sse,
        n_iterations=iteration,
        converged=converged,
        n_points=len(y),
        stop_reason=reason,
    )
