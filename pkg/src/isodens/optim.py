"""Projected gradient descent with backtracking line search.

Both estimation stages minimize a smooth objective over a box (usually
nonnegativity on some coordinates). The solver enforces an Armijo
sufficient-decrease condition along the projection arc, so the trace of
accepted objective values is non-increasing by construction. A central
finite-difference gradient checker validates analytic gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

_STEP_UNDERFLOW = 1e-20


@dataclass
class SolveOptions:
    """Line-search and termination knobs.

    Attributes:
        max_iters: Iteration cap.
        grad_tol: Stop when the projected gradient norm falls below this.
        ls_shrink: Backtracking factor in (0, 1).
        ls_grow: Step recovery factor applied after an accepted step.
        armijo_c: Sufficient-decrease constant in (0, 1).
        initial_step: First trial step length.
    """

    max_iters: int = 500
    grad_tol: float = 1e-5
    ls_shrink: float = 0.5
    ls_grow: float = 2.0
    armijo_c: float = 1e-4
    initial_step: float = 1.0

    def __post_init__(self):
        if not 0 < self.ls_shrink < 1:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.initial_step <= 0 or self.ls_grow < 1:
            raise ValueError("initial_step must be positive and ls_grow >= 1")


@dataclass
class SolveResult:
    x: np.ndarray
    trace: list = field(default_factory=list)
    converged: bool = False
    status: str = ""
    n_iters: int = 0


def minimize(fun_grad, project, x0, opts=None):
    """Minimize a smooth function over a convex set given by ``project``.

    Args:
        fun_grad: Callable ``x -> (value, gradient)``.
        project: Projection onto the feasible set (identity for
            unconstrained coordinates).
        x0: Starting point; projected before the first evaluation.
        opts: SolveOptions.

    Returns:
        SolveResult whose ``trace`` lists accepted objective values,
        starting at the initial point; the list is non-increasing.

    Raises:
        SolverError: non-finite objective at the start, or a NaN
            gradient at any accepted iterate (the iterate is attached).
    """
    opts = opts or SolveOptions()
    x = project(np.asarray(x0, dtype=float).copy())
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise SolverError(f"objective not finite at the initial point ({f})", iterate=x)
    if not np.all(np.isfinite(g)):
        raise SolverError("gradient not finite at the initial point", iterate=x)
    trace = [float(f)]
    step = opts.initial_step
    status, converged = "max_iters", False
    it = 0
    for it in range(1, opts.max_iters + 1):
        pg = x - project(x - g)
        if np.linalg.norm(pg) <= opts.grad_tol:
            status, converged = "grad_tol", True
            it -= 1
            break
        accepted = False
        while step >= _STEP_UNDERFLOW:
            x_new = project(x - step * g)
            dx = x_new - x
            if not dx.any():
                step *= opts.ls_shrink
                continue
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo_c * float(g @ dx):
                accepted = True
                break
            step *= opts.ls_shrink
        if not accepted:
            status = "step_underflow"
            break
        x, f, g = x_new, f_new, g_new
        if np.any(np.isnan(g)):
            raise SolverError(f"NaN gradient at iteration {it}", iterate=x)
        trace.append(float(f))
        step *= opts.ls_grow
    return SolveResult(x=x, trace=trace, converged=converged, status=status, n_iters=it)


def check_gradient(fun_grad, x, h=1e-6, n_coords=None, seed=0):
    """Max relative error between the analytic and central-difference gradient.

    Probes all coordinates when the dimension is small, otherwise a
    random subset of ``n_coords`` (default 64). The error is scaled by
    the largest gradient magnitude seen, so a well-matched gradient on a
    reasonably scaled problem scores near machine precision.
    """
    x = np.asarray(x, dtype=float)
    _, g = fun_grad(x)
    g = np.asarray(g, dtype=float)
    dim = x.size
    if n_coords is None:
        n_coords = 64
    if dim <= n_coords:
        coords = np.arange(dim)
    else:
        coords = np.random.default_rng(seed).choice(dim, size=n_coords, replace=False)
    g_fd = np.empty(coords.size)
    flat = x.ravel()
    for out_i, i in enumerate(coords):
        e = np.zeros(dim)
        e[i] = h
        f_plus, _ = fun_grad((flat + e).reshape(x.shape))
        f_minus, _ = fun_grad((flat - e).reshape(x.shape))
        g_fd[out_i] = (f_plus - f_minus) / (2.0 * h)
    g_an = g.ravel()[coords]
    scale = max(np.max(np.abs(g_fd)), np.max(np.abs(g_an)), 1e-300)
    return float(np.max(np.abs(g_an - g_fd)) / scale)


def nonneg(x):
    """Projection onto the nonnegative orthant."""
    return np.maximum(x, 0.0)


def box_projector(lower_mask):
    """Projection clamping only the coordinates flagged in ``lower_mask`` at 0."""
    lower_mask = np.asarray(lower_mask, dtype=bool)

    def project(x):
        out = x.copy()
        out[lower_mask] = np.maximum(out[lower_mask], 0.0)
        return out

    return project


def write_trace_csv(path, trace):
    """Persist an objective trace as ``iter,objective`` rows."""
    with open(path, "w") as fh:
        fh.write("iter,objective\n")
        for i, val in enumerate(trace):
            fh.write(f"{i},{val!r}\n")
