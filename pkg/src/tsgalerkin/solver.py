"""Time stepping of the semi-discrete two-scale system.

Diffusion is implicit (backward Euler). Exchange and reaction terms are
explicit in the default scheme and iterated to a fixed point in the Picard
scheme. Dirichlet data on the macro boundary are imposed nodally.

Micro rows are divided by the macro lumped weight ``wx_j`` before solving,
so every micro system shares one operator ``My + dt d Ay``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coupling import exchange_terms, lumped_reaction
from .errors import PicardError, PreconditionError, ValidationError
from .fem import SparseOperator, cg_solve
from .model import data_suprema, linf_bounds, reaction_max_factors
from .twoscale import TwoScaleField, ts_inner

SCHEMES = ("semi_implicit", "picard")


class CompatibilityWarning(UserWarning):
    """Initial macro data disagree with the boundary data at t = 0."""


@dataclass(frozen=True, eq=False)
class State:
    t: float
    U: np.ndarray
    u: TwoScaleField
    v: TwoScaleField
    inflow: float = 0.0  # cumulative mass entering through the Dirichlet boundary

    @property
    def fields(self):
        return self.U, self.u.coeffs, self.v.coeffs


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``forcing(t)`` (optional) returns ``(F_U, f_u, f_v)``: the macro load
    vector and the micro loads per unit macro weight, all at time ``t``.
    """

    dt: float
    T: float
    scheme: str = "semi_implicit"
    picard_tol: float = 1e-12
    picard_max: int = 50
    forcing: object = None
    check_bounds: bool = False
    bound_tol: float = 1e-10
    cg_tol: float = 1e-12
    lumped_mass: bool = False
    threads: int = 1

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append(f"dt = {self.dt} must be positive")
        if not self.T > 0:
            problems.append(f"T = {self.T} must be positive")
        elif self.dt > self.T * (1 + 1e-12):
            problems.append(f"dt = {self.dt} exceeds T = {self.T}")
        if self.scheme not in SCHEMES:
            problems.append(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.picard_tol > 0:
            problems.append("picard_tol must be positive")
        if self.picard_max < 1:
            problems.append("picard_max must be >= 1")
        if not self.cg_tol > 0:
            problems.append("cg_tol must be positive")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if problems:
            raise ValidationError(problems)

    @property
    def n_steps(self):
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def dt_effective(self):
        return self.T / self.n_steps


def initial_state(params, macro_space, micro_space):
    """Nodal interpolation of the initial data.

    Boundary values of U come from ``U_ext(0)``; a mismatch with ``U_I``
    beyond 1e-12 raises a :class:`CompatibilityWarning`.
    """
    xv = macro_space.mesh.vertices
    U = params.U_I(x=xv)
    mask = macro_space.dirichlet_mask
    g = params.U_ext(t=0.0, x=xv)
    gap = np.max(np.abs(U[mask] - g[mask]), initial=0.0)
    if gap > 1e-12:
        warnings.warn(f"U_I differs from U_ext(0) on the boundary by {gap:.3e}",
                      CompatibilityWarning, stacklevel=2)
    U[mask] = g[mask]
    u = TwoScaleField.interpolate(params.u_I, macro_space, micro_space)
    v = TwoScaleField.interpolate(params.v_I, macro_space, micro_space)
    return State(0.0, U, u, v)


def total_v_mass(state, ops):
    """``vec(v)^T (Mx (x) My) 1``."""
    return float(ops.wx @ state.v.coeffs @ ops.wy)


def total_u_mass(state, ops):
    return float(ops.wx @ state.u.coeffs @ ops.wy)


def macro_mass(state, ops):
    return float(ops.wx @ state.U)


def stable_dt(params, ops, m2, m3):
    """Largest dt for which lumped-mass stepping keeps the fields in bounds.

    The explicit exchange and reaction updates stay monotone when
    ``dt c_hat |Gamma_R| <= theta``, ``dt c_hat l_k <= wy_k`` at each
    Gamma_R node (``l_k`` half the length of the incident Gamma_R edges),
    ``dt k Q_m <= 1`` and ``dt alpha k R_m <= 1``.
    """
    R_m, Q_m = reaction_max_factors(params.R, params.Q, m2, m3)
    c = params.b.lipschitz
    limits = [math.inf]
    if c > 0:
        ell = np.zeros(len(ops.wy))
        np.add.at(ell, ops.gamma_p, ops.gamma_half)
        np.add.at(ell, ops.gamma_q, ops.gamma_half)
        on = ell > 0
        limits.append(params.theta / (c * ops.gamma_length))
        limits.append(float(np.min(ops.wy[on] / (c * ell[on]))))
    if params.k * Q_m > 0:
        limits.append(1.0 / (params.k * Q_m))
    if params.alpha * params.k * R_m > 0:
        limits.append(1.0 / (params.alpha * params.k * R_m))
    return min(limits)


def bounds_for(params, ops, T):
    """(m1, m2, m3) from sampled data suprema on the mesh nodes."""
    sups = data_suprema(params, ops.macro_space.mesh.vertices, ops.micro_space.mesh.vertices, T)
    return linf_bounds(*sups)


@dataclass(eq=False)
class Stepper:
    """Holds the time-independent operators of one (params, ops, cfg) run."""

    params: object
    ops: object
    cfg: SolverConfig
    dt: float = field(init=False)

    def __post_init__(self):
        p, ops, cfg = self.params, self.ops, self.cfg
        self.dt = cfg.dt_effective
        if cfg.lumped_mass:
            from scipy.sparse import diags

            self.Mt_x = SparseOperator(diags(ops.wx))
            self.Mt_y = SparseOperator(diags(ops.wy))
        else:
            self.Mt_x, self.Mt_y = ops.Mx, ops.My
        self.macro_op = self.Mt_x * p.theta + ops.Ax * (self.dt * p.D)
        mask = ops.dirichlet_mask
        self.free = np.flatnonzero(~mask)
        self.fixed = np.flatnonzero(mask)
        self.macro_ff = self.macro_op.restrict(self.free)
        self.macro_fb = self.macro_op.csr[self.free][:, self.fixed]
        self.micro_u = self.Mt_y + ops.Ay * (self.dt * p.d1)
        self.micro_v = self.Mt_y + ops.Ay * (self.dt * p.d2)
        self._xv = ops.macro_space.mesh.vertices

    # ------------------------------------------------------------------
    def _nonlinear(self, U, u, v):
        p = self.params
        ex_macro, ex_micro = exchange_terms(U, u, p.b, self.ops)
        if p.k == 0:
            eta = np.zeros_like(u)
        else:
            eta = p.k * lumped_reaction(u, v, p.R, p.Q, self.ops)
        return self.ops.wx * ex_macro, ex_micro - eta, -p.alpha * eta

    def _solve(self, state, t_new, U_rhs, u_rhs, v_rhs, guess):
        dt, tol = self.dt, self.cfg.cg_tol
        rhs = self.Mt_x @ (self.params.theta * state.U) + dt * U_rhs
        U = np.empty_like(state.U)
        U[self.fixed] = self.params.U_ext(t=t_new, x=self._xv[self.fixed])
        if len(self.free):
            b = rhs[self.free] - self.macro_fb @ U[self.fixed]
            U[self.free] = cg_solve(self.macro_ff, b, tol=tol, x0=guess[0][self.free])
        inflow = float(np.sum((self.macro_op @ U - rhs)[self.fixed]))
        uo, vo = state.u.coeffs, state.v.coeffs
        bu = (self.Mt_y @ uo.T).T + dt * u_rhs
        bv = (self.Mt_y @ vo.T).T + dt * v_rhs
        u = cg_solve(self.micro_u, bu, tol=tol, x0=guess[1])
        v = cg_solve(self.micro_v, bv, tol=tol, x0=guess[2])
        return U, u, v, inflow

    def _forcing(self, t):
        if self.cfg.forcing is None:
            return 0.0, 0.0, 0.0
        return self.cfg.forcing(t)

    def step(self, state):
        t_new = state.t + self.dt
        fU, fu, fv = self._forcing(t_new)
        U0, u0, v0 = state.fields
        nU, nu, nv = self._nonlinear(U0, u0, v0)
        U, u, v, inflow = self._solve(state, t_new, nU + fU, nu + fu, nv + fv, (U0, u0, v0))
        if self.cfg.scheme == "picard":
            U, u, v, inflow = self._picard(state, t_new, (fU, fu, fv), U, u, v, inflow)
        ms, ys = self.ops.macro_space, self.ops.micro_space
        return State(t_new, U, TwoScaleField(u, ms, ys), TwoScaleField(v, ms, ys),
                     state.inflow + inflow)

    def _picard(self, state, t_new, forcing, U, u, v, inflow):
        ops = self.ops
        diff = math.inf
        for _ in range(self.cfg.picard_max):
            nU, nu, nv = self._nonlinear(U, u, v)
            U1, u1, v1, inflow = self._solve(
                state, t_new, nU + forcing[0], nu + forcing[1], nv + forcing[2], (U, u, v))
            dU, du, dv = U1 - U, u1 - u, v1 - v
            diff = math.sqrt(max(dU @ (ops.Mx @ dU), 0.0)
                             + max(ts_inner(du, du, ops.Mx, ops.My), 0.0)
                             + max(ts_inner(dv, dv, ops.Mx, ops.My), 0.0))
            U, u, v = U1, u1, v1
            if diff < self.cfg.picard_tol:
                return U, u, v, inflow
        raise PicardError("Picard iteration did not converge", self.cfg.picard_max, diff)


def step(state, params, ops, cfg):
    """One time step; builds the operators each call (use :func:`run` for loops)."""
    return Stepper(params, ops, cfg).step(state)


@dataclass(frozen=True, eq=False)
class RunResult:
    state: State
    n_steps: int
    dt: float
    observers: tuple = ()
    violations: tuple = ()


def _bound_check(state, n, bounds, tol):
    out = []
    for name, arr, m in zip("Uuv", state.fields, bounds):
        lo, hi = float(arr.min()), float(arr.max())
        if lo < -tol or hi > m + tol:
            out.append((n, name, lo, hi))
    return out


def run(params, ops, cfg, observers=(), state=None):
    """Advance from ``t = 0`` (or ``state``) to ``T``.

    Each observer is called as ``obs(n, state)`` after every step, and once
    with ``n = 0`` for the initial state. With ``cfg.check_bounds`` set,
    excursions outside [-tol, m + tol] for the bounds (m1, m2, m3) are collected as
    ``(step, field, min, max)`` tuples.
    """
    old = kernels.get_num_threads()
    kernels.set_num_threads(cfg.threads)
    try:
        if state is None:
            state = initial_state(params, ops.macro_space, ops.micro_space)
        stepper = Stepper(params, ops, cfg)
        bounds = bounds_for(params, ops, cfg.T) if cfg.check_bounds else None
        violations = []
        for obs in observers:
            obs(0, state)
        if bounds is not None:
            violations += _bound_check(state, 0, bounds, cfg.bound_tol)
        for n in range(1, cfg.n_steps + 1):
            state = stepper.step(state)
            if bounds is not None:
                violations += _bound_check(state, n, bounds, cfg.bound_tol)
            for obs in observers:
                obs(n, state)
    finally:
        kernels.set_num_threads(old)
    return RunResult(state, cfg.n_steps, stepper.dt, tuple(observers), tuple(violations))


# ----------------------------------------------------------------------
# CSV output

def write_macro_csv(state, space, fh):
    fh.write("node,x,y,U\n")
    for i, ((x, y), val) in enumerate(zip(space.mesh.vertices, state.U)):
        fh.write(f"{i},{x:.17g},{y:.17g},{val:.17g}\n")


class TimeSeries:
    """Observer collecting ``t,total_v,min_U,max_U,min_u,max_u,min_v,max_v``."""

    header = "t,total_v,min_U,max_U,min_u,max_u,min_v,max_v"

    def __init__(self, ops):
        self.ops = ops
        self.rows = []

    def __call__(self, n, state):
        U, u, v = state.fields
        self.rows.append((state.t, total_v_mass(state, self.ops), U.min(), U.max(),
                          u.min(), u.max(), v.min(), v.max()))

    def write(self, fh):
        fh.write(self.header + "\n")
        for row in self.rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


class Snapshots:
    """Observer writing field CSVs every ``stride`` steps into ``directory``."""

    def __init__(self, directory, stride, macro_space):
        self.directory = directory
        self.stride = int(stride)
        self.space = macro_space
        if self.stride < 1:
            raise PreconditionError("snapshot stride must be >= 1")

    def __call__(self, n, state):
        from .twoscale import dump_csv

        if n % self.stride:
            return
        with open(self.directory / f"macro_U_{n:06d}.csv", "w") as fh:
            write_macro_csv(state, self.space, fh)
        with open(self.directory / f"micro_u_{n:06d}.csv", "w") as fh:
            dump_csv(state.u, fh)
        with open(self.directory / f"micro_v_{n:06d}.csv", "w") as fh:
            dump_csv(state.v, fh)
