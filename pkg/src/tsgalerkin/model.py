"""Problem data: coefficients, transfer function b, reaction factors R and Q."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import PreconditionError, ValidationError
from .expr import Expression, as_expression

TRANSFER_KINDS = ("linear_positive_part", "saturating")
FACTOR_KINDS = ("positive_part", "clipped_positive_part")


@dataclass(frozen=True)
class TransferFn:
    """Interface transfer ``b``: zero for z <= 0, Lipschitz with constant c_hat.

    ``linear_positive_part``: ``c_hat * max(z, 0)``; ``c_hat = 0`` switches the
    transfer off. ``saturating``: ``min(c_hat * max(z, 0), z_sat)``.
    """

    kind: str = "linear_positive_part"
    c_hat: float = 1.0
    z_sat: float = float("inf")

    def __post_init__(self):
        problems = []
        if self.kind not in TRANSFER_KINDS:
            problems.append(f"unknown transfer kind {self.kind!r}")
        if self.kind == "saturating":
            if not self.c_hat > 0:
                problems.append("saturating transfer needs c_hat > 0 (b must be Lipschitz with a positive slope)")
            if not (self.z_sat > 0 and np.isfinite(self.z_sat)):
                problems.append("saturating transfer needs a finite z_sat > 0")
        elif not self.c_hat >= 0:
            problems.append("c_hat must be >= 0 (b maps into the nonnegative reals)")
        if problems:
            raise ValidationError(problems)

    @property
    def code(self):
        return kernels.B_SATURATING if self.kind == "saturating" else kernels.B_LINEAR

    @property
    def lipschitz(self):
        return float(self.c_hat)

    @property
    def is_zero(self):
        return self.c_hat == 0

    def __call__(self, z):
        b = self.c_hat * np.maximum(np.asarray(z, dtype=float), 0.0)
        if self.kind == "saturating":
            b = np.minimum(b, self.z_sat)
        return b


@dataclass(frozen=True)
class ReactionFactorFn:
    """``max(r, 0)``, optionally clipped at ``cap``; Lipschitz constant 1."""

    kind: str = "positive_part"
    cap: float = float("inf")

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise ValidationError(f"unknown reaction factor kind {self.kind!r}")
        if self.kind == "clipped_positive_part" and not (self.cap > 0 and np.isfinite(self.cap)):
            raise ValidationError("clipped_positive_part needs a finite cap > 0 (R(r) > 0 for r > 0)")

    @property
    def lipschitz(self):
        return 1.0

    def __call__(self, r):
        v = np.maximum(np.asarray(r, dtype=float), 0.0)
        if self.kind == "clipped_positive_part":
            v = np.minimum(v, self.cap)
        return v

    def max_on(self, upper):
        """Maximum over [0, upper]; both kinds are nondecreasing."""
        if upper < 0:
            raise PreconditionError("upper bound must be >= 0")
        return float(self(upper))


def eval_b(fn, z):
    return fn(z)


def eval_eta(R, Q, r, s):
    return R(r) * Q(s)


def _zero():
    return Expression.constant(0)


@dataclass(frozen=True)
class ModelParams:
    """Coefficients and data of the two-scale system.

    Data fields are :class:`~tsgalerkin.expr.Expression` objects: ``U_ext``
    in (t, x), ``U_I`` in x, ``u_I`` and ``v_I`` in (x, y).
    """

    theta: float = 1.0
    D: float = 1.0
    d1: float = 1.0
    d2: float = 1.0
    k: float = 1.0
    alpha: float = 1.0
    b: TransferFn = field(default_factory=TransferFn)
    R: ReactionFactorFn = field(default_factory=ReactionFactorFn)
    Q: ReactionFactorFn = field(default_factory=ReactionFactorFn)
    U_ext: Expression = field(default_factory=_zero)
    U_I: Expression = field(default_factory=_zero)
    u_I: Expression = field(default_factory=_zero)
    v_I: Expression = field(default_factory=_zero)

    def __post_init__(self):
        for name in ("U_ext", "U_I", "u_I", "v_I"):
            object.__setattr__(self, name, as_expression(getattr(self, name)))
        problems = validate_coefficients(self.theta, self.D, self.d1, self.d2, self.k, self.alpha)
        allowed = {"U_ext": {"t", "x1", "x2"}, "U_I": {"x1", "x2"},
                   "u_I": {"x1", "x2", "y1", "y2"}, "v_I": {"x1", "x2", "y1", "y2"}}
        for name, ok in allowed.items():
            extra = getattr(self, name).variables - ok
            if extra:
                problems.append(f"{name} may only depend on {sorted(ok)}, got {sorted(extra)}")
        if problems:
            raise ValidationError(problems)


def validate_coefficients(theta, D, d1, d2, k, alpha):
    """Return the list of violated coefficient constraints."""
    problems = []
    for name, val in (("D", D), ("d1", d1), ("d2", d2)):
        if not val > 0:
            problems.append(f"{name} = {val}: diffusivities D, d1, d2 must be strictly positive")
    if not theta > 0:
        problems.append(f"theta = {theta}: porosity must be strictly positive")
    if not k >= 0:
        problems.append(f"k = {k}: reaction constant must be positive (k = 0 decouples the reaction)")
    if not alpha > 0:
        problems.append(f"alpha = {alpha}: molecular-weight ratio must be strictly positive")
    return problems


def linf_bounds(sup_U_ext, sup_U_I, sup_u_I, sup_v_I):
    """Upper bounds (m1, m2, m3) for U, u and v."""
    sups = (sup_U_ext, sup_U_I, sup_u_I, sup_v_I)
    if any(s < 0 for s in sups):
        raise PreconditionError(f"suprema must be nonnegative, got {sups}")
    m1 = 2.0 * sup_U_ext + sup_U_I
    return m1, max(sup_u_I, m1), float(sup_v_I)


def reaction_max_factors(R, Q, m2, m3):
    return R.max_on(m2), Q.max_on(m3)


def data_suprema(params, macro_points, micro_points, T, n_times=11):
    """Sampled sup-norms of the data on the given nodes (and times in [0, T])."""
    times = np.linspace(0.0, T, n_times)[:, None]
    xs = np.asarray(macro_points)
    ys = np.asarray(micro_points)
    sup_ext = float(np.max(np.abs(params.U_ext(t=times, x=xs[None]))))
    sup_UI = float(np.max(np.abs(params.U_I(x=xs))))
    sup_uI = float(np.max(np.abs(params.u_I(x=xs[:, None], y=ys[None]))))
    sup_vI = float(np.max(np.abs(params.v_I(x=xs[:, None], y=ys[None]))))
    return sup_ext, sup_UI, sup_uI, sup_vI
