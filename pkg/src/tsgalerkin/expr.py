"""Small arithmetic expressions in t, x1, x2, y1, y2 with analytic derivatives.

The grammar accepts numeric literals, the five variables, ``pi``, the
operators ``+ - * / ** ^`` and the functions ``sin``, ``cos``, ``exp``.
Strings are parsed with :mod:`ast` and translated node by node, so nothing
is ever evaluated; :mod:`sympy` does the differentiation.
"""
import ast
from dataclasses import dataclass

import numpy as np
import sympy

from .errors import ValidationError

VARIABLES = ("t", "x1", "x2", "y1", "y2")
_SYMBOLS = {name: sympy.Symbol(name, real=True) for name in VARIABLES}
_FUNCS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}
_GROUP = {"t": "t", "x1": "x", "x2": "x", "y1": "y", "y2": "y"}


class NonSeparableError(ValidationError):
    pass


def _translate(node, text):
    if isinstance(node, ast.Expression):
        return _translate(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        if isinstance(node.value, int):
            return sympy.Integer(node.value)
        return sympy.Float(repr(node.value), 17)
    if isinstance(node, ast.Name):
        if node.id in _SYMBOLS:
            return _SYMBOLS[node.id]
        if node.id == "pi":
            return sympy.pi
        raise ValidationError(f"unknown name {node.id!r} in expression {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        arg = _translate(node.operand, text)
        return -arg if isinstance(node.op, ast.USub) else arg
    if isinstance(node, ast.BinOp):
        a, b = _translate(node.left, text), _translate(node.right, text)
        op = type(node.op)
        if op is ast.Add:
            return a + b
        if op is ast.Sub:
            return a - b
        if op is ast.Mult:
            return a * b
        if op is ast.Div:
            return a / b
        if op is ast.Pow:
            return a**b
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ValidationError(f"{node.func.id} takes one argument in {text!r}")
        return _FUNCS[node.func.id](_translate(node.args[0], text))
    raise ValidationError(f"unsupported construct in expression {text!r}")


class Expression:
    """Scalar field of (t, x, y) with x, y points in the plane.

    Call as ``e(t=..., x=..., y=...)`` where ``x``/``y`` are arrays whose last
    axis has length 2; all arguments broadcast against each other.
    """

    def __init__(self, sym, text=None):
        self.sym = sympy.sympify(sym)
        self.text = text if text is not None else str(self.sym)
        self._fn = None

    @classmethod
    def parse(cls, text, allowed=VARIABLES):
        src = str(text).strip().replace("^", "**")
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError:
            raise ValidationError(f"cannot parse expression {text!r}") from None
        sym = _translate(tree, src)
        bad = sorted(s.name for s in sym.free_symbols if s.name not in allowed)
        if bad:
            raise ValidationError(f"expression {text!r} uses {bad}; allowed here: {list(allowed)}")
        return cls(sym, str(text).strip())

    @classmethod
    def constant(cls, value):
        return cls(sympy.Float(value) if not float(value).is_integer() else sympy.Integer(int(value)))

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.sym == other.sym

    def __hash__(self):
        return hash(self.sym)

    @property
    def variables(self):
        return {s.name for s in self.sym.free_symbols}

    @property
    def is_zero(self):
        return self.sym == 0

    def _compiled(self):
        if self._fn is None:
            self._fn = sympy.lambdify([_SYMBOLS[v] for v in VARIABLES], self.sym, "numpy")
        return self._fn

    def __call__(self, t=0.0, x=None, y=None):
        x = np.zeros(2) if x is None else np.asarray(x, dtype=float)
        y = np.zeros(2) if y is None else np.asarray(y, dtype=float)
        args = (np.asarray(t, dtype=float), x[..., 0], x[..., 1], y[..., 0], y[..., 1])
        shape = np.broadcast_shapes(*(a.shape for a in args))
        with np.errstate(all="ignore"):
            val = self._compiled()(*args)
        return np.broadcast_to(np.asarray(val, dtype=float), shape).copy()

    def diff(self, *names):
        return Expression(sympy.diff(self.sym, *[_SYMBOLS[n] for n in names]))

    # derived fields -------------------------------------------------------
    def grad(self, group):
        a, b = (f"{group}1", f"{group}2")
        return self.diff(a), self.diff(b)

    def laplacian(self, group):
        a, b = (f"{group}1", f"{group}2")
        return Expression(sympy.diff(self.sym, _SYMBOLS[a], 2) + sympy.diff(self.sym, _SYMBOLS[b], 2))

    def hessian(self, group):
        """Second derivatives in the multi-index order (2,0), (1,1), (0,2)."""
        a, b = (f"{group}1", f"{group}2")
        return self.diff(a, a), self.diff(a, b), self.diff(b, b)

    def at(self, t=0.0):
        return Expression(self.sym.subs(_SYMBOLS["t"], t))

    # adapters to the point-callable convention used by the FE code ------
    def on_x(self, t=0.0):
        return lambda pts: self(t=t, x=pts)

    def on_y(self, t=0.0):
        return lambda pts: self(t=t, y=pts)

    def grad_on(self, group, t=0.0):
        ga, gb = self.grad(group)

        def g(pts):
            kw = {group: pts, "t": t}
            return np.stack([ga(**kw), gb(**kw)], axis=-1)

        return g

    def separate(self):
        """Split into ``sum_i a_i(t) f_i(x) g_i(y)``.

        Returns a list of :class:`SeparableTerm`; terms sharing the same
        spatial factors are merged.
        """
        merged = {}
        for term in sympy.Add.make_args(sympy.expand(self.sym)):
            parts = {"c": [], "t": [], "x": [], "y": []}
            for factor in sympy.Mul.make_args(term):
                groups = {_GROUP[s.name] for s in factor.free_symbols}
                if len(groups) > 1:
                    raise NonSeparableError(
                        f"factor {factor} of {self.text!r} mixes variables {sorted(groups)}"
                    )
                parts[groups.pop() if groups else "c"].append(factor)
            key = (sympy.Mul(*parts["x"]), sympy.Mul(*parts["y"]))
            coef = sympy.Mul(*parts["c"], *parts["t"])
            merged[key] = merged.get(key, sympy.Integer(0)) + coef
        return [
            SeparableTerm(Expression(c), Expression(fx), Expression(fy))
            for (fx, fy), c in merged.items()
            if c != 0
        ]


@dataclass(frozen=True)
class SeparableTerm:
    """``coef(t) * fx(x) * fy(y)``."""

    coef: Expression
    fx: Expression
    fy: Expression


def as_expression(value):
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)):
        return Expression.constant(value)
    return Expression.parse(value)
