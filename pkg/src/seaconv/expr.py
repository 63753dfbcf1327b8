"""Immutable symbolic expression trees over t, x, y, z (or s in
one-variable function bodies), with named parameter functions, a
structure-preserving printer, capture-free substitution, and symbolic
differentiation."""
from __future__ import annotations

from dataclasses import dataclass

VARS4 = ("t", "x", "y", "z")
BUILTINS = ("exp", "log", "sin", "cos", "tanh", "sqrt")

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 2.5
_PREC_POW = 3
_PREC_ATOM = 4


def wrap(value) -> "Expr":
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError(f"cannot use {value!r} as an expression")


@dataclass(frozen=True)
class Expr:
    """Base node.  Arithmetic operators build folded trees (constant
    identities removed); the parser builds raw nodes instead so printed
    text round-trips structurally."""

    def __add__(self, other):
        return add(self, wrap(other))

    def __radd__(self, other):
        return add(wrap(other), self)

    def __sub__(self, other):
        return sub(self, wrap(other))

    def __rsub__(self, other):
        return sub(wrap(other), self)

    def __mul__(self, other):
        return mul(self, wrap(other))

    def __rmul__(self, other):
        return mul(wrap(other), self)

    def __truediv__(self, other):
        return div(self, wrap(other))

    def __rtruediv__(self, other):
        return div(wrap(other), self)

    def __pow__(self, e):
        return pow_node(self, e)

    def __neg__(self):
        return neg(self)

    def children(self) -> tuple["Expr", ...]:
        return ()

    def free_vars(self) -> frozenset[str]:
        out = frozenset()
        for c in self.children():
            out |= c.free_vars()
        return out

    def _subst(self, mapping: dict[str, "Expr"]) -> "Expr":
        raise NotImplementedError

    def _diff(self, var: str) -> "Expr":
        raise NotImplementedError

    def _print(self) -> tuple[str, float]:
        """Returns (text, precedence of the outermost construct)."""
        raise NotImplementedError

    def __repr__(self):
        return print_expr(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    def _subst(self, mapping):
        return self

    def _diff(self, var):
        return Const(0.0)

    def _print(self):
        v = self.value
        if v.is_integer() and abs(v) < 1e16:
            text = str(int(v))
        else:
            text = repr(v)
        return text, (_PREC_UNARY if v < 0 else _PREC_ATOM)


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def free_vars(self):
        return frozenset((self.name,))

    def _subst(self, mapping):
        return mapping.get(self.name, self)

    def _diff(self, var):
        return Const(1.0) if self.name == var else Const(0.0)

    def _print(self):
        return self.name, _PREC_ATOM


def _rebuild2(node, cls, a, b, mapping):
    na, nb = a._subst(mapping), b._subst(mapping)
    if na is a and nb is b:
        return node
    return cls(na, nb)


@dataclass(frozen=True, repr=False)
class Add(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def _subst(self, mapping):
        return _rebuild2(self, Add, self.a, self.b, mapping)

    def _diff(self, var):
        return add(self.a._diff(var), self.b._diff(var))

    def _print(self):
        la, pa = self.a._print()
        lb, pb = self.b._print()
        if pa < _PREC_ADD:
            la = f"({la})"
        if pb <= _PREC_ADD:
            lb = f"({lb})"
        return f"{la} + {lb}", _PREC_ADD


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def _subst(self, mapping):
        return _rebuild2(self, Sub, self.a, self.b, mapping)

    def _diff(self, var):
        return sub(self.a._diff(var), self.b._diff(var))

    def _print(self):
        la, pa = self.a._print()
        lb, pb = self.b._print()
        if pa < _PREC_ADD:
            la = f"({la})"
        if pb <= _PREC_ADD:
            lb = f"({lb})"
        return f"{la} - {lb}", _PREC_ADD


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def _subst(self, mapping):
        return _rebuild2(self, Mul, self.a, self.b, mapping)

    def _diff(self, var):
        return add(
            mul(self.a._diff(var), self.b), mul(self.a, self.b._diff(var))
        )

    def _print(self):
        # Mul(Const(-1), e) renders as unary minus unless e is a constant
        # (that case would re-parse as a single negative literal).
        if self.a == Const(-1.0) and not isinstance(self.b, Const):
            lb, pb = self.b._print()
            if pb <= _PREC_UNARY:
                lb = f"({lb})"
            return f"-{lb}", _PREC_UNARY
        la, pa = self.a._print()
        lb, pb = self.b._print()
        if pa < _PREC_MUL:
            la = f"({la})"
        if pb <= _PREC_MUL:
            lb = f"({lb})"
        return f"{la}*{lb}", _PREC_MUL


@dataclass(frozen=True, repr=False)
class Div(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def _subst(self, mapping):
        return _rebuild2(self, Div, self.a, self.b, mapping)

    def _diff(self, var):
        da, db = self.a._diff(var), self.b._diff(var)
        num = sub(mul(da, self.b), mul(self.a, db))
        return div(num, mul(self.b, self.b))

    def _print(self):
        la, pa = self.a._print()
        lb, pb = self.b._print()
        if pa < _PREC_MUL:
            la = f"({la})"
        if pb <= _PREC_MUL:
            lb = f"({lb})"
        return f"{la}/{lb}", _PREC_MUL


def _pow_print(base: Expr, etext: str):
    lb, pb = base._print()
    if pb < _PREC_ATOM:
        lb = f"({lb})"
    return f"{lb}^{etext}", _PREC_POW


@dataclass(frozen=True, repr=False)
class IntPow(Expr):
    base: Expr
    n: int

    def children(self):
        return (self.base,)

    def _subst(self, mapping):
        nb = self.base._subst(mapping)
        return self if nb is self.base else IntPow(nb, self.n)

    def _diff(self, var):
        return mul(
            mul(Const(float(self.n)), pow_node(self.base, self.n - 1)),
            self.base._diff(var),
        )

    def _print(self):
        return _pow_print(self.base, str(self.n))


@dataclass(frozen=True, repr=False)
class RealPow(Expr):
    base: Expr
    e: float

    def children(self):
        return (self.base,)

    def _subst(self, mapping):
        nb = self.base._subst(mapping)
        return self if nb is self.base else RealPow(nb, self.e)

    def _diff(self, var):
        return mul(
            mul(Const(self.e), pow_node(self.base, self.e - 1)),
            self.base._diff(var),
        )

    def _print(self):
        return _pow_print(self.base, repr(self.e))


@dataclass(frozen=True, repr=False)
class Call(Expr):
    kind: str
    arg: Expr

    def __post_init__(self):
        if self.kind not in BUILTINS:
            raise ValueError(f"unknown builtin {self.kind!r}")

    def children(self):
        return (self.arg,)

    def _subst(self, mapping):
        na = self.arg._subst(mapping)
        return self if na is self.arg else Call(self.kind, na)

    def _diff(self, var):
        u, du = self.arg, self.arg._diff(var)
        k = self.kind
        if k == "exp":
            outer = Call("exp", u)
        elif k == "log":
            return div(du, u)
        elif k == "sin":
            outer = Call("cos", u)
        elif k == "cos":
            outer = neg(Call("sin", u))
        elif k == "tanh":
            outer = sub(Const(1.0), IntPow(Call("tanh", u), 2))
        elif k == "sqrt":
            return div(du, mul(Const(2.0), Call("sqrt", u)))
        else:  # pragma: no cover
            raise ValueError(k)
        return mul(outer, du)

    def _print(self):
        la, _ = self.arg._print()
        return f"{self.kind}({la})", _PREC_ATOM


@dataclass(frozen=True, repr=False)
class Atan2(Expr):
    """Two-argument angle atan2(num, den): the smooth branch of
    arctan(num/den) away from num = den = 0."""

    num: Expr
    den: Expr

    def children(self):
        return (self.num, self.den)

    def _subst(self, mapping):
        return _rebuild2(self, Atan2, self.num, self.den, mapping)

    def _diff(self, var):
        b, a = self.num, self.den
        db, da = b._diff(var), a._diff(var)
        num = sub(mul(db, a), mul(b, da))
        return div(num, add(mul(a, a), mul(b, b)))

    def _print(self):
        ln, _ = self.num._print()
        ld, _ = self.den._print()
        return f"atan2({ln}, {ld})", _PREC_ATOM


@dataclass(frozen=True)
class ParamFn:
    """A named smooth one-variable function.  The body is stored over the
    bound variable s; display_var is the name used in source text."""

    name: str
    body: Expr
    display_var: str = "s"

    def __post_init__(self):
        extra = self.body.free_vars() - {"s"}
        if extra:
            raise ValueError(
                f"ParamFn {self.name!r} body uses variables {sorted(extra)}; "
                "only the bound variable is allowed"
            )

    def __call__(self, arg, k: int = 0) -> "FnApp":
        return FnApp(self, int(k), wrap(arg))

    def value_at(self, s0: float, k: int = 0) -> float:
        from .evaluate import deriv_1d

        return deriv_1d(self, float(s0), k)

    def definition_src(self) -> str:
        shown = self.body._subst({"s": Var(self.display_var)})
        return f"{self.name}({self.display_var}) = {print_expr(shown)}"


@dataclass(frozen=True, repr=False)
class FnApp(Expr):
    """Application of the k-th derivative of a ParamFn to a sub-expression."""

    fn: ParamFn
    k: int
    arg: Expr

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("derivative order must be non-negative")

    def children(self):
        return (self.arg,)

    def _subst(self, mapping):
        na = self.arg._subst(mapping)
        return self if na is self.arg else FnApp(self.fn, self.k, na)

    def _diff(self, var):
        return mul(FnApp(self.fn, self.k + 1, self.arg), self.arg._diff(var))

    def _print(self):
        la, _ = self.arg._print()
        primes = "'" * self.k
        return f"{self.fn.name}{primes}({la})", _PREC_ATOM


class FnContext:
    """Registration-ordered set of ParamFns and named field expressions.
    Bodies may reference only functions registered earlier, which rules
    out reference cycles."""

    def __init__(self):
        self.fns: dict[str, ParamFn] = {}
        self.exprs: dict[str, tuple[tuple[str, ...], Expr]] = {}

    def register(self, fn: ParamFn) -> ParamFn:
        if fn.name in BUILTINS or fn.name == "atan2":
            raise ValueError(f"{fn.name!r} is a builtin and cannot be redefined")
        if fn.name in self.fns or fn.name in self.exprs:
            raise ValueError(f"{fn.name!r} is already defined")
        for ref in _fn_refs(fn.body):
            if ref.name not in self.fns or self.fns[ref.name] is not ref:
                raise ValueError(
                    f"{fn.name!r} references {ref.name!r}, which is not "
                    "registered earlier in this context"
                )
        self.fns[fn.name] = fn
        return fn

    def register_expr(self, name: str, vars: tuple[str, ...], body: Expr):
        if name in self.fns or name in self.exprs:
            raise ValueError(f"{name!r} is already defined")
        self.exprs[name] = (vars, body)

    def __contains__(self, name):
        return name in self.fns

    def __getitem__(self, name) -> ParamFn:
        return self.fns[name]

    def get(self, name):
        return self.fns.get(name)


def _fn_refs(e: Expr):
    if isinstance(e, FnApp):
        yield e.fn
        yield from _fn_refs(e.fn.body)
    for c in e.children():
        yield from _fn_refs(c)


# ---------------------------------------------------------------------------
# Folding constructors (used by operators, differentiation, and builders).

def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Const):
        if a.value == 0.0:
            return Const(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Const):
        if b.value == 0.0:
            return Const(0.0)
        if b.value == 1.0:
            return a
        return Mul(b, a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0.0:
            raise ZeroDivisionError("division of an expression by constant zero")
        if isinstance(a, Const):
            return Const(a.value / b.value)
        if b.value == 1.0:
            return a
    if isinstance(a, Const) and a.value == 0.0:
        return Const(0.0)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    return Mul(Const(-1.0), a)


def pow_node(base: Expr, e) -> Expr:
    """Normalizing power constructor: integer-valued exponents become
    IntPow, others RealPow; trivial exponents fold."""
    if isinstance(e, Expr):
        if not isinstance(e, Const):
            raise ValueError("exponent must be a numeric literal")
        e = e.value
    e = float(e)
    if e.is_integer():
        n = int(e)
        if n == 0:
            return Const(1.0)
        if n == 1:
            return base
        if isinstance(base, Const):
            return Const(base.value**n)
        return IntPow(base, n)
    if isinstance(base, Const):
        return Const(base.value**e)
    return RealPow(base, e)


def print_expr(e: Expr) -> str:
    text, _ = e._print()
    return text


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Simultaneous capture-free substitution of variables.  ParamFn
    bodies are closed over their bound variable and are not entered;
    antiderivative nodes substitute their ambient parts only."""
    mapping = {k: wrap(v) for k, v in mapping.items()}
    return e._subst(mapping)


def diff(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative with folding constructors."""
    return e._diff(var)


def free_vars(e: Expr) -> frozenset[str]:
    return e.free_vars()
