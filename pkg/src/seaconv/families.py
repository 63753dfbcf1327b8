"""Builders for the six exact solution families.

Each builder assembles the field expressions (u, v, w, p) from the
supplied free functions and constants, probes its hypotheses numerically
on the configured time range, and returns an immutable Solution whose
density is the structural z-derivative of p.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import EvalDomainError, HypothesisError
from .evaluate import eval_jet_batch, eval_values
from .expr import (
    Atan2,
    Call,
    Const,
    Expr,
    ParamFn,
    Var,
    diff,
    substitute,
    wrap,
)
from .parser import parse_expr, parse_paramfn
from .quadrature import Antideriv
from .solution import Guard, Meta, Solution

T, X, Y, Z, S = Var("t"), Var("x"), Var("y"), Var("z"), Var("s")

EPS_AXIS = 1e-6
EPS_RAD = 1e-8
EPS_DEN = 1e-8
PROBE_COUNT = 64

FAMILY_PARAMS: dict[str, tuple[tuple[str, str], ...]] = {
    "theorem_2_1": (
        ("alpha", "fn_t"), ("beta", "fn_t"), ("b1", "real"), ("b2", "real"),
        ("Im", "fn_s"), ("iota", "fn_s"), ("sigma", "fn_s"),
    ),
    "theorem_3_1": (("alpha", "fn_t"), ("Im", "fn_s")),
    "prop_4_1": (("theta", "field_txy"), ("zeta", "field_txy")),
    "theorem_4_2": (
        ("alpha", "fn_t"), ("gamma", "fn_t"), ("Im", "fn_s"),
        ("zeta", "field_txy"),
    ),
    "theorem_4_3": (
        ("alpha", "fn_t"), ("beta", "fn_t"), ("Im", "fn_s"),
        ("theta", "field_tx"), ("zeta", "field_txy"),
    ),
    "theorem_4_4": (
        ("alpha", "fn_t"), ("beta", "fn_t"), ("phi", "fn_t"),
        ("Im", "fn_s"), ("zeta", "field_txy"),
    ),
}

FAMILY_SIGNATURES: dict[str, str] = {
    "theorem_2_1": "alpha(t), beta(t), b1, b2, Im(s), iota(s), sigma(s)",
    "theorem_3_1": "alpha(t), Im(s)",
    "prop_4_1": "theta(t,x,y) harmonic, zeta(t,x,y)",
    "theorem_4_2": "alpha(t), gamma(t), Im(s), zeta(t,x,y)",
    "theorem_4_3": "alpha(t), beta(t), Im(s), theta(t,x), zeta(t,x,y)",
    "theorem_4_4": "alpha(t), beta(t), phi(t), Im(s), zeta(t,x,y)",
}

OPTIONAL_PARAMS = frozenset({"zeta"})

DEFAULT_TOLS = {tag: 1e-8 for tag in FAMILY_PARAMS}
DEFAULT_TOLS["theorem_4_4"] = 1e-7


def as_paramfn(name: str, value, var: str = "t") -> ParamFn:
    """Coerce a user-supplied function parameter (ParamFn, DSL string,
    or constant) into a ParamFn with the canonical name."""
    if isinstance(value, ParamFn):
        if value.name == name:
            return value
        return ParamFn(name, value.body, value.display_var)
    if isinstance(value, str):
        return parse_paramfn(name, var, value, None)
    if isinstance(value, (int, float)):
        return ParamFn(name, Const(float(value)), var)
    raise TypeError(f"parameter {name} must be a ParamFn, DSL string, or number")


def as_field(name: str, value, allowed: tuple[str, ...]) -> Expr:
    """Coerce a field-valued parameter into an Expr over the allowed
    variables."""
    if isinstance(value, str):
        return parse_expr(value, None, allowed=allowed)
    if isinstance(value, (int, float)):
        return Const(float(value))
    if isinstance(value, Expr):
        extra = value.free_vars() - set(allowed)
        if extra:
            raise ValueError(
                f"parameter {name} may only use {allowed}, got {sorted(extra)}"
            )
        return value
    raise TypeError(f"parameter {name} must be an Expr, DSL string, or number")


def _probe_points(t_range) -> np.ndarray:
    lo, hi = float(t_range[0]), float(t_range[1])
    return np.linspace(lo, hi, PROBE_COUNT)


def _probe_smooth(fn: ParamFn, t_range, order: int = 4) -> None:
    pts = _probe_points(t_range)[:, None]
    try:
        eval_jet_batch(fn.body, ("s",), pts, order)
    except EvalDomainError as ex:
        raise HypothesisError(
            f"{fn.name} failed the order-{order} smoothness probe on the "
            f"time range: {ex}"
        ) from ex


def _probe_nonvanishing(fn: ParamFn, t_range) -> None:
    pts = _probe_points(t_range)[:, None]
    vals = eval_jet_batch(fn.body, ("s",), pts, 0).value
    worst = float(np.min(np.abs(vals)))
    if worst < 1e-12:
        raise HypothesisError(
            f"{fn.name} vanishes on the time range "
            f"(min |{fn.name}(t)| = {worst:.3g})"
        )


def build_theorem_2_1(alpha, beta, b1, b2, Im, iota, sigma,
                      t_range=(-1.0, 1.0), tol=1e-8) -> Solution:
    alpha = as_paramfn("alpha", alpha)
    beta = as_paramfn("beta", beta)
    Im = as_paramfn("Im", Im, "s")
    iota = as_paramfn("iota", iota, "s")
    sigma = as_paramfn("sigma", sigma, "s")
    b1, b2 = float(b1), float(b2)
    _probe_smooth(alpha, t_range)
    _probe_smooth(beta, t_range)

    a, a1, a2 = alpha(T), alpha(T, 1), alpha(T, 2)
    b, bp, bpp = beta(T), beta(T, 1), beta(T, 2)
    varpi = a1 * X + bp * Y + Z
    imv, iov = Im(varpi), iota(varpi)

    u = b1 * a1 * X + (b1 * bp - 1.0) * Y + b1 * Z - a + imv
    v = (b2 * a1 + 1.0) * X + b2 * bp * Y + b2 * Z - b + iov
    w = (
        -(a2 + b1 * a1 ** 2 + (b2 * a1 + 1.0) * bp) * X
        - (bpp + a1 * (b1 * bp - 1.0) + b2 * bp ** 2) * Y
        - (b1 * a1 + b2 * bp) * Z
        + a * a1 + b * bp - a1 * imv - bp * iov
    )
    p = sigma(varpi)

    meta = Meta(
        "theorem_2_1",
        {"alpha": alpha, "beta": beta, "b1": b1, "b2": b2,
         "Im": Im, "iota": iota, "sigma": sigma},
        tuple(map(float, t_range)),
        float(tol),
    )
    return Solution(u, v, w, p, guards=(), meta=meta)


def rigid_rotation(t_range=(-1.0, 1.0)) -> Solution:
    """u=-y, v=x, w=0, p=z, rho=1: the all-parameters-zero instance."""
    return build_theorem_2_1(
        alpha=0.0, beta=0.0, b1=0.0, b2=0.0, Im=0.0, iota=0.0, sigma="s",
        t_range=t_range,
    )


def build_theorem_3_1(alpha, Im, t_range=(-1.0, 1.0), tol=1e-8) -> Solution:
    alpha = as_paramfn("alpha", alpha)
    Im = as_paramfn("Im", Im, "s")
    _probe_smooth(alpha, t_range)

    a, a1, a2, a3 = alpha(T), alpha(T, 1), alpha(T, 2), alpha(T, 3)
    s2 = X ** 2 + Y ** 2
    rad = a2 + a1 ** 2 + 0.25 - 2.0 * Z / s2
    psi = Call("sqrt", rad)
    gam = 2.0 * a1 ** 3 + 3.0 * a1 * a2 + (a3 + a1) / 2.0

    u = a1 * X - Y / 2.0 + Y * psi
    v = a1 * Y + X / 2.0 - X * psi
    w = gam * s2 - 2.0 * a1 * Z
    p = Call("exp", -2.0 * a) * Im(Call("exp", 2.0 * a) * psi)

    meta = Meta(
        "theorem_3_1",
        {"alpha": alpha, "Im": Im},
        tuple(map(float, t_range)),
        float(tol),
    )
    guards = (
        Guard(s2, EPS_AXIS, "x^2+y^2"),
        Guard(rad, EPS_RAD, "radicand"),
    )
    return Solution(u, v, w, p, guards=guards, meta=meta)


def theorem_3_1_stated_rho(alpha, Im) -> Expr:
    """The density in its originally stated closed form, whose radicand
    in the denominator differs from the one inside p.  Exposed only for
    comparison against the structural rho = p_z; the two agree when
    alpha' + alpha^2 == alpha'' + (alpha')^2 (e.g. alpha = 0)."""
    alpha = as_paramfn("alpha", alpha)
    Im = as_paramfn("Im", Im, "s")
    a, a1, a2 = alpha(T), alpha(T, 1), alpha(T, 2)
    s2 = X ** 2 + Y ** 2
    rad_p = a2 + a1 ** 2 + 0.25 - 2.0 * Z / s2
    rad_rho = a1 + a ** 2 + 0.25 - 2.0 * Z / s2
    num = Im(Call("exp", 2.0 * a) * Call("sqrt", rad_p), 1)
    return -num / (s2 * Call("sqrt", rad_rho))


def harmonic_poly(terms) -> Expr:
    """Sum of c(t) * {Re|Im}((x+iy)^n) expanded into real polynomials in
    x, y; harmonic in (x, y) for every choice of time coefficients.
    terms: iterable of (degree, part, coefficient) with part "Re"/"Im"
    and coefficient a ParamFn of t, a DSL string in t, or a number."""
    total: Expr = Const(0.0)
    for idx, (n, part, coef) in enumerate(terms):
        n = int(n)
        if n < 0:
            raise ValueError("degree must be nonnegative")
        if part not in ("Re", "Im"):
            raise ValueError(f"part must be 'Re' or 'Im', got {part!r}")
        if isinstance(coef, ParamFn):
            cexpr: Expr = coef(T)
        elif isinstance(coef, str):
            cexpr = parse_expr(coef, None, allowed=("t",))
        elif isinstance(coef, (int, float)):
            cexpr = Const(float(coef))
        elif isinstance(coef, Expr):
            cexpr = coef
        else:
            raise TypeError("coefficient must be ParamFn, str, number, or Expr")
        start = 0 if part == "Re" else 1
        poly: Expr = Const(0.0)
        for j in range(start, n + 1, 2):
            sign = -1.0 if (j // 2) % 2 else 1.0
            poly = poly + (sign * comb(n, j)) * X ** (n - j) * Y ** j
        if part == "Im" and n == 0:
            poly = Const(0.0)
        total = total + cexpr * poly
    return total


def build_prop_4_1(theta, zeta=0.0, t_range=(-1.0, 1.0), tol=1e-8,
                   probe_tol=1e-10) -> Solution:
    from .verify import check_harmonic

    theta = as_field("theta", theta, ("t", "x", "y"))
    zeta = as_field("zeta", zeta, ("t", "x", "y"))
    report = check_harmonic(theta, t_range=t_range)
    if report.max_abs > probe_tol:
        raise HypothesisError(
            "theta is not harmonic: |theta_xx + theta_yy| = "
            f"{report.max_abs:.6g} at (t,x,y) = {report.worst_point}"
        )

    tx = diff(theta, "x")
    u = diff(tx, "x")
    v = diff(tx, "y")
    w = zeta
    p = Z - diff(tx, "t") - diff(theta, "y") - 0.5 * (u ** 2 + v ** 2)

    meta = Meta(
        "prop_4_1",
        {"theta": theta, "zeta": zeta},
        tuple(map(float, t_range)),
        float(tol),
    )
    return Solution(u, v, w, p, guards=(), meta=meta)


def build_theorem_4_2(alpha, gamma, Im, zeta=0.0, t_range=(-1.0, 1.0),
                      tol=1e-8, varpi0=1.0, quad_tol=1e-10) -> Solution:
    alpha = as_paramfn("alpha", alpha)
    gamma = as_paramfn("gamma", gamma)
    Im = as_paramfn("Im", Im, "s")
    zeta = as_field("zeta", zeta, ("t", "x", "y"))
    _probe_smooth(alpha, t_range)
    _probe_smooth(gamma, t_range)
    _probe_nonvanishing(alpha, t_range)

    a, a1, a2 = alpha(T), alpha(T, 1), alpha(T, 2)
    g, g1 = gamma(T), gamma(T, 1)
    varpi = X ** 2 + Y ** 2
    F = g + Im(a * varpi)

    u = -(a1 * X) / (2.0 * a) - Y / 2.0 + F * Y / varpi
    v = X / 2.0 - (a1 * Y) / (2.0 * a) - F * X / varpi
    w = (a1 / a) * Z + zeta

    body = (g + Im(a * S)) ** 2 / S ** 2
    K = Antideriv(body, varpi, float(varpi0), float(quad_tol))
    p = (
        Z + 0.5 * K
        - 0.5 * ((3.0 * a1 ** 2 - 2.0 * a * a2) / (4.0 * a ** 2) + 0.25) * varpi
        + g1 * Atan2(Y, X)
    )

    meta = Meta(
        "theorem_4_2",
        {"alpha": alpha, "gamma": gamma, "Im": Im, "zeta": zeta,
         "varpi0": float(varpi0)},
        tuple(map(float, t_range)),
        float(tol),
    )
    return Solution(u, v, w, p, guards=(Guard(varpi, EPS_AXIS, "x^2+y^2"),),
                    meta=meta)


def build_theorem_4_3(alpha, beta, Im, theta, zeta=0.0, t_range=(-1.0, 1.0),
                      tol=1e-8, x0=0.0, quad_tol=1e-10) -> Solution:
    alpha = as_paramfn("alpha", alpha)
    beta = as_paramfn("beta", beta)
    Im = as_paramfn("Im", Im, "s")
    theta = as_field("theta", theta, ("t", "x"))
    zeta = as_field("zeta", zeta, ("t", "x", "y"))
    _probe_smooth(alpha, t_range)
    _probe_smooth(beta, t_range)

    a, a1, a2 = alpha(T), alpha(T, 1), alpha(T, 2)
    b = beta(T)
    E = b * Call("exp", -a)
    Et = diff(E, "t")

    th = theta
    thx = diff(th, "x")
    tht = diff(th, "t")
    thxx = diff(thx, "x")
    thxt = diff(thx, "t")
    thtt = diff(tht, "t")
    D = thx * Im(th, 1)

    u = E / D - tht / thx
    v = Call("exp", a) * Im(th) + X - a1 * Y
    w = (
        a1
        + E * (thxx * Im(th, 1) + thx ** 2 * Im(th, 2)) / D ** 2
        + (thxt * thx - tht * thxx) / thx ** 2
    ) * Z + zeta

    sub_x = {"x": S}
    th_s = substitute(th, sub_x)
    thx_s = substitute(thx, sub_x)
    tht_s = substitute(tht, sub_x)
    thxt_s = substitute(thxt, sub_x)
    thtt_s = substitute(thtt, sub_x)
    D_s = thx_s * Im(th_s, 1)
    integrand = (
        E * (thxt_s * Im(th_s, 1) + tht_s * thx_s * Im(th_s, 2)) / D_s ** 2
        + (thtt_s * thx_s - tht_s * thxt_s) / thx_s ** 2
        - Et / D_s
        - Call("exp", a) * Im(th_s)
    )
    K = Antideriv(integrand, X, float(x0), float(quad_tol))
    p = (
        Z + K + a1 * X * Y - b * Y
        + ((a2 - a1 ** 2) * Y ** 2 - X ** 2) / 2.0
        - u ** 2 / 2.0
    )

    meta = Meta(
        "theorem_4_3",
        {"alpha": alpha, "beta": beta, "Im": Im, "theta": theta,
         "zeta": zeta, "x0": float(x0)},
        tuple(map(float, t_range)),
        float(tol),
    )
    guards = (
        Guard(thx ** 2, EPS_DEN ** 2, "theta_x"),
        Guard(Im(th, 1) ** 2, EPS_DEN ** 2, "Im_prime"),
    )
    return Solution(u, v, w, p, guards=guards, meta=meta)


def build_theorem_4_4(alpha, beta, phi, Im, zeta=0.0, t_range=(-1.0, 1.0),
                      tol=1e-7, t0=0.0, quad_tol=1e-10) -> Solution:
    alpha = as_paramfn("alpha", alpha)
    beta = as_paramfn("beta", beta)
    phi = as_paramfn("phi", phi)
    Im = as_paramfn("Im", Im, "s")
    zeta = as_field("zeta", zeta, ("t", "x", "y"))
    _probe_smooth(alpha, t_range)
    _probe_smooth(beta, t_range)
    _probe_smooth(phi, t_range)
    _probe_nonvanishing(alpha, t_range)
    _probe_nonvanishing(beta, t_range)

    a, a1, a2 = alpha(T), alpha(T, 1), alpha(T, 2)
    b, b1, b2 = beta(T), beta(T, 1), beta(T, 2)
    f, f1 = phi(T), phi(T, 1)
    fm1 = f - 1.0
    varpi = a * X + b * Y
    s2ab = a ** 2 + b ** 2

    g_t = (a / b) * fm1 + (b / a) * f
    g_s = substitute(g_t, {"t": S})
    K = Antideriv(g_s, T, float(t0), float(quad_tol))
    a0 = alpha.value_at(float(t0))
    b0 = beta.value_at(float(t0))
    c0 = (a0 + b0) / (a0 * b0)
    W = (a * b / s2ab) * (c0 * Call("exp", K))
    delta = (a * b1 - a1 * b) / s2ab
    imp = Im(varpi, 1)

    u = fm1 * Y - ((a1 + f * b) / a) * X + b * W * imp
    v = f * X - ((b1 + fm1 * a) / b) * Y - a * W * imp
    w = ((a1 + f * b) / a + (b1 + fm1 * a) / b) * Z + zeta

    ybr = (
        b * (f1 * a + fm1 * a1) + b * b2 - 2.0 * b1 ** 2
        - (fm1 * a) ** 2 - 3.0 * a * b1 * fm1
    ) / b ** 2 - fm1 ** 2
    xbr = (
        2.0 * a1 ** 2 + (f * b) ** 2 + 3.0 * a1 * b * f
        - a * (f1 * b + f * b1) - a * a2
    ) / a ** 2 + f ** 2
    xybr = fm1 * (a1 + f * b) / a - f1 + f * (b1 + a * fm1) / b
    p = (
        Z + (Y ** 2 / 2.0) * ybr - (X ** 2 / 2.0) * xbr + X * Y * xybr
        + W * (1.0 - 2.0 * delta) * Im(varpi)
    )

    meta = Meta(
        "theorem_4_4",
        {"alpha": alpha, "beta": beta, "phi": phi, "Im": Im, "zeta": zeta,
         "t0": float(t0)},
        tuple(map(float, t_range)),
        float(tol),
    )
    return Solution(u, v, w, p, guards=(), meta=meta)


BUILDERS = {
    "theorem_2_1": build_theorem_2_1,
    "theorem_3_1": build_theorem_3_1,
    "prop_4_1": build_prop_4_1,
    "theorem_4_2": build_theorem_4_2,
    "theorem_4_3": build_theorem_4_3,
    "theorem_4_4": build_theorem_4_4,
}
