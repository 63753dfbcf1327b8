"""Solution container: field expressions, domain guards, and metadata."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import GuardError
from .expr import Expr, diff
from .evaluate import VARS4, eval_values


@dataclass(frozen=True)
class Guard:
    """A point is in-domain when expr evaluates to at least threshold.
    Guards are checked in order; later guards are only evaluated at
    points that survived the earlier ones, so a guard may protect the
    evaluation of the next one (e.g. an axis guard shielding a division
    inside a radicand guard)."""

    expr: Expr
    threshold: float
    label: str


@dataclass(frozen=True)
class Meta:
    family: str
    params: dict
    t_range: tuple[float, float] = (-1.0, 1.0)
    tol_default: float = 1e-8
    transforms: tuple = ()


@dataclass(frozen=True)
class Solution:
    """Exact flow fields as expressions in (t, x, y, z).  rho is the
    z-derivative of p unless an explicit override is supplied (used only
    to compare against an externally stated density)."""

    u: Expr
    v: Expr
    w: Expr
    p: Expr
    guards: tuple[Guard, ...] = ()
    meta: Meta = field(default_factory=lambda: Meta("custom", {}))
    rho_override: Optional[Expr] = None

    @property
    def rho(self) -> Expr:
        if self.rho_override is not None:
            return self.rho_override
        return diff(self.p, "z")

    def fields(self) -> dict[str, Expr]:
        return {
            "u": self.u,
            "v": self.v,
            "w": self.w,
            "p": self.p,
            "rho": self.rho,
        }

    def with_fields(self, **kw) -> "Solution":
        return replace(self, **kw)


def in_domain_mask(sol: Solution, points) -> np.ndarray:
    """Boolean mask of points satisfying every guard, evaluated
    sequentially so failing points never reach later guard expressions."""
    pts = np.asarray(points, dtype=float)
    mask = np.ones(pts.shape[0], dtype=bool)
    for g in sol.guards:
        alive = np.flatnonzero(mask)
        if alive.size == 0:
            break
        vals = eval_values(g.expr, VARS4, pts[alive])
        mask[alive[vals < g.threshold]] = False
    return mask


def assert_in_domain(sol: Solution, point) -> None:
    pt = np.asarray(point, dtype=float).reshape(1, 4)
    if not in_domain_mask(sol, pt)[0]:
        for g in sol.guards:
            try:
                val = eval_values(g.expr, VARS4, pt)[0]
            except Exception:
                val = float("nan")
            if not val >= g.threshold:
                raise GuardError(
                    f"point {tuple(pt[0])} violates guard {g.label}: "
                    f"{val!r} < {g.threshold!r}"
                )
        raise GuardError(f"point {tuple(pt[0])} is out of domain")
