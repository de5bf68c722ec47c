"""Sectional curvature at the identity via Arnold's formula.

``K(u, v) = (<d,d> - 2<a,b> - 3<a,a> - 4<Bu,Bv>) / (<u,u><v,v> - <u,v>^2)`` with
``2a = ad_u v``, ``2b = ad_top(u,v) - ad_top(v,u)``, ``2d = ad_top(u,v) + ad_top(v,u)``
and ``2Bu = ad_top(u,u)``.

The pairing used for the quotient is selectable: ``"mean"`` is
``(1/2pi) int (Au) v`` (the Fourier-sum normalization ``sum a(n) |u_n|^2``),
``"integral"`` is ``int (Au) v``.  Scaling the metric by ``lam`` scales
``K`` by ``1/lam``, so the two differ by exactly ``2 pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DependentPlane, OrderViolation
from .jacobi import ad_bracket
from .spectral import (
    GridSpec,
    MetricKind,
    PeriodicField,
    check_same_grid,
    derivative,
    inertia_apply,
    inertia_invert,
    inner_product,
    product,
)

PAIRINGS = {"mean": 1.0 / (2.0 * math.pi), "integral": 1.0}


@dataclass
class ArnoldTerms:
    alpha: PeriodicField
    beta: PeriodicField
    delta: PeriodicField
    B_u: PeriodicField
    B_v: PeriodicField


def _coad_momentum(kind: MetricKind, u: PeriodicField, v: PeriodicField) -> PeriodicField:
    # A(ad_top(u, v)) before inversion
    Av = inertia_apply(kind, v)
    return 2.0 * product(derivative(u), Av) + product(u, derivative(Av))


def arnold_terms(kind: MetricKind, u: PeriodicField, v: PeriodicField) -> ArnoldTerms:
    """The five auxiliary fields of Arnold's formula.

    Symmetric and antisymmetric combinations are formed before inverting the
    inertia operator, so degenerate kinds only need the combinations (not each
    ``ad_top`` separately) to have zero mean.
    """
    check_same_grid(u, v)
    m_uv = _coad_momentum(kind, u, v)
    m_vu = _coad_momentum(kind, v, u)
    return ArnoldTerms(
        alpha=0.5 * ad_bracket(u, v),
        beta=inertia_invert(kind, 0.5 * (m_uv - m_vu)),
        delta=inertia_invert(kind, 0.5 * (m_uv + m_vu)),
        B_u=inertia_invert(kind, 0.5 * _coad_momentum(kind, u, u)),
        B_v=inertia_invert(kind, 0.5 * _coad_momentum(kind, v, v)),
    )


@dataclass
class CurvatureReport:
    K: float
    dd: float
    ab: float
    aa: float
    BuBv: float
    denominator: float
    pairing: str = "mean"

    @property
    def numerator(self) -> float:
        return self.dd - 2 * self.ab - 3 * self.aa - 4 * self.BuBv

    def as_dict(self) -> dict:
        return {"K": self.K, "<d,d>": self.dd, "<a,b>": self.ab, "<a,a>": self.aa,
                "<Bu,Bv>": self.BuBv, "denominator": self.denominator, "pairing": self.pairing}


def sectional_curvature(kind: MetricKind, u: PeriodicField, v: PeriodicField,
                        pairing: str = "mean") -> CurvatureReport:
    """Sectional curvature of the plane spanned by ``u`` and ``v`` at the identity.

    Products are 2/3-dealiased, so the grid must carry the doubled bandwidth
    of ``u`` and ``v`` below its cutoff for an exact result.
    """
    lam = PAIRINGS[pairing]

    def ip(f, g):
        return lam * inner_product(kind, f, g)

    t = arnold_terms(kind, u, v)
    uu, vv, uv = ip(u, u), ip(v, v), ip(u, v)
    den = uu * vv - uv**2
    if den <= 1e-12 * max(uu * vv, 1e-300):
        raise DependentPlane(f"u and v span a degenerate plane (Gram determinant {den:.3e})")
    dd = ip(t.delta, t.delta)
    ab = ip(t.alpha, t.beta)
    aa = ip(t.alpha, t.alpha)
    bb = ip(t.B_u, t.B_v)
    K = (dd - 2 * ab - 3 * aa - 4 * bb) / den
    return CurvatureReport(K, dd, ab, aa, bb, den, pairing)


# ---------------------------------------------------------------------------
# closed forms

PAIR_TYPES = ("sin_sin", "sin_cos", "cos_cos", "sin_cos_same")


def mode_pair(grid: GridSpec, pair: str, m: int, n: int):
    """The two single-mode fields named by ``pair``."""
    x = grid.nodes
    if pair == "sin_sin":
        a, b = np.sin(m * x), np.sin(n * x)
    elif pair == "sin_cos":
        a, b = np.sin(m * x), np.cos(n * x)
    elif pair == "cos_cos":
        a, b = np.cos(m * x), np.cos(n * x)
    elif pair == "sin_cos_same":
        a, b = np.sin(m * x), np.cos(m * x)
    else:
        raise ValueError(f"unknown pair type {pair!r}")
    return PeriodicField(grid, a), PeriodicField(grid, b)


def hs_closed_form(s: float, m: int, n: int) -> float:
    """General homogeneous ``H^s`` expression for ``K(sin mx, sin nx)``, ``0 < m < n``."""
    p = 2.0 * s
    t1 = (n - m) ** (-p) * (m ** (1 + p) - 2 * m**p * n + 2 * m * n**p - n ** (1 + p)) ** 2
    t2 = (m + n) ** (-p) * (m ** (1 + p) + 2 * m**p * n + 2 * m * n**p + n ** (1 + p)) ** 2
    t3 = -4 * m**p * (2 * n**2 - m**2) + 4 * n**p * (n**2 - 2 * m**2)
    t4 = -3 * (n - m) ** 2 * (m + n) ** p - 3 * (m + n) ** 2 * (n - m) ** p
    return math.pi / 4 * (n * m) ** (-p) * (t1 + t2 + t3 + t4)


def closed_form_K(family: str, pair: str, m: int, n: int, s: float | None = None) -> float:
    """Tabulated curvature values.

    ``family="mu_half"`` covers the four pair types of the mean-augmented
    half-order metric; ``family="homogeneous_s"`` covers ``sin_sin`` with
    ``m < n`` (``s = 0`` uses the short Burgers form ``3 pi (m^2 + n^2)``).
    """
    if family == "mu_half":
        if pair == "sin_cos_same":
            if m <= 0:
                raise OrderViolation("need m > 0")
            return 0.5 * (5 * m - 6)
        if pair in ("sin_sin", "sin_cos", "cos_cos") and n > m > 0:
            return m * (m**2 + 2 * m * n + 2 * n**2) / (2 * n * (m + n))
        if pair == "sin_cos" and m > n > 0:
            return n * (2 * m**2 + 2 * m * n + n**2) / (2 * m * (m + n))
        raise OrderViolation(f"no tabulated value for {pair} with m={m}, n={n}")
    if family == "homogeneous_s":
        if pair != "sin_sin" or not 0 < m < n:
            raise OrderViolation(f"homogeneous_s closed form needs sin_sin with 0<m<n")
        if s is None:
            raise ValueError("homogeneous_s family needs s")
        if s == 0:
            return 3 * math.pi * (m**2 + n**2)
        return hs_closed_form(s, m, n)
    raise ValueError(f"unknown family {family!r}")


def grid_for_modes(m: int, n: int) -> GridSpec:
    """Smallest power-of-two grid whose dealiased band holds quartic products."""
    need = 3 * 2 * (m + n) + 2
    N = 16
    while N // 3 < 2 * (m + n) or N < need:
        N *= 2
    return GridSpec(N)


def curvature_scan(kind: MetricKind, n_fixed: int, m_range, pair: str = "sin_sin",
                   pairing: str = "mean", family: str | None = None, s: float | None = None):
    """Numeric curvature over ``m`` for fixed ``n`` with closed forms where tabulated.

    Returns a list of row dicts and a sign census.
    """
    rows = []
    for m in m_range:
        grid = grid_for_modes(m, n_fixed)
        u, v = mode_pair(grid, pair, m, n_fixed)
        K = sectional_curvature(kind, u, v, pairing=pairing).K
        closed = None
        if family is not None:
            try:
                closed = closed_form_K(family, pair, m, n_fixed, s=s)
            except OrderViolation:
                closed = None
        rows.append({"m": m, "n": n_fixed, "pair": pair, "family": family or kind.label,
                     "K_numeric": K, "K_closed": closed,
                     "ratio": (K / closed) if closed not in (None, 0.0) else None})
    census = {"positive": sum(r["K_numeric"] > 0 for r in rows),
              "negative": sum(r["K_numeric"] < 0 for r in rows),
              "zero": sum(r["K_numeric"] == 0 for r in rows)}
    return rows, census
