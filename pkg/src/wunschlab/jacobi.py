"""Adjoint actions, Jacobi fields and the Morse index form along geodesics.

Conventions: ``ad_u v = v u_x - u v_x`` and the metric pairing is
``<u, v> = int (A u) v dx``.  Jacobi fields are stored left-translated,
``J = eta_x v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateKindError, EndpointNotZero, SupportOverflow
from .flow import GeodesicTrajectory
from .spectral import (
    Diffeo,
    GridSpec,
    MetricKind,
    PeriodicField,
    check_same_grid,
    compose,
    derivative,
    inertia_apply,
    inertia_invert,
    inner_product,
    invert_diffeo,
    _horner,
    _weights,
    product,
)


def ad_bracket(u: PeriodicField, v: PeriodicField) -> PeriodicField:
    """``v u_x - u v_x``."""
    check_same_grid(u, v)
    return product(v, derivative(u)) - product(u, derivative(v))


def ad_top(kind: MetricKind, u: PeriodicField, v: PeriodicField) -> PeriodicField:
    """Metric adjoint of ``ad_u``: ``A^{-1}(2 u_x A v + u (A v)_x)``.

    For a degenerate kind the bracket only exists when the combination has
    zero mean; otherwise ``DegenerateMeanError`` is raised.
    """
    check_same_grid(u, v)
    Av = inertia_apply(kind, v)
    m = 2.0 * product(derivative(u), Av) + product(u, derivative(Av))
    return inertia_invert(kind, m)


def Ad_push(eta: Diffeo, v: PeriodicField) -> PeriodicField:
    """``(eta_x v) o eta^{-1}``."""
    return compose(product_raw(eta.eta_x, v), invert_diffeo(eta))


def product_raw(f: PeriodicField, g: PeriodicField) -> PeriodicField:
    # pointwise product without mode truncation; keeps transports invertible
    check_same_grid(f, g)
    return PeriodicField(f.grid, f.values * g.values)


def Ad_top(kind: MetricKind, eta: Diffeo, v: PeriodicField) -> PeriodicField:
    """``A^{-1}[eta_x^2 (A v) o eta]``."""
    if kind.degenerate:
        raise DegenerateKindError(f"Ad_top needs a non-degenerate kind, got {kind.label}")
    Av = compose(inertia_apply(kind, v), eta)
    ex = eta.eta_x.values
    return inertia_invert(kind, PeriodicField(eta.grid, ex**2 * Av.values))


# ---------------------------------------------------------------------------
# Jacobi fields

@dataclass
class JacobiSolution:
    times: np.ndarray
    v_values: np.ndarray
    w_values: np.ndarray
    P_values: np.ndarray
    J_values: np.ndarray
    grid: GridSpec

    def v(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.v_values[i])

    def w(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.w_values[i])

    def J(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.J_values[i])

    def mode(self, n: int) -> np.ndarray:
        """Complex Fourier coefficient of ``e^{inx}`` in ``v`` along the run."""
        spec = np.fft.fft(self.v_values, axis=1) / self.grid.N
        return spec[:, n % self.grid.N]


def _w_from_P(kind, eta_inv: Diffeo, P: PeriodicField) -> PeriodicField:
    # (Ad_eta^T Ad_eta)^{-1} = Ad_{eta^{-1}} Ad_{eta^{-1}}^T
    return Ad_push(eta_inv, Ad_top(kind, eta_inv, P))


def jacobi_integrate(kind: MetricKind, traj: GeodesicTrajectory, w0: PeriodicField,
                     dt: float | None = None, T: float | None = None) -> JacobiSolution:
    """Integrate the left-translated Jacobi system from ``v(0) = 0, w(0) = w0``.

    The conserved-form variable ``P = Ad_eta^T Ad_eta w`` obeys
    ``dP/dt = -ad_top(w, u0)``; ``w`` is recovered from ``P`` at every stage
    and ``v`` is advanced alongside by ``dv/dt = w``.  Stage values of ``eta``
    come from Hermite interpolation of the trajectory snapshots.
    """
    if kind.degenerate:
        raise DegenerateKindError("Jacobi fields need a non-degenerate kind")
    grid = check_same_grid(w0, traj.omega(0))
    u0 = traj.u0
    if T is None:
        T = float(traj.times[-1])
    if dt is None:
        dt = float(np.min(np.diff(traj.times))) if len(traj.times) > 1 else T
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps

    def w_at(t, P):
        eta = traj.eta_at(t)
        return _w_from_P(kind, invert_diffeo(eta), PeriodicField(grid, P))

    def rhs(t, y):
        P, _ = y
        w = w_at(t, P)
        return np.stack([-ad_top(kind, w, u0).values, w.values]), w

    P = w0.values.copy()
    y = np.stack([P, np.zeros(grid.N)])
    ts, vs, ws, Ps, Js = [], [], [], [], []

    def record(t, y, w):
        eta = traj.eta_at(t)
        ts.append(t)
        Ps.append(y[0].copy())
        vs.append(y[1].copy())
        ws.append(w.values.copy())
        Js.append(eta.eta_x.values * y[1])

    t = 0.0
    k1, w = rhs(t, y)
    record(t, y, w)
    for n in range(nsteps):
        k2, _ = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3, _ = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4, _ = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (n + 1) * dt
        k1, w = rhs(t, y)
        record(t, y, w)
    return JacobiSolution(np.array(ts), np.array(vs), np.array(ws), np.array(Ps),
                          np.array(Js), grid)


def rotation_closed_form(n: int, c_n: complex, t):
    """Mode ``n`` of ``(w, v)`` along the rotation geodesic ``u = 1`` (mu-metric).

    ``w_n = c_n exp(-2 i n t / (delta_0(n) + |n|))``; ``v_n = c_n e^{-i t sgn n} sin t``
    for ``n != 0`` and ``c_0 t`` for ``n = 0``.
    """
    t = np.asarray(t, dtype=float)
    a = 1.0 + abs(n) if n == 0 else abs(n)
    w = c_n * np.exp(-2j * n * t / a)
    if n == 0:
        v = c_n * t
    else:
        v = c_n * np.exp(-1j * t * np.sign(n)) * np.sin(t)
    return w, v


# ---------------------------------------------------------------------------
# index form

@dataclass
class VariationPath:
    """Samples of a variation field ``v`` and its time derivative on a time grid."""

    times: np.ndarray
    v_values: np.ndarray
    vdot_values: np.ndarray
    grid: GridSpec

    @classmethod
    def from_samples(cls, grid, times, v_values, vdot_values=None):
        times = np.asarray(times, dtype=float)
        v_values = np.asarray(v_values, dtype=float)
        if vdot_values is None:
            vdot_values = np.gradient(v_values, times, axis=0, edge_order=2)
        return cls(times, v_values, np.asarray(vdot_values, dtype=float), grid)


@dataclass
class IndexFormReport:
    value: float
    kinetic: np.ndarray
    twist: np.ndarray
    times: np.ndarray
    richardson_error: float
    delta: float | None = None

    def as_dict(self) -> dict:
        out = {"I": self.value, "richardson_error": self.richardson_error}
        if self.delta is not None:
            out["Delta"] = self.delta
        return out


ENDPOINT_TOL = 1e-8


def index_form(kind: MetricKind, traj: GeodesicTrajectory, v_path: VariationPath,
               a: float, b: float) -> IndexFormReport:
    """Morse index form ``int_a^b |Ad_eta v'|^2 + <u0, ad_v v'> dt``.

    Composite trapezoid over the path's time nodes in ``[a, b]``; the reported
    error estimate compares against the same rule on every other node.
    """
    if kind.degenerate:
        raise DegenerateKindError("index form needs a non-degenerate kind")
    ts = v_path.times
    sel = np.flatnonzero((ts >= a - 1e-12) & (ts <= b + 1e-12))
    if sel.size < 3:
        raise ValueError("need at least three time nodes inside [a, b]")
    grid = v_path.grid
    scale = max(1.0, float(np.max(np.abs(v_path.v_values[sel]))))
    for i in (sel[0], sel[-1]):
        if np.max(np.abs(v_path.v_values[i])) > ENDPOINT_TOL * scale:
            raise EndpointNotZero(f"v(t={ts[i]:.6g}) is not zero")
    u0 = traj.u0
    kin = np.empty(sel.size)
    tw = np.empty(sel.size)
    for j, i in enumerate(sel):
        v = PeriodicField(grid, v_path.v_values[i])
        vd = PeriodicField(grid, v_path.vdot_values[i])
        eta = traj.eta_at(ts[i])
        z = Ad_push(eta, vd)
        kin[j] = inner_product(kind, z, z)
        tw[j] = inner_product(kind, u0, ad_bracket(v, vd))
    f = kin + tw
    tt = ts[sel]
    fine = float(np.trapezoid(f, tt))
    err = float("nan")
    if sel.size >= 5 and sel.size % 2 == 1:
        coarse = float(np.trapezoid(f[::2], tt[::2]))
        err = abs(fine - coarse) / 3.0
    return IndexFormReport(fine, kin, tw, tt, err)


# ---------------------------------------------------------------------------
# localized test field

BUMP_HALF_WIDTH = math.sqrt(3.0) * math.pi / 2.0


def bump(y):
    """``cos^3(y / sqrt 3)`` on ``|y| < sqrt(3) pi / 2``, zero outside, with two derivatives."""
    y = np.asarray(y, dtype=float)
    s = y / math.sqrt(3.0)
    inside = np.abs(y) < BUMP_HALF_WIDTH
    c, sn = np.cos(s), np.sin(s)
    g = np.where(inside, c**3, 0.0)
    g1 = np.where(inside, -math.sqrt(3.0) * c**2 * sn, 0.0)
    g2 = np.where(inside, 2.0 * c * sn**2 - c**3, 0.0)
    return g, g1, g2


def bump_constants(order: int = 64):
    """``(A, B, C)``: integrals of ``g^2``, ``g'^2``, ``g''^2`` by Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    y = BUMP_HALF_WIDTH * nodes
    w = BUMP_HALF_WIDTH * weights
    g, g1, g2 = bump(y)
    return float(w @ g**2), float(w @ g1**2), float(w @ g2**2)


def criterion_constant(A: float, B: float, C: float) -> float:
    return math.sqrt((A + B) * (B + C)) / (2.0 * B)


def _stretch_trace(traj: GeodesicTrajectory, x0: float) -> np.ndarray:
    coeffs = np.fft.rfft(traj.eta_x_values, axis=1) / traj.grid.N
    wc = (coeffs * _weights(coeffs.shape[1])).T
    return _horner(wc, np.array([x0]))[0].real


def reparametrized_time(traj: GeodesicTrajectory, x0: float) -> np.ndarray:
    """``j(t) = int_0^t d tau / eta_x(tau, x0)^2`` at the snapshot times."""
    ex = _stretch_trace(traj, x0)
    integrand = 1.0 / ex**2
    j = np.zeros_like(integrand)
    j[1:] = np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(traj.times))
    return j


@dataclass
class TestField:
    __test__ = False  # not a pytest class

    x0: float
    eps: float
    a: float
    b: float
    A: float
    B: float
    C: float
    k: float
    omega0: float
    j_a: float
    j_b: float
    times: np.ndarray = field(repr=False, default=None)
    j: np.ndarray = field(repr=False, default=None)
    m: float = BUMP_HALF_WIDTH

    @property
    def R(self) -> float:
        return criterion_constant(self.A, self.B, self.C)

    @property
    def delta(self) -> float:
        return math.pi / (self.j_b - self.j_a)

    def profile(self, s):
        """Time profile ``f(s) = sin(pi (s - j(a)) / (j(b) - j(a)))``."""
        return np.sin(math.pi * (np.asarray(s) - self.j_a) / (self.j_b - self.j_a))

    def limit_value(self) -> float:
        """Small-scale limit of the index form bound for this field."""
        D, k, A, B, C, w = self.delta, self.k, self.A, self.B, self.C, self.omega0
        return math.pi / (4 * D) * (A * D**2 + B * k**2 + B * D**2 + C * k**2 - 4 * k * w * B)


def build_test_field(traj: GeodesicTrajectory, x0: float, a: float, b: float, eps: float):
    """Localized variation ``v = f(j(t)) g((x - x0)/eps - k j(t))`` vanishing at ``a, b``.

    Returns ``(TestField, VariationPath)`` sampled on the snapshot times of
    ``traj`` that fall inside ``[a, b]``; ``v'`` is evaluated analytically.
    """
    ts = traj.times
    sel = np.flatnonzero((ts >= a - 1e-12) & (ts <= b + 1e-12))
    if sel.size < 3:
        raise ValueError("trajectory has too few snapshots inside [a, b]")
    A, B, C = bump_constants()
    om0 = float(traj.omega0.at(np.array([x0]))[0])
    k = 2.0 * B * om0 / (B + C)
    j_all = reparametrized_time(traj, x0)
    jdot_all = 1.0 / _stretch_trace(traj, x0) ** 2
    j, jdot = j_all[sel], jdot_all[sel]
    tf = TestField(x0=x0, eps=eps, a=float(ts[sel[0]]), b=float(ts[sel[-1]]), A=A, B=B, C=C,
                   k=k, omega0=om0, j_a=float(j[0]), j_b=float(j[-1]), times=ts[sel], j=j)
    c = k * j
    if eps * (BUMP_HALF_WIDTH + np.max(np.abs(c))) >= math.pi:
        raise SupportOverflow(
            f"support eps*(m + max|c|) = {eps * (BUMP_HALF_WIDTH + np.max(np.abs(c))):.4g} >= pi")
    grid = traj.grid
    rel = np.mod(grid.nodes - x0 + math.pi, 2 * math.pi) - math.pi
    z = rel[None, :] / eps - c[:, None]
    g, g1, _ = bump(z)
    f = tf.profile(j)
    fs = math.pi / (tf.j_b - tf.j_a) * np.cos(math.pi * (j - tf.j_a) / (tf.j_b - tf.j_a))
    v = f[:, None] * g
    vdot = (fs * jdot)[:, None] * g - (f * k * jdot)[:, None] * g1
    # endpoints are zero up to sin(pi) rounding
    v[0] = 0.0
    v[-1] = 0.0
    return tf, VariationPath(ts[sel].copy(), v, vdot, grid)


@dataclass
class ConjugateReport:
    x0: float
    a: float
    b: float
    lhs: float
    threshold: float
    satisfied: bool

    def as_dict(self) -> dict:
        return {"x0": self.x0, "a": self.a, "b": self.b, "lhs": self.lhs,
                "threshold": self.threshold, "satisfied": self.satisfied}


CRITERION_R = 4.0 / 3.0


def conjugate_criterion(traj: GeodesicTrajectory, x0: float, a: float, b: float) -> ConjugateReport:
    """Compare ``|omega0(x0)| (j(b) - j(a))`` with ``(4/3) pi``."""
    j = reparametrized_time(traj, x0)
    ja = float(np.interp(a, traj.times, j))
    jb = float(np.interp(b, traj.times, j))
    om0 = float(traj.omega0.at(np.array([x0]))[0])
    lhs = abs(om0) * (jb - ja)
    thr = CRITERION_R * math.pi
    return ConjugateReport(x0, a, b, lhs, thr, bool(lhs > thr))
