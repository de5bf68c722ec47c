"""Blowup diagnostics for the mean-zero half-order equation.

Particle stretches ``r(t) = eta_x(t, x)`` obey an Ermakov-Pinney equation
``r'' = c^2 / r^3 - F(t, eta(t, x)) r`` with ``c = omega_0(x)`` and the forcing
``F = -u u'' - H(u H u'')``, which is positive for nonconstant mean-zero ``u``.
Where ``omega_0`` vanishes and ``u_0' < 0`` the stretch is concave and must
hit zero before ``1 / |u_0'|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantField, MeanNotZero
from .flow import (
    BLOWUP,
    COMPLETED,
    GeodesicTrajectory,
    SolverConfig,
    euler_rhs,
    integrate_euler,
)
from .spectral import (
    GridSpec,
    PeriodicField,
    _gauge_ok,
    derivative,
    evaluate,
    hilbert,
    inertia_invert,
    mean,
    pointwise,
    refine,
)

THEOREM_ZERO_TOL = 1e-8


def forcing_F(u: PeriodicField) -> PeriodicField:
    """``-u u'' - H(u H u'')`` with exact products on the doubled grid."""
    if not _gauge_ok(u):
        raise MeanNotZero(f"forcing needs mean-zero velocity, got mean {mean(u):.3e}")
    u2 = refine(u, 2 * u.N)
    uxx = derivative(u2, 2)
    return -pointwise(u2, uxx) - hilbert(pointwise(u2, hilbert(uxx)))


def velocity_derivative_residual(kind, omega: PeriodicField) -> float:
    """Sup of ``u_tx + u_x^2 + u u_xx - omega^2 + F`` at one state.

    ``u_t`` comes from the momentum tendency, so this checks the pointwise
    Lagrangian identity against the Eulerian solver.
    """
    u = inertia_invert(kind, omega)
    ut = inertia_invert(kind, euler_rhs(kind, omega))
    M = 2 * u.N
    u2, om2 = refine(u, M), refine(omega, M)
    ux2 = derivative(u2)
    expr = (refine(derivative(ut), M) + pointwise(ux2, ux2)
            + pointwise(u2, derivative(u2, 2)) - pointwise(om2, om2) + forcing_F(u))
    return expr.sup()


# ---------------------------------------------------------------------------
# Ermakov-Pinney reduction

@dataclass
class ErmakovState:
    """Ermakov-Pinney solutions for a set of particles (columns) over snapshot times."""

    x: np.ndarray
    c: np.ndarray
    times: np.ndarray
    r: np.ndarray
    rp: np.ndarray
    omega_sq: np.ndarray
    status: str = COMPLETED

    def window(self, r_floor: float = 0.1) -> int:
        """Number of leading snapshots with ``min_x r >= r_floor``."""
        bad = np.nonzero(self.r.min(axis=1) < r_floor)[0]
        return int(bad[0]) if bad.size else len(self.times)

    def compare(self, traj: GeodesicTrajectory, r_floor: float = 0.1) -> float:
        """Max ``|r - eta_x(t, x)|`` over the window where ``min r >= r_floor``."""
        n = self.window(r_floor)
        if n == 0:
            return 0.0
        ex = _trace(traj.eta_x_values[:n], traj.grid, self.x)
        return float(np.max(np.abs(self.r[:n] - ex)))


def _trace(values: np.ndarray, grid: GridSpec, x) -> np.ndarray:
    # interpolant values at the points x for every snapshot row
    c = np.fft.rfft(values, axis=1) / grid.N
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([evaluate(row, x) for row in c])


def forcing_trace(traj: GeodesicTrajectory, x) -> np.ndarray:
    """``F(t_i, eta(t_i, x))`` for every snapshot (rows) and particle (columns)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((len(traj.times), x.size))
    pc = np.fft.rfft(traj.p_values, axis=1) / traj.grid.N
    for i in range(len(traj.times)):
        y = x + evaluate(pc[i], x)
        out[i] = forcing_F(traj.u(i)).at(y)
    return out


def ermakov_flow(traj: GeodesicTrajectory, x=None) -> ErmakovState:
    """Integrate ``r'' = c^2/r^3 - Omega(t)^2 r`` for particles starting at ``x``.

    ``x`` defaults to every grid node.  ``Omega^2`` is the forcing along each
    particle path, sampled at the snapshots and linearly interpolated in time;
    RK4 steps coincide with the snapshot spacing.  Integration stops when any
    ``r`` reaches zero.
    """
    x = traj.grid.nodes if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    c = traj.omega0.at(x)
    u0x = derivative(traj.u0).at(x)
    W = forcing_trace(traj, x)
    ts = traj.times
    c2 = c * c

    def rhs(r, rp, w):
        return rp, c2 / r**3 - w * r

    r, rp = np.ones_like(x), u0x.copy()
    rs, rps = [r], [rp]
    status = COMPLETED
    for i in range(len(ts) - 1):
        h = ts[i + 1] - ts[i]
        wm = 0.5 * (W[i] + W[i + 1])
        a1, b1 = rhs(r, rp, W[i])
        a2, b2 = rhs(r + 0.5 * h * a1, rp + 0.5 * h * b1, wm)
        a3, b3 = rhs(r + 0.5 * h * a2, rp + 0.5 * h * b2, wm)
        a4, b4 = rhs(r + h * a3, rp + h * b3, W[i + 1])
        r = r + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        rp = rp + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(rp))) or np.min(r) <= 0:
            status = BLOWUP
            break
        rs.append(r)
        rps.append(rp)
    n = len(rs)
    return ErmakovState(x, c, ts[:n].copy(), np.array(rs), np.array(rps), W[:n], status)


# ---------------------------------------------------------------------------
# integral monitors

def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def bkm_integrals(traj: GeodesicTrajectory, probes=()) -> dict:
    """Running time integrals of ``|omega|_inf``, ``|u_x|_inf`` and ``|omega(t, eta(t, x0))|``."""
    d = traj.diagnostics
    t = traj.times
    out = {
        "times": t,
        "omega_sup": _cumtrapz(d["omega_sup"], t),
        "ux_sup": _cumtrapz(d["ux_sup"], t),
        "localized": {},
    }
    pc = np.fft.rfft(traj.p_values, axis=1) / traj.grid.N
    oc = np.fft.rfft(traj.omega_values, axis=1) / traj.grid.N
    for x0 in probes:
        vals = np.empty(len(t))
        for i in range(len(t)):
            y = x0 + evaluate(pc[i], np.array([x0]))[0]
            vals[i] = abs(evaluate(oc[i], np.array([y]))[0])
        out["localized"][float(x0)] = _cumtrapz(vals, t)
    return out


def _sq_integral(f: PeriodicField, g: PeriodicField, h: PeriodicField) -> float:
    # exact integral of f g h for inputs within the dealiased band
    M = 2 * f.N
    vals = refine(f, M).values * refine(g, M).values * refine(h, M).values
    return float(2 * math.pi * vals.mean())


def h2_energy(u: PeriodicField) -> float:
    uxx = derivative(u, 2)
    return float(2 * math.pi * np.mean(uxx.values**2))


def h2_rate(kind, omega: PeriodicField) -> float:
    """``-3 int u_x omega_x^2 - 2 int u_x u_xx^2``."""
    u = inertia_invert(kind, omega)
    ux, uxx, omx = derivative(u), derivative(u, 2), derivative(omega)
    return -3 * _sq_integral(ux, omx, omx) - 2 * _sq_integral(ux, uxx, uxx)


def h2_identity_residual(traj: GeodesicTrajectory, t_index: int) -> float:
    """``|centred d/dt int u_xx^2 - rate|`` at an interior snapshot."""
    i = t_index
    if i <= 0 or i >= len(traj.times) - 1:
        raise ValueError("need an interior snapshot")
    e_prev = h2_energy(traj.u(i - 1))
    e_next = h2_energy(traj.u(i + 1))
    dE = (e_next - e_prev) / (traj.times[i + 1] - traj.times[i - 1])
    return abs(dE - h2_rate(traj.kind, traj.omega(i)))


def log_sobolev_ratio(f: PeriodicField, oversample: int = 4) -> float:
    """``|Hf|_inf / ((1 + log+ |f'|_2)(|f|_inf + 1))``, sups on a refined grid."""
    if f.values.max() - f.values.min() == 0.0 or np.allclose(f.values, f.values[0], atol=1e-14):
        raise ConstantField("ratio undefined for constant fields")
    fr = refine(f, oversample * f.N)
    d = derivative(f)
    l2 = math.sqrt(2 * math.pi * np.mean(d.values**2))
    return hilbert(fr).sup() / ((1.0 + max(math.log(l2), 0.0)) * (fr.sup() + 1.0))


# ---------------------------------------------------------------------------
# driver

@dataclass
class BlowupReport:
    status: str
    T_star: tuple | None
    x_star: float
    omega0_at_x_star: float
    bkm_omega: float
    bkm_ux: float
    localized: dict
    min_F: float
    theorem_checks: list = field(default_factory=list)
    trajectory: GeodesicTrajectory | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "T_star": list(self.T_star) if self.T_star else None,
            "x_star": self.x_star,
            "omega0_x_star": self.omega0_at_x_star,
            "bkm_omega_integral": self.bkm_omega,
            "bkm_ux_integral": self.bkm_ux,
            "localized": {repr(k): v for k, v in self.localized.items()},
            "min_F": self.min_F,
            "theorem_checks": self.theorem_checks,
        }


def min_forcing(traj: GeodesicTrajectory) -> np.ndarray:
    return np.array([forcing_F(traj.u(i)).min() for i in range(len(traj.times))])


def detect_blowup(config: SolverConfig, u0: PeriodicField, probes=()) -> BlowupReport:
    """Run the momentum solver and collect blowup diagnostics.

    The bound ``T* < 1/|u0'(x0)|`` is checked at each probe where
    ``|omega_0(x0)| <= 1e-8`` and ``u0'(x0) < 0``; the upper end of the
    detection bracket is compared with the bound.
    """
    traj = integrate_euler(config, u0)
    last = len(traj.times) - 1
    j = int(np.argmin(traj.eta_x_values[last]))
    x_star = float(traj.grid.nodes[j])
    om0 = traj.omega0
    u0x = derivative(traj.u0)
    bkm = bkm_integrals(traj, probes)
    checks = []
    for x0 in probes:
        w = float(om0.at(np.array([x0]))[0])
        s = float(u0x.at(np.array([x0]))[0])
        if abs(w) <= THEOREM_ZERO_TOL and s < 0:
            bound = 1.0 / abs(s)
            hit = traj.status == BLOWUP and traj.t_star is not None and traj.t_star[1] < bound
            checks.append({"x0": float(x0), "u0_prime": s, "bound": bound, "satisfied": bool(hit)})
    loc = {k: float(v[-1]) for k, v in bkm["localized"].items()}
    try:
        mF = float(min_forcing(traj).min())
    except MeanNotZero:
        mF = float("nan")
    return BlowupReport(
        status=traj.status, T_star=traj.t_star, x_star=x_star,
        omega0_at_x_star=float(om0.values[j]),
        bkm_omega=float(bkm["omega_sup"][-1]), bkm_ux=float(bkm["ux_sup"][-1]),
        localized=loc, min_F=mF, theorem_checks=checks, trajectory=traj)
