"""Geodesic flows of right-invariant metrics on the circle diffeomorphism group.

Three integrators are provided for the same geodesic:

* :func:`integrate_euler` evolves the momentum ``omega = A u`` by the
  Euler-Arnold equation ``omega_t + u omega_x + 2 omega u_x = 0`` and carries
  the particle map ``eta`` and ``log eta_x`` along;
* :func:`integrate_ebin` integrates the first-order field
  ``eta_t = A_eta^{-1}(A u0 / eta_x^2)`` directly on the group;
* :func:`integrate_spray` integrates the second-order spray
  ``eta_t = v, v_t = S_eta(v)``.

All three use classical fixed-step RK4.  Finite-time blowup is a result, not an
error: it ends a run with ``status == "blowup"`` and a time bracket.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateKindError, DegenerateMeanError, NonFiniteState
from .spectral import (
    Diffeo,
    GridSpec,
    MetricKind,
    PeriodicField,
    _gauge_ok,
    derivative,
    evaluate,
    evaluate_with_derivative,
    inertia_apply,
    inertia_invert,
    invert_points,
    mean,
    product,
    truncate,
)

log = logging.getLogger(__name__)

COMPLETED = "completed"
BLOWUP = "blowup"

# Blowup is declared when the smallest particle stretch drops below this.
ETA_X_FLOOR = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    kind: MetricKind
    N: int
    dt: float
    T: float
    record_stride: int = 1
    blowup_omega_cap: float = 1e4
    max_halvings: int = 8
    eta_x_floor: float = ETA_X_FLOOR

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.N)


@dataclass
class GeodesicTrajectory:
    """Snapshots of a geodesic ``eta(t)`` together with its Eulerian data.

    Arrays are indexed ``[snapshot, node]``.  ``eta_x`` is the evolved stretch
    (not the spectral derivative of ``p``), and ``v`` holds the particle
    velocities ``u(t, eta(t, x_j))``.
    """

    kind: MetricKind
    grid: GridSpec
    times: np.ndarray
    omega_values: np.ndarray
    p_values: np.ndarray
    eta_x_values: np.ndarray
    v_values: np.ndarray
    status: str = COMPLETED
    t_star: tuple | None = None
    config: SolverConfig | None = None
    method: str = "euler"
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def omega(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.omega_values[i])

    def u(self, i: int) -> PeriodicField:
        return inertia_invert(self.kind, self.omega(i))

    @property
    def omega0(self) -> PeriodicField:
        return self.omega(0)

    @property
    def u0(self) -> PeriodicField:
        return self.u(0)

    def eta(self, i: int) -> Diffeo:
        return Diffeo(PeriodicField(self.grid, self.p_values[i]), check=False)

    def eta_x(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.eta_x_values[i])

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        return i

    def p_at(self, t: float) -> np.ndarray:
        """Displacement at time ``t`` by cubic Hermite interpolation.

        Uses the particle velocities as node derivatives, so the interpolant
        is fourth-order accurate in the snapshot spacing.
        """
        ts = self.times
        if t <= ts[0]:
            return self.p_values[0].copy()
        if t >= ts[-1]:
            return self.p_values[-1].copy()
        i = int(np.searchsorted(ts, t) - 1)
        i = min(max(i, 0), len(ts) - 2)
        h = ts[i + 1] - ts[i]
        s = (t - ts[i]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return (h00 * self.p_values[i] + h10 * h * self.v_values[i]
                + h01 * self.p_values[i + 1] + h11 * h * self.v_values[i + 1])

    def eta_at(self, t: float) -> Diffeo:
        return Diffeo(PeriodicField(self.grid, self.p_at(t)), check=False)

    def summary(self) -> dict:
        out = {
            "kind": self.kind.label,
            "N": self.grid.N,
            "method": self.method,
            "status": self.status,
            "snapshots": len(self.times),
            "t_final": float(self.times[-1]),
        }
        if self.config is not None:
            out.update(dt=self.config.dt, T=self.config.T)
        if self.t_star is not None:
            out["T_star"] = [float(self.t_star[0]), float(self.t_star[1])]
        return out


# ---------------------------------------------------------------------------
# right-hand sides

def _inverse_symbol(kind: MetricKind, grid: GridSpec) -> np.ndarray:
    sym = kind.symbol(grid.k).astype(float)
    with np.errstate(divide="ignore"):
        inv = 1.0 / sym
    inv[sym == 0] = 0.0
    return inv


def _dealias(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    c[grid.cutoff + 1:] = 0.0
    return c


def euler_rhs(kind: MetricKind, omega: PeriodicField) -> PeriodicField:
    """Momentum tendency ``-(u omega_x + 2 omega u_x)`` with ``u = A^{-1} omega``."""
    u = inertia_invert(kind, omega)
    return -(product(u, derivative(omega)) + 2.0 * product(omega, derivative(u)))


def _require_nondegenerate(kind: MetricKind):
    if kind.degenerate:
        raise DegenerateKindError(f"{kind.label} is degenerate; use integrate_euler")


def _pullback_to_eulerian(values: np.ndarray, eta: Diffeo) -> np.ndarray:
    """Samples of ``g o eta^{-1}`` where ``g(x_j) = values[j]``."""
    grid = eta.grid
    y = invert_points(eta.p.coeffs, grid.nodes)
    return evaluate(np.fft.rfft(values) / grid.N, y)


def ebin_rhs(kind: MetricKind, eta: Diffeo, u0: PeriodicField) -> PeriodicField:
    """Ebin's first-order field ``A_eta^{-1}(A u0 / eta_x^2)`` at ``eta``.

    Evaluated through ``A_eta^{-1} = R_eta A^{-1} R_{eta^{-1}}``.
    """
    _require_nondegenerate(kind)
    grid = eta.grid
    ex = eta.eta_x.values
    if ex.min() <= 0:
        from .errors import NotADiffeo
        raise NotADiffeo("eta_x is not positive")
    w = inertia_apply(kind, u0).values / ex**2
    g = _pullback_to_eulerian(w, eta)
    uc = _dealias(np.fft.rfft(g) / grid.N * _inverse_symbol(kind, grid), grid)
    return PeriodicField(grid, evaluate(uc, eta.values))


def spray_operator(kind: MetricKind, u: PeriodicField) -> PeriodicField:
    """``S(u) = A^{-1}([A, uD]u - 2 (Au)(Du))`` with ``[A,uD]u = A(u u_x) - u (Au)_x``."""
    _require_nondegenerate(kind)
    ux = derivative(u)
    Au = inertia_apply(kind, u)
    bracket = inertia_apply(kind, product(u, ux)) - product(u, derivative(Au))
    return inertia_invert(kind, bracket - 2.0 * product(Au, ux))


def spray_rhs(kind: MetricKind, eta: Diffeo, v: PeriodicField) -> PeriodicField:
    """``S_eta(v) = S(v o eta^{-1}) o eta``."""
    _require_nondegenerate(kind)
    grid = eta.grid
    u = PeriodicField(grid, _pullback_to_eulerian(v.values, eta))
    S = spray_operator(kind, u)
    return PeriodicField(grid, S.at(eta.values))


# ---------------------------------------------------------------------------
# integrators

def _rk4(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Recorder:
    def __init__(self):
        self.t, self.omega, self.p, self.ex, self.v = [], [], [], [], []

    def add(self, t, omega, p, ex, v):
        self.t.append(float(t))
        self.omega.append(np.array(omega))
        self.p.append(np.array(p))
        self.ex.append(np.array(ex))
        self.v.append(np.array(v))

    def build(self, kind, grid, **kw) -> GeodesicTrajectory:
        traj = GeodesicTrajectory(
            kind=kind, grid=grid, times=np.array(self.t),
            omega_values=np.array(self.omega), p_values=np.array(self.p),
            eta_x_values=np.array(self.ex), v_values=np.array(self.v), **kw)
        traj.diagnostics = snapshot_diagnostics(traj)
        return traj


def _check_initial(kind: MetricKind, u0: PeriodicField, grid: GridSpec):
    if u0.grid != grid:
        raise ValueError(f"u0 lives on N={u0.grid.N}, config has N={grid.N}")
    if kind.degenerate and not _gauge_ok(u0):
        raise DegenerateMeanError(
            f"{kind.label} needs mean-zero initial data, got mean {mean(u0):.3e}")


def integrate_euler(config: SolverConfig, u0: PeriodicField) -> GeodesicTrajectory:
    """Integrate the Euler-Arnold equation in momentum form plus the particle map.

    The state is ``(omega, p, log eta_x)`` on the nodes, advanced by
    ``omega_t = -(u omega_x + 2 omega u_x)``, ``p_t = u o eta`` and
    ``(log eta_x)_t = u_x o eta``.  Initial momentum is restricted to the
    dealiased band.
    """
    kind, grid = config.kind, config.grid
    _check_initial(kind, u0, grid)
    N = grid.N
    inv = _inverse_symbol(kind, grid)
    ik = 1j * grid.k
    ik[-1] = 0.0
    x = grid.nodes

    def rhs(y):
        om, p, _ = y
        oc = np.fft.rfft(om) / N
        uc = oc * inv
        u = np.fft.irfft(uc * N, n=N)
        ux = np.fft.irfft(ik * uc * N, n=N)
        omx = np.fft.irfft(ik * oc * N, n=N)
        tend = np.fft.rfft(u * omx + 2.0 * om * ux) / N
        tend[grid.cutoff + 1:] = 0.0
        tend[-1] = 0.0
        d_om = -np.fft.irfft(tend * N, n=N)
        pv, dv = evaluate_with_derivative(uc, x + p)
        return np.stack([d_om, pv, dv])

    om0 = truncate(inertia_apply(kind, u0), grid.cutoff).values
    y = np.stack([om0, np.zeros(N), np.zeros(N)])
    return _drive(config, rhs, y, unpack=lambda y: y, method="euler")


def _particle_velocity(kind, grid, om, p):
    uc = np.fft.rfft(om) / grid.N * _inverse_symbol(kind, grid)
    return evaluate(uc, grid.nodes + p)


def _drive(config: SolverConfig, rhs, y, unpack, method: str) -> GeodesicTrajectory:
    """Shared stepping loop: RK4, dt halving near blowup, recording.

    ``unpack(y)`` maps the solver state to ``(omega, p, log eta_x)`` samples.
    """
    kind, grid = config.kind, config.grid
    rec = _Recorder()

    def record(t, y):
        om, p, L = unpack(y)
        rec.add(t, om, p, np.exp(L), _particle_velocity(kind, grid, om, p))

    t, dt, cap, halvings, step = 0.0, config.dt, config.blowup_omega_cap, 0, 0
    # time is kept as base + n*dt to avoid drift from repeated addition
    t_base, n_since = 0.0, 0
    status, bracket = COMPLETED, None
    record(t, y)
    eps = 1e-12 * config.T
    while t < config.T - eps:
        h = min(dt, config.T - t)
        y_new = _rk4(rhs, y, h)
        if not np.all(np.isfinite(y_new)):
            if halvings > 0:
                status, bracket = BLOWUP, (t, t + h)
                log.info("%s: non-finite state after dt halving, t in [%g, %g]", method, t, t + h)
                break
            raise NonFiniteState(f"non-finite state at t={t + h:.6g}")
        om, p, L = unpack(y_new)
        step += 1
        if np.exp(L.min()) < config.eta_x_floor:
            status, bracket = BLOWUP, (t, t + h)
            record(t + h, y_new)
            log.info("%s: min eta_x < %g, T* in [%g, %g]", method, config.eta_x_floor, t, t + h)
            break
        n_since += 1
        t = t_base + n_since * dt if h == dt else t + h
        y = y_new
        if np.max(np.abs(om)) > cap:
            if halvings >= config.max_halvings:
                status, bracket = BLOWUP, (t - h, t)
                record(t, y)
                log.info("%s: |omega| cap exceeded after %d halvings", method, halvings)
                break
            halvings += 1
            t_base, n_since = t, 0
            dt *= 0.5
            cap *= 2.0
        if step % config.record_stride == 0 or t >= config.T - eps:
            record(t, y)
    return rec.build(kind, grid, status=status, t_star=bracket, config=config, method=method)


def integrate_ebin(config: SolverConfig, u0: PeriodicField) -> GeodesicTrajectory:
    """Integrate ``eta_t = A_eta^{-1}(A u0 / eta_x^2)`` from the identity."""
    kind, grid = config.kind, config.grid
    _require_nondegenerate(kind)
    _check_initial(kind, u0, grid)
    om0 = truncate(inertia_apply(kind, u0), grid.cutoff)
    u0 = inertia_invert(kind, om0)
    N = grid.N

    def rhs(y):
        p = y[0]
        eta = Diffeo(PeriodicField(grid, p), check=False)
        return ebin_rhs(kind, eta, u0).values[None, :]

    def unpack(y):
        p = y[0]
        ex = 1.0 + np.fft.irfft(1j * grid.k * np.fft.rfft(p), n=N)
        om = om0.values / ex**2
        om_e = _pullback_to_eulerian(om, Diffeo(PeriodicField(grid, p), check=False))
        return om_e, p, np.log(np.maximum(ex, 1e-300))

    return _drive(config, rhs, np.zeros((1, N)), unpack, method="ebin")


def integrate_spray(config: SolverConfig, u0: PeriodicField) -> GeodesicTrajectory:
    """Integrate the second-order spray ``eta_t = v, v_t = S_eta(v)``."""
    kind, grid = config.kind, config.grid
    _require_nondegenerate(kind)
    _check_initial(kind, u0, grid)
    u0 = inertia_invert(kind, truncate(inertia_apply(kind, u0), grid.cutoff))
    N = grid.N

    def rhs(y):
        p, v = y
        eta = Diffeo(PeriodicField(grid, p), check=False)
        return np.stack([v, spray_rhs(kind, eta, PeriodicField(grid, v)).values])

    def unpack(y):
        p, v = y
        eta = Diffeo(PeriodicField(grid, p), check=False)
        u = PeriodicField(grid, _pullback_to_eulerian(v, eta))
        ex = eta.eta_x.values
        return inertia_apply(kind, u).values, p, np.log(np.maximum(ex, 1e-300))

    y0 = np.stack([np.zeros(N), u0.values])
    return _drive(config, rhs, y0, unpack, method="spray")


# ---------------------------------------------------------------------------
# Lagrangian flow of a prescribed velocity history

@dataclass
class LagrangianFlow:
    times: np.ndarray
    p_values: np.ndarray
    eta_x_values: np.ndarray
    status: str = COMPLETED
    grid: GridSpec | None = None

    def eta(self, i: int) -> Diffeo:
        return Diffeo(PeriodicField(self.grid, self.p_values[i]), check=False)

    def eta_x(self, i: int) -> PeriodicField:
        return PeriodicField(self.grid, self.eta_x_values[i])


def lagrangian_flow(u_series, dt: float, floor: float = ETA_X_FLOOR) -> LagrangianFlow:
    """Particle map of a velocity history sampled every ``dt``.

    RK4 on ``p_t = u(t, x + p)`` and ``(log eta_x)_t = u_x(t, x + p)``, with the
    velocity interpolated linearly in time between snapshots.  A collapse of
    ``eta_x`` below ``floor`` stops the run with status ``blowup``.
    """
    u_series = list(u_series)
    grid = u_series[0].grid
    coeffs = np.array([u.coeffs for u in u_series])
    x = grid.nodes
    N = grid.N

    def rhs_at(c):
        def rhs(y):
            v, d = evaluate_with_derivative(c, x + y[0])
            return np.stack([v, d])
        return rhs

    y = np.zeros((2, N))
    ts, ps, exs = [0.0], [y[0].copy()], [np.ones(N)]
    status = COMPLETED
    for n in range(len(u_series) - 1):
        c0, c1 = coeffs[n], coeffs[n + 1]
        cm = 0.5 * (c0 + c1)
        k1 = rhs_at(c0)(y)
        k2 = rhs_at(cm)(y + 0.5 * dt * k1)
        k3 = rhs_at(cm)(y + 0.5 * dt * k2)
        k4 = rhs_at(c1)(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ts.append((n + 1) * dt)
        ps.append(y[0].copy())
        exs.append(np.exp(y[1]))
        if exs[-1].min() < floor:
            status = BLOWUP
            break
    return LagrangianFlow(np.array(ts), np.array(ps), np.array(exs), status, grid)


# ---------------------------------------------------------------------------
# diagnostics

def conservation_residual(traj: GeodesicTrajectory, t_index: int) -> float:
    """``max_x |eta_x^2 (omega o eta) - omega_0|`` at one snapshot."""
    if t_index == 0:
        return 0.0
    om = traj.omega(t_index)
    eta = traj.eta(t_index)
    ex = traj.eta_x_values[t_index]
    transported = ex**2 * om.at(eta.values)
    return float(np.max(np.abs(transported - traj.omega_values[0])))


def snapshot_diagnostics(traj: GeodesicTrajectory) -> dict:
    """Per-snapshot mean omega, min eta_x, sup norms and conservation residual."""
    grid = traj.grid
    ik = 1j * grid.k
    ik[-1] = 0.0
    inv = _inverse_symbol(traj.kind, grid)
    oc = np.fft.rfft(traj.omega_values, axis=1) / grid.N
    ux = np.fft.irfft(ik * oc * inv * grid.N, n=grid.N, axis=1)
    return {
        "mean_omega": oc[:, 0].real.copy(),
        "min_eta_x": traj.eta_x_values.min(axis=1),
        "omega_sup": np.abs(traj.omega_values).max(axis=1),
        "ux_sup": np.abs(ux).max(axis=1),
        "conservation_residual": np.array(
            [conservation_residual(traj, i) for i in range(len(traj.times))]),
    }
