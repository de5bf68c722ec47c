"""Short paths to a rotation: spike-driven flows and their metric energy.

A travelling profile ``u(t, x) = lam f(t - x)`` with ``0 < lam < 1`` drags
every particle forward a little each time the profile passes it.  When
``f`` has small half-order norm but sup 1, the path reaches the rotation
``x + theta`` with small energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonExceeded
from .spectral import (
    FULL_HALF,
    MU_HALF,
    Diffeo,
    GridSpec,
    PeriodicField,
    evaluate,
    homogeneous_s,
    inner_product,
    invert_points,
    truncate,
)


def spike_field(n_param: int, grid: GridSpec) -> PeriodicField:
    """Truncated logarithmic spike centred at 0 with node maximum exactly 1.

    ``clamp(log(pi / d) / log(n_param), 0, 1)`` with ``d`` the circular
    distance to 0, restricted to the dealiased band and rescaled.
    """
    if n_param < 2:
        raise ValueError("n_param must be >= 2")
    x = grid.nodes
    d = np.minimum(x, 2 * math.pi - x)
    with np.errstate(divide="ignore"):
        raw = np.log(math.pi / d) / math.log(n_param)
    raw = np.clip(np.nan_to_num(raw, posinf=1.0), 0.0, 1.0)
    f = truncate(PeriodicField(grid, raw), grid.cutoff)
    return f / float(np.max(f.values))


@dataclass
class EnergyReport:
    n_param: int
    norm_sq: float
    sup: float
    lam: float
    theta: float
    T_end: float
    energy: float
    endpoint_error: float
    reached: bool = True
    steps: int = 0

    def as_dict(self) -> dict:
        return {"N_param": self.n_param, "norm_sq": self.norm_sq, "sup": self.sup,
                "lambda": self.lam, "theta": self.theta, "T_end": self.T_end,
                "E": self.energy, "endpoint_error": self.endpoint_error,
                "reached": self.reached}


def shortcut_run(n_param: int, lam: float, theta: float = 1.0, grid: GridSpec | None = None,
                 dt: float = 0.002, horizon: float = 500.0, particles: int = 64,
                 profile: PeriodicField | None = None, raise_on_horizon: bool = True) -> EnergyReport:
    """Flow particles under ``lam f(t - x)`` until each has moved by ``theta``.

    ``profile`` overrides the spike (for controls such as ``f = 1``).  The
    flow is tracked on ``particles`` equally spaced starting points with RK4.
    The endpoint error is the spread ``max |eta(T_end, x) - x - theta|``.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    if grid is None:
        grid = GridSpec(4096)
    f = profile if profile is not None else spike_field(n_param, grid)
    norm_sq = inner_product(MU_HALF, f, f)
    c = f.coeffs
    x0 = np.arange(particles) * (2 * math.pi / particles)

    def vel(t, y):
        return lam * evaluate(c, t - y)

    y = x0.copy()
    t = 0.0
    n = 0
    reached = False
    # accumulated round-off must not cost a whole extra step
    target = theta - 1e-12 * max(1.0, theta)
    while t < horizon:
        if np.min(y - x0) >= target:
            reached = True
            break
        k1 = vel(t, y)
        k2 = vel(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = vel(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = vel(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        n += 1
        t = n * dt
    rep = EnergyReport(n_param=n_param, norm_sq=norm_sq, sup=float(np.max(np.abs(f.values))),
                       lam=lam, theta=theta, T_end=t, energy=lam**2 * t * norm_sq,
                       endpoint_error=float(np.max(np.abs(y - x0 - theta))),
                       reached=reached, steps=n)
    if not reached and raise_on_horizon:
        err = HorizonExceeded(f"rotation {theta} not reached by t={horizon}")
        err.report = rep
        raise err
    return rep


def shortcut_ladder(n_params, lam: float = 0.5, theta: float = 1.0, **kw):
    return [shortcut_run(n, lam, theta, **kw) for n in n_params]


def norm_comparison(f: PeriodicField) -> float:
    """``|f|^2_full - |f|^2_mu``; never negative for real fields."""
    return inner_product(FULL_HALF, f, f) - inner_product(MU_HALF, f, f)


def _homogeneous_norm(s: float, u: PeriodicField) -> float:
    return math.sqrt(max(inner_product(homogeneous_s(s), u, u), 0.0))


def _eulerian_velocity(p_prev, p_next, h, eta: Diffeo) -> PeriodicField:
    # (d/dt eta) o eta^{-1} with a centred difference in time
    grid = eta.grid
    pt = (p_next - p_prev) / (2.0 * h)
    y = invert_points(eta.p.coeffs, grid.nodes)
    return PeriodicField(grid, evaluate(np.fft.rfft(pt) / grid.N, y))


def basepoint_invariance(path, times, s: float = 0.5) -> float:
    """Largest change of the homogeneous norm of the Eulerian velocity under
    renormalizing the path to fix the point 0.

    ``path`` is a sequence of ``Diffeo`` snapshots at equally spaced ``times``.
    """
    path = list(path)
    times = np.asarray(times, dtype=float)
    if len(path) < 3:
        return 0.0
    h = float(times[1] - times[0])
    worst = 0.0
    P = np.array([eta.p.values for eta in path])
    # eta(t, 0) is the displacement at node 0
    Pt = P - P[:, :1]
    for j in range(1, len(path) - 1):
        eta = path[j]
        eta_t = Diffeo(PeriodicField(eta.grid, Pt[j]), check=False)
        u = _eulerian_velocity(P[j - 1], P[j + 1], h, eta)
        ut = _eulerian_velocity(Pt[j - 1], Pt[j + 1], h, eta_t)
        worst = max(worst, abs(_homogeneous_norm(s, u) - _homogeneous_norm(s, ut)))
    return worst
