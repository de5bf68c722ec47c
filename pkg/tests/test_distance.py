import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wunschlab.distance import basepoint_invariance, norm_comparison, shortcut_run, spike_field
from wunschlab.errors import HorizonExceeded
from wunschlab.spectral import HOMOGENEOUS_HALF, Diffeo, GridSpec, PeriodicField, inner_product, mean

G = GridSpec(1024)


@pytest.mark.parametrize("n", [2, 4, 64, 256])
def test_spike_sup_is_one(n):
    f = spike_field(n, G)
    assert np.max(f.values) == 1.0


def test_spike_rejects_small_parameter():
    with pytest.raises(ValueError):
        spike_field(1, G)


def test_spike_norm_and_mean_decrease():
    fs = [spike_field(n, G) for n in (4, 16, 64, 256)]
    norms = [inner_product(HOMOGENEOUS_HALF, f, f) for f in fs]
    means = [mean(f) for f in fs]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert all(b < a for a, b in zip(means, means[1:]))


def test_constant_profile_control():
    g = GridSpec(64)
    rep = shortcut_run(4, 0.5, 1.0, grid=g, dt=0.01, profile=PeriodicField.constant(g, 1.0))
    assert rep.T_end == pytest.approx(2.0, abs=1e-9)
    assert rep.endpoint_error <= 1e-9
    assert rep.energy == pytest.approx(0.25 * 2.0 * 2 * math.pi, rel=1e-9)


def test_energy_formula():
    rep = shortcut_run(16, 0.5, 0.2, grid=GridSpec(256), dt=0.01)
    assert rep.energy == rep.lam**2 * rep.T_end * rep.norm_sq
    assert rep.reached and rep.sup == 1.0


def test_horizon_exceeded():
    with pytest.raises(HorizonExceeded) as ei:
        shortcut_run(16, 0.5, 1.0, grid=GridSpec(256), dt=0.01, horizon=0.5)
    assert not ei.value.report.reached
    rep = shortcut_run(16, 0.5, 1.0, grid=GridSpec(256), dt=0.01, horizon=0.5, raise_on_horizon=False)
    assert not rep.reached


def test_lambda_range():
    with pytest.raises(ValueError):
        shortcut_run(4, 1.0)


@st.composite
def polys(draw, N=64, kmax=20):
    amps = draw(st.lists(st.floats(-1, 1), min_size=2 * kmax + 1, max_size=2 * kmax + 1))
    c = np.zeros(N // 2 + 1, dtype=complex)
    c[0] = amps[0]
    c[1:kmax + 1] = np.array(amps[1:kmax + 1]) + 1j * np.array(amps[kmax + 1:])
    return PeriodicField.from_coeffs(GridSpec(N), c)


@settings(max_examples=50, deadline=None)
@given(polys())
def test_norm_comparison_nonnegative(f):
    assert norm_comparison(f) >= -1e-12


@settings(max_examples=30, deadline=None)
@given(polys(), st.floats(-3, 3), st.integers(0, 63))
def test_homogeneous_norm_ignores_constants_and_shifts(f, c, shift):
    base = inner_product(HOMOGENEOUS_HALF, f, f)
    assert abs(inner_product(HOMOGENEOUS_HALF, f + c, f + c) - base) <= 1e-12 * max(1.0, base)
    rolled = PeriodicField(f.grid, np.roll(f.values, shift))
    assert abs(inner_product(HOMOGENEOUS_HALF, rolled, rolled) - base) <= 1e-12 * max(1.0, base)


# -- base-point normalization ---------------------------------------------------------

def _path(grid, disp, times):
    return [Diffeo.from_displacement(grid, lambda x, t=t: disp(t, x)) for t in times]


def test_basepoint_rotation():
    g = GridSpec(64)
    t = np.linspace(0, 1, 11)
    assert basepoint_invariance(_path(g, lambda t, x: t + 0 * x, t), t) <= 1e-12


def test_basepoint_sine_path():
    g = GridSpec(64)
    t = np.linspace(0, 1, 11)
    assert basepoint_invariance(_path(g, lambda t, x: 0.1 * t * np.sin(x), t), t) <= 1e-10


def test_basepoint_shifted_path():
    # the node at 0 moves with the rotation part only; the norm ignores that constant
    g = GridSpec(64)
    t = np.linspace(0, 1, 11)
    path = _path(g, lambda t, x: 0.3 * t + 0.1 * t * np.sin(x + 0.5), t)
    assert basepoint_invariance(path, t) <= 1e-9
