import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wunschlab.errors import DegenerateKindError, DegenerateMeanError, EndpointNotZero, SupportOverflow
from wunschlab.flow import SolverConfig, integrate_euler
from wunschlab.jacobi import (
    BUMP_HALF_WIDTH,
    Ad_push,
    Ad_top,
    VariationPath,
    ad_bracket,
    ad_top,
    build_test_field,
    bump,
    bump_constants,
    conjugate_criterion,
    criterion_constant,
    index_form,
    jacobi_integrate,
    reparametrized_time,
    rotation_closed_form,
)
from wunschlab.spectral import (
    HOMOGENEOUS_HALF,
    MU_HALF,
    Diffeo,
    GridSpec,
    PeriodicField,
    inner_product,
)

G = GridSpec(64)
X = G.nodes
ROOT3 = math.sqrt(3.0)


def field(fn, grid=G):
    return PeriodicField.from_function(grid, fn)


def rotation_traj(N=64, dt=0.01, T=math.pi, stride=1):
    g = GridSpec(N)
    return integrate_euler(SolverConfig(MU_HALF, N, dt, T, record_stride=stride), PeriodicField.constant(g, 1.0))


@pytest.fixture(scope="module")
def rot():
    return rotation_traj()


# -- brackets ------------------------------------------------------------------

def test_ad_bracket_examples():
    one = PeriodicField.constant(G, 1.0)
    assert np.allclose(ad_bracket(one, field(np.sin)).values, -np.cos(X), atol=1e-14)
    u = field(lambda x: np.sin(x) + np.cos(3 * x))
    assert ad_bracket(u, u).sup() <= 1e-14
    assert np.allclose(ad_bracket(field(np.sin), field(np.cos)).values, 1.0, atol=1e-14)


def test_ad_top_examples():
    one = PeriodicField.constant(G, 1.0)
    s3 = field(lambda x: np.sin(3 * x))
    # 2 Lambda^{-1}(w_x) arises with w in the first slot
    assert np.allclose(ad_top(MU_HALF, s3, one).values, 2 * np.cos(3 * X), atol=1e-13)
    assert np.allclose(ad_top(MU_HALF, one, s3).values, 3 * np.cos(3 * X), atol=1e-13)
    out = ad_top(MU_HALF, field(np.sin), field(lambda x: np.sin(2 * x)))
    assert np.allclose(out.values, 4.0 / 3.0 * np.sin(3 * X), atol=1e-13)
    assert ad_top(MU_HALF, PeriodicField.zeros(G), s3).sup() == 0.0


def test_ad_top_degenerate_needs_mean_zero():
    # the mean of 2 u_x Av + u (Av)_x is int u_x Av, nonzero for (sin, cos)
    with pytest.raises(DegenerateMeanError):
        ad_top(HOMOGENEOUS_HALF, field(np.sin), field(np.cos))
    # a mean-zero combination is fine
    ad_top(HOMOGENEOUS_HALF, field(np.sin), field(lambda x: np.sin(2 * x)))


def _rand(rng, kmax=8, grid=G):
    c = np.zeros(grid.N // 2 + 1, dtype=complex)
    c[: kmax + 1] = rng.standard_normal(kmax + 1) + 1j * rng.standard_normal(kmax + 1)
    c[0] = c[0].real
    return PeriodicField.from_coeffs(grid, c)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ad_top_is_adjoint_of_bracket(seed):
    rng = np.random.default_rng(seed)
    u, v, w = (_rand(rng) for _ in range(3))
    lhs = inner_product(MU_HALF, ad_top(MU_HALF, u, v), w)
    rhs = inner_product(MU_HALF, v, ad_bracket(u, w))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_Ad_examples():
    v = field(lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    theta = 0.4
    out = Ad_push(Diffeo.rotation(G, theta), v)
    assert np.allclose(out.values, np.sin(X - theta) + 0.3 * np.cos(2 * (X - theta)), atol=1e-13)
    assert np.allclose(Ad_top(MU_HALF, Diffeo.identity(G), v).values, v.values, atol=1e-13)
    with pytest.raises(DegenerateKindError):
        Ad_top(HOMOGENEOUS_HALF, Diffeo.identity(G), v)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_Ad_duality(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(128)
    v, w = _rand(rng, 6, g), _rand(rng, 6, g)
    eta = Diffeo.from_displacement(g, lambda x: 0.1 * np.sin(x))
    lhs = inner_product(MU_HALF, Ad_top(MU_HALF, eta, v), w)
    rhs = inner_product(MU_HALF, v, Ad_push(eta, w))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# -- Jacobi fields on the rotation geodesic ---------------------------------------

def test_rotation_closed_form_examples():
    w, v = rotation_closed_form(3, 1.0, math.pi)
    assert abs(w - 1.0) <= 1e-14 and abs(v) <= 1e-15
    assert rotation_closed_form(0, 1.0, math.pi)[1] == pytest.approx(math.pi)
    assert abs(rotation_closed_form(-2, 1.0, math.pi / 2)[1] - 1j) <= 1e-15


def test_zero_initial_field(rot):
    sol = jacobi_integrate(MU_HALF, rot, PeriodicField.zeros(G))
    assert np.all(sol.v_values == 0.0)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_jacobi_matches_closed_form(rot, n):
    w0 = field(lambda x: np.cos(n * x) + 0.5 * np.sin(n * x))
    sol = jacobi_integrate(MU_HALF, rot, w0)
    c = w0.full_spectrum()
    for m in {n, -n}:
        closed = rotation_closed_form(m, c[m % G.N], sol.times)[1]
        assert np.max(np.abs(sol.mode(m) - closed)) <= 1e-6
    assert np.all(sol.v_values[0] == 0.0)
    # dv/dt = w
    h = sol.times[1] - sol.times[0]
    dv = (sol.v_values[2:] - sol.v_values[:-2]) / (2 * h)
    assert np.max(np.abs(dv - sol.w_values[1:-1])) <= 1e-3


def test_jacobi_rejects_degenerate(rot):
    with pytest.raises(DegenerateKindError):
        jacobi_integrate(HOMOGENEOUS_HALF, rot, field(np.sin))


# -- index form -------------------------------------------------------------------

def test_index_form_of_jacobi_field_vanishes(rot):
    # the mode-1 field from the closed form vanishes at 0 and pi
    t = rot.times
    v = np.array([np.sin(tt) * np.cos(X - tt) for tt in t])
    vd = np.array([np.cos(tt) * np.cos(X - tt) + np.sin(tt) * np.sin(X - tt) for tt in t])
    rep = index_form(MU_HALF, rot, VariationPath(t, v, vd, G), 0.0, math.pi)
    assert abs(rep.value) <= 1e-5


def test_index_form_zero_field(rot):
    z = np.zeros((len(rot.times), G.N))
    assert index_form(MU_HALF, rot, VariationPath(rot.times, z, z, G), 0.0, math.pi).value == 0.0


def test_index_form_endpoint_check(rot):
    t = rot.times
    v = np.array([np.cos(X) * (1 + 0 * tt) for tt in t])
    with pytest.raises(EndpointNotZero):
        index_form(MU_HALF, rot, VariationPath.from_samples(G, t, v), 0.0, math.pi)


# -- test field and criterion ---------------------------------------------------------

def test_bump_profile_and_derivatives():
    y = np.linspace(-2.5, 2.5, 11)
    g, g1, g2 = bump(y)
    h = 1e-5
    gp, _, _ = bump(y + h)
    gm, _, _ = bump(y - h)
    assert np.allclose(g1, (gp - gm) / (2 * h), atol=1e-8)
    assert np.all(np.array(bump(np.array([BUMP_HALF_WIDTH, 5.0]))) == 0.0)


def test_bump_constants_exact():
    # closed forms: sqrt3 * int cos^6, sqrt3-scaled int cos^4 sin^2, etc.
    A, B, C = bump_constants()
    assert A == pytest.approx(5 * ROOT3 * math.pi / 16, rel=1e-13)
    assert B == pytest.approx(3 * ROOT3 * math.pi / 16, rel=1e-13)
    assert C == pytest.approx(5 * ROOT3 * math.pi / 16, rel=1e-13)
    assert abs(criterion_constant(A, B, C) - 4.0 / 3.0) <= 1e-10


def test_rotation_reparametrized_time_is_identity(rot):
    assert np.allclose(reparametrized_time(rot, 1.0), rot.times, atol=1e-12)


def test_conjugate_criterion_examples():
    tr = rotation_traj(T=4.5, stride=10)
    rep = conjugate_criterion(tr, 1.0, 0.0, 4.5)
    assert rep.lhs == pytest.approx(4.5, rel=1e-12) and rep.satisfied
    assert not conjugate_criterion(tr, 1.0, 0.0, 1.0).satisfied
    assert rep.threshold == pytest.approx(4 * math.pi / 3)


def test_test_field_structure():
    tr = rotation_traj(N=256, dt=0.01, T=2.0)
    tf, path = build_test_field(tr, 1.0, 0.0, 2.0, 0.1)
    assert tf.k == pytest.approx(2 * tf.B / (tf.B + tf.C))
    assert abs(tf.R - 4 / 3) <= 1e-10
    assert np.all(path.v_values[0] == 0) and np.all(path.v_values[-1] == 0)
    # analytic vdot agrees with finite differences in the interior
    h = path.times[1] - path.times[0]
    fd = (path.v_values[2:] - path.v_values[:-2]) / (2 * h)
    assert np.max(np.abs(fd - path.vdot_values[1:-1])) <= 5e-3
    with pytest.raises(SupportOverflow):
        build_test_field(tr, 1.0, 0.0, 2.0, 1.0)


def test_standing_profile_when_momentum_vanishes():
    g = GridSpec(256)
    tr = integrate_euler(SolverConfig(HOMOGENEOUS_HALF, 256, 0.01, 0.5), field(lambda x: -np.sin(x), g))
    tf, _ = build_test_field(tr, 0.0, 0.0, 0.5, 0.05)
    assert abs(tf.k) <= 1e-12


def test_localized_test_field_sign_changes_with_interval():
    tr = rotation_traj(N=1024, dt=0.01, T=4.5)
    long_ = index_form(MU_HALF, tr, build_test_field(tr, 1.0, 0.0, 4.5, 0.05)[1], 0.0, 4.5)
    short = index_form(MU_HALF, tr, build_test_field(tr, 1.0, 0.0, 2.0, 0.05)[1], 0.0, 2.0)
    assert long_.value < 0 < short.value
