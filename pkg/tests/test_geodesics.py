import json
import math

import numpy as np
import pytest
import scipy.linalg

from sasaki_lab.algebra import Kind, SpaceFormSpec, curvature_operator, make_structures
from sasaki_lab.geodesics import (
    BundleKind,
    GeodesicState,
    InitialData,
    closed_form_state,
    closed_form_trajectory,
    conserved_quantities,
    derivative_stack,
    expm,
    generator_operator,
    initial_state,
    integrate_rk4,
    load_initial,
    max_state_error,
    random_initial,
    save_initial,
)

SPECS = [
    SpaceFormSpec(Kind.REAL, 5, 1.0),
    SpaceFormSpec(Kind.COMPLEX, 8, 4.0),
    SpaceFormSpec(Kind.QUATERNIONIC, 12, -1.0),
]


def e(N, i):
    v = np.zeros(N)
    v[i - 1] = 1.0
    return v


@pytest.mark.parametrize("bundle", list(BundleKind))
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.7, 1.0])
def test_random_initial_constraints(bundle, rho):
    spec = SpaceFormSpec(Kind.COMPLEX, 8, 1.0)
    init = random_initial(spec, bundle, rho, seed=4)
    assert init.u0 @ init.u0 + init.eta0 @ init.eta0 == pytest.approx(1.0)
    assert np.linalg.norm(init.eta0) == pytest.approx(rho, abs=1e-15)
    assert np.linalg.norm(init.u0) == pytest.approx(math.sqrt(1 - rho**2), abs=1e-15)
    assert np.linalg.norm(init.xi0) == pytest.approx(1.0)
    if bundle is BundleKind.T1M:
        assert abs(init.xi0 @ init.eta0) < 1e-15


def test_random_initial_extremes_and_determinism():
    spec = SpaceFormSpec(Kind.REAL, 4, 1.0)
    horizontal = random_initial(spec, "tm", 0.0, seed=1)
    np.testing.assert_array_equal(horizontal.eta0, np.zeros(4))
    vertical = random_initial(spec, "t1m", 1.0, seed=1)
    np.testing.assert_array_equal(vertical.u0, np.zeros(4))
    a, b = random_initial(spec, "tm", 0.4, seed=9), random_initial(spec, "tm", 0.4, seed=9)
    for name in ("u0", "xi0", "eta0"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    with pytest.raises(ValueError):
        random_initial(spec, "tm", 1.5, seed=0)
    with pytest.raises(ValueError):
        random_initial(spec, "tm", -0.1, seed=0)


def test_initial_data_json_roundtrip(tmp_path):
    spec = SpaceFormSpec(Kind.QUATERNIONIC, 8, -2.0)
    init = random_initial(spec, "t1m", 0.6, seed=3)
    doc = init.to_json(spec, "t1m")
    assert set(doc) == {"kind", "bundle", "dim", "curvature", "rho", "u0", "xi0", "eta0"}
    path = tmp_path / "init.json"
    save_initial(path, spec, "t1m", init)
    spec2, bundle2, init2 = load_initial(path)
    assert spec2 == spec and bundle2 is BundleKind.T1M
    np.testing.assert_array_equal(init2.u0, init.u0)
    np.testing.assert_array_equal(init2.eta0, init.eta0)
    bad = dict(doc, u0=[1.0, 2.0])
    with pytest.raises(ValueError):
        InitialData.from_json(json.loads(json.dumps(bad)))


def test_generator_examples():
    spec = SpaceFormSpec(Kind.REAL, 4, 1.0)
    st = make_structures(spec)
    horizontal = GeodesicState(0.0, e(4, 1), e(4, 2), np.zeros(4))
    np.testing.assert_array_equal(generator_operator(spec, st, horizontal), np.zeros((4, 4)))
    rho = 0.3
    state = GeodesicState(0.0, e(4, 3), e(4, 1), rho * e(4, 2))
    A = generator_operator(spec, st, state)
    np.testing.assert_allclose(A, rho * curvature_operator(spec, st, e(4, 2), e(4, 1)))


def test_derivative_stack_examples():
    u = np.array([1.0, 2.0, 3.0])
    assert len(derivative_stack(np.eye(3), u, 1)) == 1
    stack = derivative_stack(np.zeros((3, 3)), u, 3)
    np.testing.assert_array_equal(stack[0], u)
    np.testing.assert_array_equal(stack[1], 0 * u)
    np.testing.assert_array_equal(stack[2], 0 * u)
    with pytest.raises(ValueError):
        derivative_stack(np.eye(3), u, 0)


@pytest.mark.parametrize("seed", range(5))
def test_real_fourth_derivative_relation(seed):
    spec = SpaceFormSpec(Kind.REAL, 6, 2.0)
    st = make_structures(spec)
    init = random_initial(spec, "tm", 0.5, seed)
    A = generator_operator(spec, st, initial_state(init))
    stack = derivative_stack(A, init.u0, 4)
    b_sq = (init.eta0 @ init.eta0) * (init.xi0 @ init.xi0) - (init.eta0 @ init.xi0) ** 2
    np.testing.assert_allclose(stack[3] + b_sq * 4.0 * stack[1], 0, atol=1e-14)


@pytest.mark.parametrize("scale", [0.0, 1e-3, 0.4, 3.0, 32.0])
def test_expm_against_scipy(scale):
    rng = np.random.default_rng(int(scale * 10))
    A = rng.standard_normal((8, 8))
    A = scale * (A - A.T) / np.linalg.norm(A - A.T, 2)
    ref = scipy.linalg.expm(A)
    assert np.linalg.norm(expm(A) - ref) / np.linalg.norm(ref) <= 1e-13


def test_closed_form_basics():
    for spec in SPECS:
        st = make_structures(spec)
        for bundle in BundleKind:
            init = random_initial(spec, bundle, 0.6, seed=2)
            s0 = closed_form_state(spec, st, bundle, init, 0.0)
            np.testing.assert_array_equal(s0.u, init.u0)
            np.testing.assert_array_equal(s0.xi, init.xi0)
            for sigma in (0.3, 1.0, 4.0):
                s = closed_form_state(spec, st, bundle, init, sigma)
                assert np.linalg.norm(s.u) == pytest.approx(np.linalg.norm(init.u0), rel=1e-13)
                if bundle is BundleKind.TM:
                    np.testing.assert_allclose(s.xi, init.xi0 + sigma * init.eta0, atol=1e-15)
                else:
                    assert np.linalg.norm(s.xi) == pytest.approx(1.0, rel=1e-14)


def test_closed_form_solves_the_ode():
    """Central differences of the exact flow reproduce the right-hand side."""
    h = 1e-4
    for spec in SPECS:
        st = make_structures(spec)
        for bundle in BundleKind:
            init = random_initial(spec, bundle, 0.7, seed=8)
            s = closed_form_state(spec, st, bundle, init, 0.5)
            fwd = closed_form_state(spec, st, bundle, init, 0.5 + h)
            bwd = closed_form_state(spec, st, bundle, init, 0.5 - h)
            du = (fwd.u - bwd.u) / (2 * h)
            dxi = (fwd.xi - bwd.xi) / (2 * h)
            deta = (fwd.eta - bwd.eta) / (2 * h)
            np.testing.assert_allclose(du, curvature_operator(spec, st, s.eta, s.xi) @ s.u, atol=1e-7)
            np.testing.assert_allclose(dxi, s.eta, atol=1e-7)
            expected = 0 * s.xi if bundle is BundleKind.TM else -init.rho**2 * s.xi
            np.testing.assert_allclose(deta, expected, atol=1e-7)


def test_rk4_horizontal_is_stationary():
    spec = SpaceFormSpec(Kind.QUATERNIONIC, 8, 4.0)
    st = make_structures(spec)
    init = random_initial(spec, "tm", 0.0, seed=0)
    traj = integrate_rk4(spec, st, "tm", init, 0.1, 1e-2)
    assert len(traj) == 11
    for s in traj:
        np.testing.assert_array_equal(s.as_vector(), initial_state(init).as_vector())


def test_rk4_harmonic_oscillator():
    spec = SpaceFormSpec(Kind.REAL, 5, 1.0)
    st = make_structures(spec)
    init = random_initial(spec, "t1m", 1.0, seed=6)
    traj = integrate_rk4(spec, st, "t1m", init, 1.0, 1e-3)
    err = max(
        np.max(np.abs(s.xi - (math.cos(s.sigma) * init.xi0 + math.sin(s.sigma) * init.eta0))) for s in traj
    )
    assert err <= 1e-9


def test_rk4_errors():
    spec = SpaceFormSpec(Kind.REAL, 3, 1.0)
    st = make_structures(spec)
    init = random_initial(spec, "tm", 0.5, seed=0)
    with pytest.raises(ValueError):
        integrate_rk4(spec, st, "tm", init, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_rk4(spec, st, "tm", init, -1.0, 0.1)
    traj = integrate_rk4(spec, st, "tm", init, 0.0, 0.1)
    assert len(traj) == 1
    sig = [s.sigma for s in integrate_rk4(spec, st, "tm", init, 0.5, 0.1)]
    assert np.all(np.diff(sig) > 0)
    np.testing.assert_allclose(np.diff(sig), 0.1)


def test_rk4_fourth_order():
    spec = SpaceFormSpec(Kind.REAL, 6, 4.0)
    st = make_structures(spec)
    init = random_initial(spec, "t1m", 0.7, seed=0)
    errs = []
    for h in (1e-2, 5e-3):
        rk = integrate_rk4(spec, st, "t1m", init, 1.0, h)
        errs.append(max_state_error(rk, closed_form_trajectory(spec, st, "t1m", init, 1.0, h)))
    assert 15.0 <= errs[0] / errs[1] <= 17.0


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind.value}{s.dim}")
@pytest.mark.parametrize("bundle", list(BundleKind))
def test_rk4_conservation_and_constant_generator(spec, bundle):
    st = make_structures(spec)
    init = random_initial(spec, bundle, 0.7, seed=1)
    rk = integrate_rk4(spec, st, bundle, init, 1.0, 1e-3)
    dev = conserved_quantities(spec, st, rk)["max_deviation"]
    assert max(dev.values()) <= 1e-9, dev
    names = {"speed_u", "speed_eta", "unit_speed", "b_sq", "generator"}
    names |= {"m"} if spec.kind is Kind.COMPLEX else set()
    names |= {"m1", "m2", "m3"} if spec.kind is Kind.QUATERNIONIC else set()
    assert set(dev) == names
    exact = closed_form_trajectory(spec, st, bundle, init, 1.0, 0.05)
    assert max(conserved_quantities(spec, st, exact)["max_deviation"].values()) <= 1e-13


def test_vertical_b_sq_equals_rho_squared():
    spec = SpaceFormSpec(Kind.COMPLEX, 4, 1.0)
    st = make_structures(spec)
    init = random_initial(spec, "t1m", 1.0, seed=3)
    traj = closed_form_trajectory(spec, st, "t1m", init, 1.0, 0.25)
    for row in conserved_quantities(spec, st, traj)["values"]:
        assert row["b_sq"] == pytest.approx(1.0)


def test_conserved_quantities_empty():
    spec = SpaceFormSpec(Kind.REAL, 3, 1.0)
    with pytest.raises(ValueError):
        conserved_quantities(spec, make_structures(spec), [])
