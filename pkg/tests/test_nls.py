import numpy as np
import pytest
from scipy.integrate import quad, simpson

from gapsol.errors import AnisotropicIndefinite, NoRealGroundState

from gapsol.nls import (
    EffectiveNls,
    build_envelope,
    canonicalize,
    decay_moments,
    effective_coefficients,
    effective_gamma,
    envelope_residual,
    evaluate_envelope,
    integral_identity_signs,
    radial_residual,
    solve_ground_state_radial,
)
from oracles import gamma_bruteforce, ground_state_collocation


@pytest.fixture(scope="module")
def townes():
    return solve_ground_state_radial(2)


@pytest.fixture(scope="module")
def townes_collocation():
    return ground_state_collocation(2, n=601)


def test_reference_coefficients(reference, reference_edge):
    nls = effective_coefficients(reference_edge, reference)
    assert abs(nls.Gamma - 2.25) <= 1e-12
    assert nls.omega1 == 1.0
    assert not nls.sign_flip_applied
    np.testing.assert_allclose(nls.G0, -0.25 * np.eye(2), atol=1e-6)


def test_gamma_matches_bruteforce_exactly(reference, reference_edge):
    g = effective_gamma(reference, reference_edge.eta)
    assert g == pytest.approx(gamma_bruteforce(reference, reference_edge.eta), abs=1e-14)


def test_gamma_with_exact_vector_is_exact(reference):
    eta = np.array([1, 1, -1, -1]) / 2
    assert effective_gamma(reference, eta) == 2.25
    # a vector of norm sqrt(2) gives four times the value
    assert effective_gamma(reference, np.sqrt(2) * eta) == pytest.approx(9.0)


def test_gamma_zero_for_zero_coefficients(reference, reference_edge):
    p = reference.scaled_nonlinearity(0.0)
    assert effective_coefficients(reference_edge, p).Gamma == 0


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5, -4.0])
def test_gamma_phase_invariant(reference, reference_edge, theta):
    g = effective_gamma(reference, np.exp(1j * theta) * reference_edge.eta)
    assert g == pytest.approx(effective_gamma(reference, reference_edge.eta), abs=1e-14)


def test_omega1_sign_follows_edge_side(reference, reference_edge):
    from dataclasses import replace

    assert effective_coefficients(reference_edge, reference, -3.0).omega1 == 3.0
    upper = replace(reference_edge, side="upper")
    assert effective_coefficients(upper, reference, 2.0).omega1 == -2.0


def test_flip_marks_and_negates(reference, reference_edge):
    nls = effective_coefficients(reference_edge, reference, flip_nonlinearity=True)
    assert nls.sign_flip_applied
    assert nls.Gamma == pytest.approx(-2.25, abs=1e-12)


def test_canonicalize_reference_flipped():
    nls = EffectiveNls(2, 1.0, -0.25 * np.eye(2), -2.25)
    sc = canonicalize(nls)
    assert sc.focusing
    assert sc.a == pytest.approx(2 / 3, rel=1e-15)
    assert sc.b == pytest.approx(2.0, rel=1e-15)


def test_canonicalize_reference_unflipped_rejected():
    nls = EffectiveNls(2, 1.0, -0.25 * np.eye(2), 2.25)
    assert integral_identity_signs(nls) == (1, 1, 1)
    with pytest.raises(NoRealGroundState):
        canonicalize(nls)
    assert not canonicalize(nls, strict=False).focusing


def test_canonicalize_1d_sech():
    # omega1 C + G0 C'' + Gamma C^3 = 0 with omega1=1, G0=-1, Gamma=-1 is
    # C'' = C - C^3, solved by sqrt(2) sech(x)
    sc = canonicalize(EffectiveNls(1, 1.0, -np.eye(1), -1.0))
    assert sc.a == pytest.approx(1.0) and sc.b == pytest.approx(1.0)


def test_canonicalize_1d_non_decaying_linear_part_rejected():
    # omega1 = 1 with positive G0 gives oscillatory, not decaying, linear behaviour
    with pytest.raises(NoRealGroundState):
        canonicalize(EffectiveNls(1, 1.0, np.eye(1), -1.0))


def test_canonicalize_indefinite_rejected():
    with pytest.raises(AnisotropicIndefinite):
        canonicalize(EffectiveNls(2, 1.0, np.diag([-1.0, 1.0]), -1.0))


def test_canonicalize_complex_gamma_rejected():
    with pytest.raises(NoRealGroundState):
        canonicalize(EffectiveNls(2, 1.0, -np.eye(2), -1.0 + 1e-3j))


def test_canonicalize_anisotropic_map():
    G0 = np.array([[-0.3, 0.1], [0.1, -0.5]])
    sc = canonicalize(EffectiveNls(2, 1.0, G0, -2.0))
    # S G0 S^T = sigma beta^2 I with sigma = -1, beta^2 = omega1
    np.testing.assert_allclose(sc.S @ G0 @ sc.S.T, -np.eye(2), atol=1e-14)
    assert sc.b is None


def test_ground_state_1d_closed_form():
    p = solve_ground_state_radial(1)
    assert abs(p.u0 - np.sqrt(2)) <= 1e-8
    np.testing.assert_allclose(p.u_values, np.sqrt(2) / np.cosh(p.r_samples), atol=1e-9)


def test_ground_state_2d_value(townes):
    assert townes.u0 == pytest.approx(2.2062, abs=5e-5)


def test_ground_state_2d_matches_collocation(townes, townes_collocation):
    diff = np.abs(townes_collocation(townes.r_samples) - townes.u_values).max()
    assert diff <= 10 * townes.tol


def test_ground_state_2d_critical_power(townes, townes_collocation):
    r = townes.r_samples
    p_shoot = 2 * np.pi * simpson(townes.u_values**2 * r, x=r)
    p_coll = 2 * np.pi * simpson(townes_collocation(r) ** 2 * r, x=r)
    assert p_shoot == pytest.approx(11.70, abs=5e-3)
    assert p_shoot == pytest.approx(p_coll, rel=1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ground_state_invariants(d):
    p = solve_ground_state_radial(d)
    u = p.u_values
    assert u[0] > 0
    assert np.all(np.diff(u) < 0)
    assert u[-1] <= 1e-8 * u[0]
    assert np.abs(radial_residual(p)).max() <= 1e-8
    assert p.decay_rate == pytest.approx(1.0, abs=1e-2)


def test_ground_state_3d_value():
    assert solve_ground_state_radial(3).u0 == pytest.approx(4.3374, abs=1e-4)


def test_envelope_at_origin(flipped_envelope, townes):
    c0 = evaluate_envelope(flipped_envelope, np.zeros((1, 2)))[0]
    assert c0 == pytest.approx(2 / 3 * townes.u0, rel=1e-12)
    assert c0 == pytest.approx(1.4708, abs=1e-4)


def test_envelope_even(flipped_envelope):
    rng = np.random.default_rng(7)
    x = rng.normal(scale=4, size=(50, 2))
    np.testing.assert_array_equal(evaluate_envelope(flipped_envelope, x), evaluate_envelope(flipped_envelope, -x))


def test_envelope_radial_scaling(flipped_envelope, townes):
    # C(x) = a u(b |x|) with a = 2/3, b = 2; b inherits the finite-difference error of G0
    r = np.linspace(0, 9, 37)
    x = np.stack([r * np.cos(0.4), r * np.sin(0.4)], axis=-1)
    np.testing.assert_allclose(evaluate_envelope(flipped_envelope, x), 2 / 3 * townes(2 * r), atol=1e-6)


def test_envelope_tail_continuous(flipped_envelope):
    R = flipped_envelope.radius
    x = np.array([[R * (1 - 1e-9), 0], [R * (1 + 1e-9), 0]])
    v = evaluate_envelope(flipped_envelope, x)
    assert v[1] == pytest.approx(v[0], rel=1e-6)
    far = evaluate_envelope(flipped_envelope, np.array([[2 * R, 0.0]]))[0]
    assert 0 < far < v[1]


def test_envelope_pt_symmetric(flipped_envelope):
    rng = np.random.default_rng(1)
    x = rng.normal(scale=3, size=(20, 2))
    C = evaluate_envelope(flipped_envelope, x).astype(complex)
    np.testing.assert_array_equal(evaluate_envelope(flipped_envelope, -x), np.conj(C))


def test_canonicalize_round_trip_residual(flipped_envelope):
    assert envelope_residual(flipped_envelope) <= 1e-6 * flipped_envelope.scaling.a


def test_anisotropic_round_trip_residual(townes):
    nls = EffectiveNls(2, 1.0, np.array([[-0.3, 0.1], [0.1, -0.5]]), -1.7)
    env = build_envelope(nls, townes)
    assert envelope_residual(env) <= 1e-6 * env.scaling.a


@pytest.mark.parametrize("d", [1, 2])
def test_gaussian_moments(d):
    gauss = lambda x: np.exp(-np.sum(x**2, axis=-1))
    m0 = decay_moments(gauss, 0, d=d, half_width=10)
    assert m0 == pytest.approx((2 * np.pi) ** (d / 2), rel=1e-12)
    # |C^(k)| = 2^{-d/2} exp(-|k|^2/4), radial quadrature in k.  The |k| kink
    # limits the k-space Riemann sum to O(dk^2), so use a wide box.
    surface = {1: 2.0, 2: 2 * np.pi}[d]
    m = [decay_moments(gauss, s, d=d, half_width=40, n=512) for s in range(5)]
    for s in range(5):
        exact = surface * quad(lambda k: (1 + k) ** s * k ** (d - 1) * np.exp(-k * k / 4), 0, np.inf)[0]
        assert m[s] == pytest.approx(exact * 2 ** (-d / 2), rel=2e-3)
    assert np.all(np.diff(m) > 0)


def test_envelope_moments_finite(flipped_envelope):
    m = [decay_moments(flipped_envelope, s) for s in range(5)]
    assert all(np.isfinite(m)) and np.all(np.diff(m) > 0)


def test_zero_profile_moment():
    assert decay_moments(lambda x: np.zeros(x.shape[:-1]), 4, d=2, half_width=5) == 0.0


def test_moment_order_validated(flipped_envelope):
    with pytest.raises(ValueError):
        decay_moments(flipped_envelope, 5)
