import math

import numpy as np
import pytest

from wavemaslov.bundles import (
    InvariantError,
    lazutkin_treschev,
    omega_drift,
    stable_bundle,
    strong_stable_solution,
    strong_unstable_solution,
    translation_scales,
    translation_solution,
    unstable_bundle,
    unstable_plane,
)
from wavemaslov.exterior import omega, plane_basis, wedge
from wavemaslov.system import asymptotic_frame, asymptotic_rates, lambda_window


@pytest.fixture(scope="module")
def zero_solutions(fhn_solved):
    params, wave = fhn_solved
    return strong_stable_solution(params, wave), strong_unstable_solution(params, wave)


@pytest.fixture(scope="module")
def zero_bundle(fhn_solved):
    return unstable_bundle(*fhn_solved, 0.0)


def _in_plane(T, x):
    a, b = plane_basis(T)
    Q, _ = np.linalg.qr(np.column_stack([a, b]))
    return float(np.linalg.norm(x - Q @ (Q.T @ x)) / np.linalg.norm(x))


@pytest.mark.parametrize("lam_kind", ["half_window", "zero", "mid", "large"])
def test_bundles_stay_on_the_lagrangian_grassmannian(fhn_solved, lam_kind):
    params, wave = fhn_solved
    lam = {"half_window": -lambda_window(params) / 2, "zero": 0.0, "mid": 0.5, "large": 2.0}[lam_kind]
    for B in (unstable_bundle(params, wave, lam), stable_bundle(params, wave, lam)):
        g, lag = B.residuals()
        assert g < 1e-9 and lag < 1e-8
        assert np.allclose(np.linalg.norm(B.values, axis=1), 1.0)


def test_bundle_starts_on_the_asymptotic_plane(fhn_solved, zero_bundle):
    params, wave = fhn_solved
    e = asymptotic_frame(params, 0.0)
    x, _ = zero_bundle.unit(zero_bundle.span[0])
    target = wedge(e[2], e[3])
    assert np.linalg.norm(x - target / np.linalg.norm(target)) < 1e-8


def test_unstable_bundle_contains_translation_mode(fhn_solved, zero_bundle):
    _, wave = fhn_solved
    for z in (-200.0, -20.0, -1.0, 0.0):
        x, _ = zero_bundle.unit(z)
        assert _in_plane(x, wave.phi_prime(z)) < 1e-6


def test_weighted_and_unweighted_representatives(zero_solutions):
    u1, _ = zero_solutions
    z = 10.0
    assert np.allclose(u1.unweighted(z), u1.weighted(z) * math.exp(u1.weight_rate * z))
    with pytest.raises(ValueError):
        u1.unit(u1.span[1] + 1.0)


def test_vectorised_sampling_matches_pointwise(zero_solutions):
    u1, _ = zero_solutions
    zs = np.array([-30.0, -1.0, 0.0, 4.0, 55.0])
    X, ls = u1.sample(zs)
    for z, x, l in zip(zs, X, ls):
        xp, lp = u1.unit(z)
        np.testing.assert_allclose(x, xp, atol=1e-13)
        assert l == pytest.approx(lp, abs=1e-12)


def test_lazutkin_treschev_invariant_is_constant(fhn_solved, zero_solutions):
    params, wave = fhn_solved
    u1, u4 = zero_solutions
    value, drift = lazutkin_treschev(params, u1, u4)
    assert value != 0.0 and drift < 1e-6
    _, full = omega_drift(params, u1, u4, np.linspace(-wave.L, wave.L, 301))
    assert full < 1e-6
    with pytest.raises(InvariantError):
        lazutkin_treschev(params, u1, u4, tol=0.0)


def test_omega_is_constant_for_translation_and_u1(fhn_solved, zero_solutions):
    # phi' and u1 both decay at +inf, so e^{cz} omega(phi', u1) vanishes identically
    params, wave = fhn_solved
    u1, _ = zero_solutions
    phi = translation_solution(wave, params)
    vals = [omega(phi.unweighted(z), u1.unit(z)[0]) for z in (-5.0, 0.0, 5.0, 40.0)]
    assert max(abs(v) for v in vals) < 1e-6


def test_translation_scales_describe_the_tails(fhn_solved):
    params, wave = fhn_solved
    kp, km = translation_scales(params, wave)
    mu = asymptotic_rates(params, 0.0)
    e = asymptotic_frame(params, 0.0)
    z = wave.grid[-1] - 50.0
    ratio = wave.phi_prime(z) / (kp * math.exp(mu[1] * z) * e[1])
    assert np.allclose(ratio[np.abs(e[1]) > 1e-3], 1.0, rtol=1e-3)
    assert kp != 0 and km != 0


def test_unstable_plane_switch_is_continuous(fhn_solved, zero_bundle, zero_solutions):
    params, wave = fhn_solved
    _, u4 = zero_solutions
    U = unstable_plane(params, wave, zero_bundle, u4)
    assert U.mismatch < 1e-6
    X, ls = U.sample([-1e-6, 1e-6])
    assert np.linalg.norm(X[0] - X[1]) < 1e-5
    # beyond the switch the plane keeps containing phi'
    for z in (10.0, 40.0, 100.0):
        assert _in_plane(U.unit(z)[0], wave.phi_prime(z)) < 1e-8


def test_unstable_plane_needs_the_zero_bundle(fhn_solved, zero_solutions):
    params, wave = fhn_solved
    with pytest.raises(ValueError):
        unstable_plane(params, wave, unstable_bundle(params, wave, 0.5), zero_solutions[1])
