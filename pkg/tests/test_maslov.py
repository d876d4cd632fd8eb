import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavemaslov.exterior import omega
from wavemaslov.maslov import (
    ConjugatePoint,
    ConjugatePointError,
    beta_forms,
    crossing_form,
    default_tau,
    detection_beta,
    maslov_analysis,
    maslov_index,
    parity_check,
    principal_angle,
    reference_plane,
)
from wavemaslov.system import coefficient_matrix


@pytest.fixture(scope="module")
def pieces(fhn_solved, fhn_report):
    params, wave = fhn_solved
    an = fhn_report.analysis
    from wavemaslov.bundles import strong_stable_solution, strong_unstable_solution, unstable_bundle, unstable_plane

    u1 = strong_stable_solution(params, wave)
    U = unstable_plane(params, wave, unstable_bundle(params, wave, 0.0), strong_unstable_solution(params, wave))
    return params, wave, u1, U, an.maslov


def _cp(z, sig, regular=True, dim=1):
    return ConjugatePoint(z, dim, (), float(sig), sig, regular)


def test_fast_pulse_crossing_sequence(fhn_report):
    m = fhn_report.crossings
    assert m.signatures() == [-1, 1, -1, 1]
    assert m.index == 0
    zs = [cp.zStar for cp in m.crossings] + [m.endpoint.zStar]
    assert zs == sorted(zs) and zs[-1] == m.tau
    assert all(cp.regular and cp.dim == 1 for cp in m.crossings + [m.endpoint])


def test_crossings_sit_on_the_wave_features(fhn_report):
    m = fhn_report.crossings
    first, second, third = m.crossings
    # on the front, at the top of the right branch, on the back
    assert 0.5 < first.u_hat < 1.0
    assert second.u_hat > 0.8
    assert 0.0 < third.u_hat < 0.5


def test_beta_vanishes_at_the_crossings(pieces):
    params, wave, u1, U, m = pieces
    ref = reference_plane(params, wave, u1, m.tau)
    for cp in m.crossings:
        b = detection_beta(ref, U, cp.zStar, normalized=True)
        near = detection_beta(ref, U, cp.zStar - 1.0, normalized=True)
        assert abs(b) < 1e-6 * max(1.0, abs(near))


def test_determinant_and_symplectic_beta_agree(pieces):
    params, wave, u1, U, m = pieces
    ref = reference_plane(params, wave, u1, m.tau)
    for z in (-40.0, 0.0, 20.0, 100.0):
        det, sym = beta_forms(ref, U, z)
        assert det == pytest.approx(sym, rel=1e-9, abs=1e-12)


def test_crossing_form_is_omega_of_A(fhn_solved):
    params, wave = fhn_solved
    xi = np.array([0.3, -0.2, 0.5, 0.1])
    z = 1.7
    expected = omega(xi, coefficient_matrix(params, wave, 0.0, z) @ xi)
    assert crossing_form(params, wave, z, xi) == pytest.approx(expected)


def test_reference_plane_validation_names_the_failing_point(pieces):
    params, wave, u1, _, _ = pieces
    with pytest.raises(ConjugatePointError, match=r"E\^s\(0, -?\d"):
        reference_plane(params, wave, u1, -100.0)
    with pytest.raises(ValueError):
        reference_plane(params, wave, u1, wave.zmax + 1.0)


def test_index_is_stable_under_tau_perturbation(pieces):
    params, wave, u1, U, m = pieces
    margin = wave.L - m.tau
    for tau in (m.tau - 0.1 * margin, m.tau + 0.1 * margin):
        r = maslov_analysis(params, wave, u1, U, tau)
        assert r.index == m.index and r.signatures() == m.signatures()


def test_beta_at_minus_infinity_tends_to_rho(pieces):
    params, wave, u1, U, m = pieces
    ratios = [m.beta_minus_inf / m.rho]
    for tau in (1000.0, 1300.0):
        r = maslov_analysis(params, wave, u1, U, tau)
        ratios.append(r.beta_minus_inf / r.rho)
    assert all(r > 1.0 for r in ratios)
    assert ratios == sorted(ratios, reverse=True)
    assert ratios[-1] < 1.25


def test_default_tau_is_in_the_tail(fhn_solved):
    _, wave = fhn_solved
    tau = default_tau(wave)
    assert abs(wave.uv(tau)[0]) >= 1e-2 * np.max(wave.u) * 0.99
    assert tau > 0 and tau < wave.zmax


def test_maslov_index_counts_signatures():
    r = maslov_index([_cp(1, -1), _cp(2, 1), _cp(3, -1)], _cp(10, 1), tau=10)
    assert r.index == 0 and r.parityPrediction == 1
    r = maslov_index([_cp(1, -1)], _cp(10, 0), tau=10)
    assert r.index == -1 and r.parityPrediction == -1
    with pytest.raises(ConjugatePointError, match="irregular"):
        maslov_index([_cp(1, -1, regular=False)], _cp(10, 1))


def test_parity_check_verdicts(fhn_report):
    m = fhn_report.crossings
    ok, detail = parity_check(m, fhn_report.lt)
    assert ok and detail["beta_slope_matches"]
    bad, _ = parity_check(m, -fhn_report.lt)
    assert not bad
    with pytest.raises(ConjugatePointError):
        parity_check(m, 0.0)
    with pytest.raises(ConjugatePointError):
        parity_check(m, fhn_report.lt, transversality=1e-12)


def test_beta_slope_matches_product_sign(fhn_report, fhn_half_report):
    for rep in (fhn_report, fhn_half_report):
        detail = rep.analysis.parity_detail
        assert detail["beta_slope_sign"] == detail["beta_slope_product_sign"]


vec = arrays(np.float64, (4, 2), elements=st.floats(-2, 2, allow_nan=False))


@given(vec, vec)
def test_principal_angle_range_and_symmetry(P, Q):
    if min(np.linalg.svd(P, compute_uv=False)[-1], np.linalg.svd(Q, compute_uv=False)[-1]) < 1e-3:
        return
    a = principal_angle(P, Q)
    assert 0.0 <= a <= math.pi / 2 + 1e-12
    assert a == pytest.approx(principal_angle(Q, P), abs=1e-7)
    assert principal_angle(P, P) < 1e-6
