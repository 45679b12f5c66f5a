import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fasisac.beamforming import (INFEASIBLE, OPTIMAL, RANK_ONE_FAILED, Covariance, SolverConfig,
                                 design_beamformer, gaussian_randomize, herm_to_vec,
                                 mrt_beamformer, mrt_rate, solve_covariance, validate_covariance,
                                 vec_to_herm)
from fasisac.channel import AntennaLayout, channel_vector, communication_rate, target_matrices


def _c(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_herm_coordinates_are_orthonormal(rng):
    A = _c(rng, 4, 4)
    H = A + A.conj().T
    B = _c(rng, 4, 4)
    K = B + B.conj().T
    x, y = herm_to_vec(H), herm_to_vec(K)
    assert x.shape == (16,)
    np.testing.assert_allclose(vec_to_herm(x, 4), H, atol=1e-14)
    assert x @ y == pytest.approx(np.trace(H @ K).real, rel=1e-12)


def test_gamma_zero_is_mrt(rng):
    f = _c(rng, 5)
    cov, rep = solve_covariance(f, [_c(rng, 3, 5)], 1.0, 0.0, 0.01)
    assert rep.status == OPTIMAL
    assert rep.relaxed_rate == pytest.approx(mrt_rate(f, 1.0, 0.01), rel=1e-6)
    assert communication_rate(f, mrt_beamformer(f, 1.0), 0.01) == pytest.approx(mrt_rate(f, 1.0, 0.01))
    assert rep.kkt_residual < 1e-5


def test_two_antenna_closed_form(scenario, rng):
    for _ in range(5):
        lay = AntennaLayout(rng.uniform(-2, 2, (2, 2)), rng.uniform(-2, 2, 2))
        sc = scenario.replace(target_angles=scenario.target_angles[:1])
        f, E = channel_vector(lay, sc), target_matrices(lay, sc)
        _, rep = solve_covariance(f, E, sc.p_max, sc.gamma, sc.noise_power)
        ref = oracles.two_antenna_optimum(f, E[0].conj().T @ E[0], sc.p_max, sc.gamma, sc.noise_power)
        assert rep.relaxed_rate == pytest.approx(float(ref), abs=1e-6)


def test_infeasible_certificate(rng):
    f = _c(rng, 3)
    E = [_c(rng, 2, 3), _c(rng, 2, 3)]
    # the largest achievable gain per target is p_max * lambda_max(E^H E)
    cap = min(np.linalg.eigvalsh(e.conj().T @ e)[-1] for e in E)
    cov, rep = solve_covariance(f, E, 1.0, 1.01 * cap, 0.01)
    assert rep.status == INFEASIBLE
    y = rep.certificate
    assert y is not None and np.all(y >= -1e-12) and y.sum() == pytest.approx(1.0)
    # certificate: lambda_max(sum_k y_k G_k) < Gamma / P
    M = sum(w * e.conj().T @ e for w, e in zip(y, E))
    assert np.linalg.eigvalsh(M)[-1] < 1.01 * cap
    assert np.allclose(cov.matrix, 0)


def test_rate_non_increasing_in_gamma(rng):
    f = _c(rng, 4)
    E = [_c(rng, 3, 4)]
    cap = np.linalg.eigvalsh(E[0].conj().T @ E[0])[-1]
    rates = [solve_covariance(f, E, 1.0, g * cap, 0.01)[1].relaxed_rate for g in (0, 0.3, 0.6, 0.9)]
    assert all(a >= b - 1e-7 for a, b in zip(rates, rates[1:]))


def test_randomization_success_rate():
    """Rank-one recovery finds a feasible beamformer on most feasible instances."""
    ok = 0
    for i in range(50):
        rng = np.random.default_rng(900 + i)
        f = _c(rng, 4)
        E = [_c(rng, 3, 4), _c(rng, 3, 4)]
        gamma = 0.5 * min(np.linalg.eigvalsh(e.conj().T @ e)[-1] for e in E)
        _, cov1, rep = design_beamformer(f, E, 1.0, gamma, 0.01, rng)
        if rep.status == OPTIMAL:
            ok += 1
            rp = validate_covariance(cov1, f, E, 1.0, gamma, 0.01)
            assert rp.ok(1.0, gamma)
            assert np.linalg.matrix_rank(cov1.matrix, tol=1e-9) == 1
    assert ok >= 45


def test_randomization_prefers_eigenvector_when_rank_one(rng):
    f = _c(rng, 3)
    u = f.conj() / np.linalg.norm(f)
    cov, rep = gaussian_randomize(Covariance.from_beamformer(u), f, [], 1.0, 0.0, 0.01, 5, rng)
    assert rep.status == OPTIMAL
    assert rep.recovered_rate == pytest.approx(mrt_rate(f, 1.0, 0.01), rel=1e-12)


def test_randomization_failure_status(rng):
    f = _c(rng, 2)
    E = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
    # U = I/2 meets both gains 0.5 but no rank-one vector with power 1 hits both > 0.5
    _, rep = gaussian_randomize(np.eye(2) / 2, f, E, 1.0, 0.55, 0.01, 200, rng)
    assert rep.status == RANK_ONE_FAILED


def test_randomization_deterministic():
    f = _c(np.random.default_rng(1), 4)
    E = [_c(np.random.default_rng(2), 3, 4)]
    a = design_beamformer(f, E, 1.0, 1.0, 0.01, np.random.default_rng(5))[1].matrix
    b = design_beamformer(f, E, 1.0, 1.0, 0.01, np.random.default_rng(5))[1].matrix
    np.testing.assert_array_equal(a, b)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5), st.integers(0, 3), st.floats(0.0, 0.99))
def test_solution_satisfies_constraints(seed, n, k, frac):
    rng = np.random.default_rng(seed)
    f = _c(rng, n)
    E = [_c(rng, 2, n) for _ in range(k)]
    # U = (P/n) I reaches Tr(E^H E) / n on every target, so this threshold is always feasible
    gamma = frac * min([np.vdot(e, e).real / n for e in E], default=0.0)
    cov, rep = solve_covariance(f, E, 1.0, gamma, 0.05, SolverConfig())
    assert rep.status == OPTIMAL
    rp = validate_covariance(cov, f, E, 1.0, gamma, 0.05)
    assert rp.ok(1.0, gamma)
    assert rep.relaxed_rate <= mrt_rate(f, 1.0, 0.05) + 1e-9
