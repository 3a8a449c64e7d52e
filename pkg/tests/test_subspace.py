import numpy as np
import pytest

from cyclid import (GapNotFound, LtiStateSpace, NoiseConfig, OrderGapWarning, RankDeficientData,
                    SubspaceConfig, build_augmented, cycle_signal, cycled_closed_loop,
                    generate_reference, identify_cycled_closed_loop,
                    max_markov_error, run_closed_loop_experiment, simulate_lti,
                    singular_spectrum_report, stack_cycled)
from cyclid.metrics import closed_loop_fit
from cyclid.presets import ex1_controller, ex1_plant, ex2_controller, ex2_plant
from cyclid.subspace import fit_b_x0, moesp_ac


def _random_stable(rng, n, m, p, radius=0.8):
    A = rng.standard_normal((n, n))
    A *= radius / max(abs(np.linalg.eigvals(A)))
    return LtiStateSpace(A, rng.standard_normal((n, m)), rng.standard_normal((p, n)))


def _cycled(ds):
    r = cycle_signal(ds.r, ds.period)
    z = stack_cycled(cycle_signal(ds.y, ds.period), cycle_signal(ds.u, ds.period))
    return r, z


def test_exact_data_small_random_system():
    rng = np.random.default_rng(0)
    sys = _random_stable(rng, 4, 2, 3)
    u = rng.standard_normal((800, 2))
    y = simulate_lti(sys, u).samples
    A, C, sv = moesp_ac(u, y, 4, 8)
    assert sv[3] / sv[4] > 1e8
    B, x0 = fit_b_x0(A, C, u, y)
    est = LtiStateSpace(A, B, C)
    assert max_markov_error(sys, est, 12) < 1e-8
    assert np.linalg.norm(x0) < 1e-8


def test_nonzero_initial_state_is_estimated():
    rng = np.random.default_rng(1)
    sys = _random_stable(rng, 3, 1, 2)
    u = rng.standard_normal((600, 1))
    x0 = np.array([1.0, -2.0, 0.5])
    y = simulate_lti(sys, u, x0).samples
    A, C, _ = moesp_ac(u, y, 3, 6)
    B, xh = fit_b_x0(A, C, u, y)
    yh = simulate_lti(LtiStateSpace(A, B, C), u, xh).samples
    np.testing.assert_allclose(yh, y, atol=1e-8)


@pytest.mark.parametrize("plant,ctrl,N", [(ex1_plant, ex1_controller, 3000),
                                          (ex2_plant, ex2_controller, 5000)])
def test_noise_free_cycled_loop_identified_exactly(plant, ctrl, N):
    P, K = plant(), ctrl()
    ds = run_closed_loop_experiment(P, K, generate_reference(N, 1, seed=0))
    r, z = _cycled(ds)
    res = identify_cycled_closed_loop(r, z, SubspaceConfig(9))
    truth = cycled_closed_loop(build_augmented(P, K)).as_lti()
    assert max_markov_error(truth, res.realization.as_lti(), 9) < 1e-8
    assert max(abs(np.linalg.eigvals(res.realization.A))) < 1
    _, fit = closed_loop_fit(res, ds)
    assert fit > 99.999


def test_example1_noisy_closed_loop_fit():
    ds = run_closed_loop_experiment(ex1_plant(), ex1_controller(), generate_reference(3000, 1, seed=0),
                                    NoiseConfig(40, seed=1))
    r, z = _cycled(ds)
    res = identify_cycled_closed_loop(r, z, SubspaceConfig(9))
    _, fit = closed_loop_fit(res, ds)
    # reference value: 99.4%
    assert fit >= 98.0
    assert max(abs(np.linalg.eigvals(res.realization.A))) < 1


def test_default_horizon():
    assert SubspaceConfig(9).horizon_for(6) == 10
    assert SubspaceConfig(30).horizon_for(2) == 32
    assert SubspaceConfig(9, horizon=4).horizon_for(6) == 4
    with pytest.raises(ValueError):
        SubspaceConfig(9, horizon=1).horizon_for(6)


def test_constant_input_is_rank_deficient():
    u = np.ones((400, 1))
    y = np.cumsum(u, axis=0) * 0.1
    with pytest.raises(RankDeficientData):
        moesp_ac(u, y, 2, 5)


def test_too_few_samples():
    rng = np.random.default_rng(0)
    with pytest.raises(RankDeficientData):
        moesp_ac(rng.standard_normal((30, 2)), rng.standard_normal((30, 2)), 2, 10)


def test_underestimated_order_fails_gap_check():
    ds = run_closed_loop_experiment(ex1_plant(), ex1_controller(), generate_reference(3000, 1, seed=0),
                                    NoiseConfig(40, seed=1))
    r, z = _cycled(ds)
    with pytest.raises(GapNotFound):
        identify_cycled_closed_loop(r, z, SubspaceConfig(6))
    res = identify_cycled_closed_loop(r, z, SubspaceConfig(6, gap_factor=0))
    assert res.order == 6


def test_overestimated_order_warns_and_auto_order():
    ds = run_closed_loop_experiment(ex1_plant(), ex1_controller(), generate_reference(2000, 1, seed=0))
    r, z = _cycled(ds)
    with pytest.warns(OrderGapWarning):
        res = identify_cycled_closed_loop(r, z, SubspaceConfig(12, auto_order=True, gap_factor=0))
    assert res.order == 9
    rep = singular_spectrum_report(res)
    assert rep.gap_index == 9
