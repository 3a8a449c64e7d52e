import warnings

import numpy as np
import pytest

from cyclid import (ConditioningWarning, LtiStateSpace, SharedARealization, SingularControllerPath,
                    build_augmented, cycled_closed_loop, cyclic_reformulate, extract_plant,
                    extract_plant_general, markov_parameters, max_markov_error,
                    verify_cascade_cancellation)
from cyclid.extraction import cascade_realization, controller_path_inverse
from cyclid.presets import (ex1_controller, ex1_plant, ex2_controller, ex2_plant, ex3_controller,
                            ex3_plant)

from helpers import random_similarity, relative_degree_two_controller

EXAMPLES = [(ex1_plant, ex1_controller), (ex2_plant, ex2_controller), (ex3_plant, ex3_controller)]


def _true_loop(plant, ctrl):
    return cycled_closed_loop(build_augmented(plant, ctrl))


@pytest.mark.parametrize("plant,ctrl", EXAMPLES)
def test_extraction_is_exact_on_true_loops(plant, ctrl):
    P = plant()
    ep = extract_plant(_true_loop(P, ctrl()))
    err = max_markov_error(cyclic_reformulate(P), ep.realization, 15)
    assert err <= 1e-10
    assert ep.D_norm <= 1e-12
    assert ep.realization.n == 3 * (P.n + ctrl().n)


def test_extracted_unstable_plant_radius():
    ep = extract_plant(_true_loop(ex2_plant(), ex2_controller()))
    # reference value: max |eig| = 1.165, the cube root of 1.581
    assert ep.spectral_radius == pytest.approx(1.165, abs=2e-3)
    ev = np.linalg.eigvals(ep.realization.A)
    assert np.sum(np.abs(ev) > 1) == 3


def test_controller_path_condition_numbers():
    assert extract_plant(_true_loop(ex1_plant(), ex1_controller())).lambda_cond == pytest.approx(1.0)
    assert extract_plant(_true_loop(ex2_plant(), ex2_controller())).lambda_cond == pytest.approx(1.0)
    # ex3 controller paths have condition numbers 1.28, 1.48, 1.37
    c3 = extract_plant(_true_loop(ex3_plant(), ex3_controller())).lambda_cond
    assert c3 == pytest.approx(1.475, abs=5e-3)


def test_extraction_invariant_under_similarity():
    sr = _true_loop(ex3_plant(), ex3_controller())
    T = random_similarity(np.random.default_rng(0), sr.n)
    a = extract_plant(sr).realization
    b = extract_plant(sr.similarity(T)).realization
    assert max_markov_error(a, b, 15) < 1e-9


def test_cascade_cancellation_on_example():
    rep = verify_cascade_cancellation(_true_loop(ex1_plant(), ex1_controller()))
    assert rep.passed
    assert rep.markov_gap < 1e-12
    cas = cascade_realization(_true_loop(ex1_plant(), ex1_controller()))
    assert cas.n == 18


def test_relative_degree_two_extraction():
    rng = np.random.default_rng(3)
    P = ex1_plant()
    K = relative_degree_two_controller(rng, 3, 1)
    sr = _true_loop(P, K)
    assert np.allclose(sr.C_u @ sr.B, 0)
    with pytest.raises(SingularControllerPath):
        extract_plant(sr)
    ep = extract_plant_general(sr, d=2)
    assert max_markov_error(cyclic_reformulate(P), ep.realization, 15) < 1e-10


def test_singular_path_raises_and_ill_conditioned_warns():
    sr = _true_loop(ex1_plant(), ex1_controller())
    B = sr.B.copy()
    B[:, 0] *= 1e-6  # one phase of the path shrinks by 1e-6
    weak = SharedARealization(sr.A, B, sr.C_y, sr.C_u)
    with pytest.warns(ConditioningWarning):
        _, cond = controller_path_inverse(weak)
    assert cond == pytest.approx(1e6, rel=1e-6)
    B[:, 0] = 0.0
    with pytest.raises(SingularControllerPath):
        extract_plant(SharedARealization(sr.A, B, sr.C_y, sr.C_u))


def test_nonsquare_path_raises():
    sr = _true_loop(ex1_plant(), ex1_controller())
    bad = SharedARealization(sr.A, sr.B, sr.C_y, sr.C_u[:2])
    with pytest.raises(SingularControllerPath):
        extract_plant(bad)


def test_perturbed_feedthrough_is_small():
    # a first-order perturbation of an exact realization gives a first-order D_p
    sr = _true_loop(ex1_plant(), ex1_controller())
    rng = np.random.default_rng(0)
    noisy = SharedARealization(sr.A, sr.B + 1e-6 * rng.standard_normal(sr.B.shape), sr.C_y, sr.C_u)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ep = extract_plant(noisy)
    assert 0 < ep.D_norm < 1e-4
