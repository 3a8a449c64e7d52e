import warnings

import numpy as np
import pytest

from cyclid import (AssumptionViolation, PeriodicStateSpace, StabilityMarginWarning,
                    build_augmented, check_assumptions, cycled_closed_loop, cyclic_reformulate,
                    monodromy, require_assumptions)
from cyclid.core import markov_parameters
from cyclid.presets import (ex1_controller, ex1_plant, ex2_controller, ex2_plant, ex3_controller,
                            ex3_plant)


def _scalar_controller(a, b, c, M=3):
    return PeriodicStateSpace([np.array([[x]]) for x in np.broadcast_to(a, M)],
                              [np.array([[x]]) for x in np.broadcast_to(b, M)],
                              [np.array([[x]]) for x in np.broadcast_to(c, M)])


def test_example1_controller_checks():
    rep = check_assumptions(ex1_plant(), ex1_controller())
    assert rep.ok
    # reference value: C_c,k B_c,k-1 = 0.04 and closed-loop spectral radius 0.819
    np.testing.assert_allclose(rep.controller_path_det, [0.04] * 3, rtol=1e-12)
    assert rep.closed_loop_radius == pytest.approx(0.819, abs=5e-4)
    assert rep.cycled_order == 9


@pytest.mark.parametrize("plant,ctrl", [(ex2_plant, ex2_controller), (ex3_plant, ex3_controller)])
def test_other_examples_satisfy_assumptions(plant, ctrl):
    rep = check_assumptions(plant(), ctrl())
    assert rep.ok, rep.summary()


def test_closed_loop_state_matrix_blocks():
    acl = build_augmented(ex1_plant(), ex1_controller())
    A0 = acl.sys.A[0]
    Ap, Bp, Cp, _ = ex1_plant().at(0)
    np.testing.assert_array_equal(A0[:2, :2], Ap)
    np.testing.assert_array_equal(A0[:2, 2:], Bp * 0.05)
    np.testing.assert_array_equal(A0[2:, :2], -0.8 * Cp)
    np.testing.assert_array_equal(acl.sys.B[0][2:], [[0.8]])
    np.testing.assert_array_equal(acl.B_eta[0][2:, -1:], [[-0.8]])


def test_cycled_closed_loop_output_order():
    acl = build_augmented(ex3_plant(), ex3_controller())
    sr = cycled_closed_loop(acl)
    cyc = cyclic_reformulate(acl.sys)
    # rows of C_y are the plant-output rows of each phase block
    np.testing.assert_array_equal(sr.C_y[0:2], cyc.C[0:2])
    np.testing.assert_array_equal(sr.C_u[0:2], cyc.C[2:4])
    np.testing.assert_array_equal(sr.C_y[2:4], cyc.C[4:6])
    # Markov parameters of T_yr and T_ur are permutations of the full ones
    H = markov_parameters(cyc, 4)
    Hy = markov_parameters(sr.T_yr(), 4)
    for h in range(5):
        np.testing.assert_allclose(Hy[h][2:4], H[h][4:6], atol=1e-14)


def test_controller_path_structurally_cyclic():
    sr = cycled_closed_loop(build_augmented(ex2_plant(), ex2_controller()))
    CuB = sr.C_u @ sr.B
    # nonzero only at (k+1, k): the path C_c,k+1 B_c,k
    mask = np.roll(np.eye(3), 1, axis=0).astype(bool)
    assert np.all(CuB[~mask] == 0)
    assert np.linalg.cond(CuB) == pytest.approx(1.0)


def test_nonsquare_plant_is_assumption1():
    P = PeriodicStateSpace([np.eye(2)] * 3, [np.ones((2, 1))] * 3, [np.eye(2)] * 3)
    K = PeriodicStateSpace([np.eye(1)] * 3, [np.ones((1, 2))] * 3, [np.ones((1, 1))] * 3)
    rep = check_assumptions(P, K)
    assert not rep.assumption1
    with pytest.raises(AssumptionViolation) as ei:
        build_augmented(P, K)
    assert ei.value.assumption == 1 and ei.value.exit_code == 2


def test_plant_feedthrough_is_assumption1():
    p = ex1_plant()
    P = PeriodicStateSpace(p.A, p.B, p.C, [np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1))])
    with pytest.raises(AssumptionViolation) as ei:
        build_augmented(P, ex1_controller())
    assert ei.value.assumption == 1 and ei.value.phase == 1


def test_singular_controller_path_is_assumption2():
    K = _scalar_controller(0.3, [0.8, 0.0, 0.8], 0.05)
    rep = check_assumptions(ex1_plant(), K)
    assert not rep.assumption2 and rep.failed == [2]
    with pytest.raises(AssumptionViolation) as ei:
        require_assumptions(rep)
    # C_c,2 B_c,1 = 0
    assert ei.value.assumption == 2 and ei.value.phase == 2


def test_controller_feedthrough_is_assumption2():
    K = ex1_controller()
    K = PeriodicStateSpace(K.A, K.B, K.C, [np.ones((1, 1))] * 3)
    assert not check_assumptions(ex1_plant(), K).assumption2
    with pytest.raises(AssumptionViolation) as ei:
        build_augmented(ex1_plant(), K)
    assert ei.value.assumption == 2


def test_unstable_loop_is_assumption3():
    K = _scalar_controller(0.3, 0.8, 5.0)
    rep = check_assumptions(ex1_plant(), K)
    assert rep.closed_loop_radius > 1 and 3 in rep.failed
    with pytest.raises(AssumptionViolation) as ei:
        require_assumptions(rep)
    assert ei.value.assumption == 3


def test_marginal_loop_warns():
    # scale the controller gain until the loop radius is just below one
    lo, hi = 0.05, 5.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        acl = build_augmented(ex1_plant(), _scalar_controller(0.3, 0.8, mid))
        rho = max(abs(np.linalg.eigvals(monodromy(acl.sys))))
        if rho < 0.9995:
            lo = mid
        else:
            hi = mid
    with pytest.warns(StabilityMarginWarning):
        rep = check_assumptions(ex1_plant(), _scalar_controller(0.3, 0.8, lo))
    assert 0.999 < rep.closed_loop_radius < 1.0 and rep.assumption3


def test_non_minimal_loop_is_assumption4():
    # controller state that the error never reaches and that never reaches u
    K = PeriodicStateSpace([np.diag([0.3, 0.2])] * 3, [np.array([[0.8], [0.0]])] * 3,
                           [np.array([[0.05, 0.0]])] * 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = check_assumptions(ex1_plant(), K)
    assert rep.assumption1 and rep.assumption2 and rep.assumption3
    assert not rep.assumption4 and rep.failed == [4]


def test_report_serializes():
    d = check_assumptions(ex1_plant(), ex1_controller()).as_dict()
    assert d["assumption2"] is True and len(d["controller_path_det"]) == 3
