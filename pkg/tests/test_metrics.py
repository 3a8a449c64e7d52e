import json

import numpy as np
import pytest

from cyclid import (DegenerateSignal, DimensionMismatch, LtiStateSpace, PipelineConfig,
                    SignalRecord, cyclic_reformulate, fit_percent, max_markov_error, run_pipeline)
from cyclid.metrics import markov_error_curve
from cyclid.presets import ex3_plant

from helpers import random_similarity


def test_fit_identity_and_mean():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((100, 3))
    fits, mean = fit_percent(z, z)
    np.testing.assert_allclose(fits, 100.0)
    fits, mean = fit_percent(z, np.broadcast_to(z.mean(axis=0), z.shape))
    np.testing.assert_allclose(fits, 0.0, atol=1e-12)


def test_fit_formula_oracle():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((200, 2))
    zh = z + 0.1 * rng.standard_normal((200, 2))
    fits, mean = fit_percent(SignalRecord(z), SignalRecord(zh))
    for i in range(2):
        ref = 100 * (1 - np.sqrt(np.sum((z[:, i] - zh[:, i]) ** 2)) /
                     np.sqrt(np.sum((z[:, i] - z[:, i].mean()) ** 2)))
        assert fits[i] == pytest.approx(ref)
    assert mean == pytest.approx(fits.mean())


def test_fit_channel_reordering_invariance():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((50, 4))
    zh = z + 0.3 * rng.standard_normal((50, 4))
    perm = [2, 0, 3, 1]
    a, ma = fit_percent(z, zh)
    b, mb = fit_percent(z[:, perm], zh[:, perm])
    np.testing.assert_allclose(a[perm], b)
    assert ma == pytest.approx(mb)


def test_fit_degenerate_and_mismatch():
    with pytest.raises(DegenerateSignal):
        fit_percent(np.ones((10, 1)), np.zeros((10, 1)))
    with pytest.raises(DimensionMismatch):
        fit_percent(np.ones((10, 1)), np.zeros((10, 2)))


def test_markov_error_zero_under_similarity():
    sys = cyclic_reformulate(ex3_plant())
    T = random_similarity(np.random.default_rng(0), sys.n)
    assert max_markov_error(sys, sys) == 0.0
    assert max_markov_error(sys, sys.similarity(T)) < 1e-10
    assert len(markov_error_curve(sys, sys, 7)) == 8


def test_markov_error_counts_feedthrough():
    sys = LtiStateSpace(np.array([[0.5]]), np.array([[1.0]]), np.array([[1.0]]))
    other = LtiStateSpace(sys.A, sys.B, sys.C, np.array([[0.2]]))
    assert max_markov_error(sys, other) == pytest.approx(0.2)
    with pytest.raises(DimensionMismatch):
        max_markov_error(sys, LtiStateSpace(np.eye(1), np.ones((1, 2)), np.ones((1, 1))))


def test_validation_report_contents_and_serialization():
    res = run_pipeline(PipelineConfig(preset="ex1", snr_db=40.0, N=1500))
    rep = res.report
    assert rep.h_max == 15 and len(rep.markov_curve) == 16
    assert rep.max_markov_error == pytest.approx(max(rep.markov_curve))
    assert len(rep.cl_fit_channels) == 2
    assert rep.ol_fit_percent is not None and rep.ol_fit_percent > 95
    assert set(rep.per_k_errors) == {"A", "B", "C"}
    assert rep.lambda_cond == pytest.approx(1.0, abs=0.01) and not rep.lambda_ill_conditioned
    assert len(rep.hankel_values) == 9
    d = json.loads(rep.to_json())
    assert d["h_max"] == 15
    lines = rep.markov_csv().splitlines()
    assert lines[0] == "h,markov_error" and len(lines) == 17
    assert rep.spectrum_csv().splitlines()[0] == "index,hankel_sv,subspace_sv"


def test_ol_fit_absent_for_unstable_recovered_plant():
    res = run_pipeline(PipelineConfig(preset="ex2", snr_db=float("inf"), N=2000))
    assert res.report.ol_fit_percent is None
    assert res.report.recovered_spectral_radius > 1
    assert res.report.max_markov_error < 1e-10
