"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Noisy-data bands are checked as stated even where estimator variance puts
them out of reach for a single record; such failures are left visible.
"""
import json
import time
import warnings

import numpy as np

from cyclid import (PeriodicStateSpace, PipelineConfig, build_augmented, cycled_closed_loop,
                    cyclic_reformulate, extract_plant, max_markov_error, run_pipeline)
from cyclid import io as cio
from cyclid.cli import main
from cyclid.presets import ex1_plant, get_preset

import test_properties as props

INF = float("inf")


def _report(capsys, number, checks):
    """Print one line per criterion; ``checks`` maps label -> (ok, detail)."""
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{k}={v[1]}{'' if v[0] else ' (FAIL)'}" for k, v in checks.items())
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    failed = [k for k, v in checks.items() if not v[0]]
    assert not failed, f"criterion {number} failed on {failed}: {detail}"


def _timed(cfg):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_pipeline(cfg)
    return res, time.perf_counter() - t0


def _gap_at(values, k):
    return values[k - 1] / values[k]


def test_criterion_1_extraction_exactness(capsys):
    checks = {}
    for name in ("ex1", "ex2", "ex3"):
        p = get_preset(name)
        t0 = time.perf_counter()
        ep = extract_plant(cycled_closed_loop(build_augmented(p.plant, p.controller)))
        err = max_markov_error(cyclic_reformulate(p.plant), ep.realization, 15)
        dt = time.perf_counter() - t0
        checks[f"{name}.markov_err"] = (err <= 1e-10, f"{err:.2e}")
        checks[f"{name}.runtime_s"] = (dt < 1.0, f"{dt:.3f}")
    _report(capsys, 1, checks)


def test_criterion_2_unstable_recovery(capsys):
    res, _ = _timed(PipelineConfig(preset="ex2", snr_db=INF, N=5000))
    before = np.abs(np.linalg.eigvals(res.extracted.realization.A))
    after = np.abs(np.linalg.eigvals(res.reduction.realization.A))
    rho = res.extracted.spectral_radius
    _report(capsys, 2, {
        "spectral_radius": (abs(rho - 1.165) <= 2e-3, f"{rho:.4f}"),
        "unstable_before": (np.sum(before > 1) == 3, int(np.sum(before > 1))),
        "unstable_after": (np.sum(after > 1) == 3, int(np.sum(after > 1))),
    })


def test_criterion_3_example1_end_to_end(capsys):
    free, _ = _timed(PipelineConfig(preset="ex1", snr_db=INF, N=3000))
    res, dt = _timed(PipelineConfig(preset="ex1", snr_db=40.0, N=3000))
    rep = res.report
    hsv = free.reduction.hankel_values
    a_err = max(rep.per_k_errors["A"])
    _report(capsys, 3, {
        "cl_fit": (rep.cl_fit_percent >= 98.0, f"{rep.cl_fit_percent:.3f}%"),
        "ol_fit": (rep.ol_fit_percent is not None and rep.ol_fit_percent >= 99.9,
                   f"{rep.ol_fit_percent:.3f}%"),
        "hankel_gap_index": (free.report.hankel_values and
                             int(np.argmax(np.array(hsv[:-1]) / np.array(hsv[1:]))) + 1 == 6,
                             f"sigma6={hsv[5]:.3f} sigma7={hsv[6]:.2e}"),
        "hankel_gap_ratio": (_gap_at(hsv, 6) >= 1e10, f"{_gap_at(hsv, 6):.2e}"),
        "max_A_err": (a_err <= 1e-4, f"{a_err:.2e}"),
        "runtime_s": (dt < 30.0, f"{dt:.2f}"),
    })


def test_criterion_4_example2_end_to_end(capsys):
    free, _ = _timed(PipelineConfig(preset="ex2", snr_db=INF, N=5000))
    noisy, _ = _timed(PipelineConfig(preset="ex2", snr_db=40.0, N=5000))
    a, b = free.report, noisy.report
    _report(capsys, 4, {
        "free.markov_err": (a.max_markov_error <= 1e-10, f"{a.max_markov_error:.2e}"),
        "free.cl_fit": (a.cl_fit_percent >= 99.99, f"{a.cl_fit_percent:.4f}%"),
        "40dB.markov_err": (b.max_markov_error <= 5e-3, f"{b.max_markov_error:.2e}"),
        "40dB.cl_fit": (b.cl_fit_percent >= 97.0, f"{b.cl_fit_percent:.3f}%"),
        "cond_lambda": (b.lambda_cond <= 1.01, f"{b.lambda_cond:.4f}"),
    })


def test_criterion_5_example3_end_to_end(capsys):
    free, _ = _timed(PipelineConfig(preset="ex3", snr_db=INF, N=9000))
    noisy, _ = _timed(PipelineConfig(preset="ex3", snr_db=40.0, N=9000))
    hsv = np.array(free.report.hankel_values)
    gap = int(np.argmax(hsv[:-1] / hsv[1:])) + 1
    a, b = free.report, noisy.report
    _report(capsys, 5, {
        "free.markov_err": (a.max_markov_error <= 1e-9, f"{a.max_markov_error:.2e}"),
        "free.hankel_gap_index": (gap == 9, gap),
        "40dB.markov_err": (b.max_markov_error <= 0.5, f"{b.max_markov_error:.2e}"),
        "40dB.cl_fit": (b.cl_fit_percent >= 88.0, f"{b.cl_fit_percent:.3f}%"),
    })


SUITES = {
    "cyclic_equivalence": props.test_cyclic_equivalence,
    "mth_root_spectrum": props.test_cycled_spectrum_is_mth_root_of_monodromy,
    "shifted_sparsity": props.test_shifted_sparsity_survives_similarity,
    "extraction_similarity": props.test_extraction_similarity_invariance,
    "cascade_cancellation": props.test_cascade_cancellation_zero_block,
    "round_trip_recovery": props.test_round_trip_recovery,
    "relative_degree_two": props.test_relative_degree_two_extraction,
}


def test_criterion_6_property_suites(capsys):
    checks = {}
    for name, suite in SUITES.items():
        try:
            suite()
            checks[name] = (True, "100 ok")
        except Exception as exc:  # report every suite before failing
            checks[name] = (False, type(exc).__name__)
    _report(capsys, 6, checks)


def test_criterion_7_negative_cases(tmp_path, capsys):
    p = get_preset("ex1")
    assert main(["export-preset", "ex1", "--out", str(tmp_path / "cfg")]) == 0
    K = p.controller
    cio.save_periodic(tmp_path / "cfg" / "controller.json",
                      PeriodicStateSpace(K.A, [np.zeros_like(b) for b in K.B], K.C))
    code_a2 = main(["run", "--config", str(tmp_path / "cfg" / "config.json"),
                    "--out", str(tmp_path / "a2")])
    code_np = main(["run", "--preset", "ex1", "--order-np", "3", "--out", str(tmp_path / "np")])
    err = capsys.readouterr().err

    # a loop whose controller path C_c B_c is nearly singular, at 10 dB
    ctrl = PeriodicStateSpace([np.array([[0.3]])] * 3, [np.array([[0.8]])] * 3,
                              [np.array([[0.05]]), np.array([[0.05]]), np.array([[2e-6]])])
    res, _ = _timed(PipelineConfig(plant=ex1_plant(), controller=ctrl, N=3000, snr_db=10.0,
                                   order_gap_factor=0.0, structure_tol=1.0))
    rep = res.report
    saved = json.loads(rep.to_json())
    _report(capsys, 7, {
        "assumption2_exit": (code_a2 == 2, code_a2),
        "wrong_np_exit": (code_np == 3 and "GapNotFound" in err, code_np),
        "lambda_cond": (rep.lambda_cond > 1e4, f"{rep.lambda_cond:.3e}"),
        "reported": (saved["lambda_ill_conditioned"] is True and
                     any("condition" in w for w in saved["warnings"]),
                     saved["lambda_ill_conditioned"]),
    })
