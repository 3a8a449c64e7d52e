"""Fit percentages, Markov-parameter errors and validation reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (LtiStateSpace, PeriodicStateSpace, SignalRecord, cycle_signal,
                   cyclic_reformulate, markov_parameters, monodromy, simulate_lptv,
                   simulate_lti, uncycle_signal)
from .errors import DegenerateSignal, DimensionMismatch
from .extraction import COND_WARN

H_MAX = 15
VALIDATION_STEPS = 2000


def _samples(z):
    return z.samples if isinstance(z, SignalRecord) else np.atleast_2d(np.asarray(z, float).T).T


def fit_percent(zeta, zeta_hat):
    """Per-channel fit ``100 (1 - |z - zhat| / |z - mean(z)|)`` and the channel mean.

    Returns ``(per_channel, mean)``.
    """
    z, zh = _samples(zeta), _samples(zeta_hat)
    if z.shape != zh.shape:
        raise DimensionMismatch(f"shapes differ: {z.shape} vs {zh.shape}")
    den = np.linalg.norm(z - z.mean(axis=0), axis=0)
    if np.any(den == 0):
        bad = np.flatnonzero(den == 0).tolist()
        raise DegenerateSignal(f"channel(s) {bad} are constant; fit is undefined")
    fits = 100.0 * (1.0 - np.linalg.norm(z - zh, axis=0) / den)
    return fits, float(fits.mean())


def markov_error_curve(true_sys: LtiStateSpace, est_sys: LtiStateSpace, h_max: int = H_MAX):
    """``|H(h) - Hhat(h)|_F`` for ``h = 0..h_max``."""
    if (true_sys.m_in, true_sys.m_out) != (est_sys.m_in, est_sys.m_out):
        raise DimensionMismatch(
            f"I/O dimensions differ: {(true_sys.m_out, true_sys.m_in)} vs "
            f"{(est_sys.m_out, est_sys.m_in)}")
    H = markov_parameters(true_sys, h_max)
    Hh = markov_parameters(est_sys, h_max)
    return np.array([np.linalg.norm(a - b) for a, b in zip(H, Hh)])


def max_markov_error(true_sys: LtiStateSpace, est_sys: LtiStateSpace, h_max: int = H_MAX) -> float:
    """Largest Frobenius-norm Markov-parameter error over ``0 <= h <= h_max``."""
    return float(markov_error_curve(true_sys, est_sys, h_max).max())


def periodic_matrix_errors(truth: PeriodicStateSpace, est: PeriodicStateSpace) -> dict:
    """Per-phase Frobenius errors of ``A_k``, ``B_k``, ``C_k`` (same coordinates assumed)."""
    return {name: [float(np.linalg.norm(a - b)) for a, b in zip(getattr(truth, name), getattr(est, name))]
            for name in "ABC"}


@dataclass
class ValidationReport:
    """Metrics of one identification run.

    ``ol_fit_percent`` is ``None`` when the recovered plant is not stable
    (open-loop simulation is then meaningless); ``per_k_errors`` is ``None``
    unless the plant is SISO with canonical alignment.
    """

    h_max: int
    max_markov_error: float
    markov_curve: list
    extraction_markov_error: float
    cl_fit_channels: list
    cl_fit_percent: float
    ol_fit_channels: list = None
    ol_fit_percent: float = None
    per_k_errors: dict = None
    hankel_values: list = field(default_factory=list)
    subspace_values: list = field(default_factory=list)
    lambda_cond: float = float("nan")
    transform_cond: float = float("nan")
    structure_residual: float = float("nan")
    discarded_feedthrough: float = 0.0
    extracted_D_norm: float = 0.0
    extracted_spectral_radius: float = float("nan")
    recovered_spectral_radius: float = float("nan")
    lambda_ill_conditioned: bool = False
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: _jsonable(v) for k, v in d.items()}

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def markov_csv(self) -> str:
        return _csv(["h", "markov_error"], enumerate(self.markov_curve))

    def spectrum_csv(self) -> str:
        n = max(len(self.hankel_values), len(self.subspace_values))
        pad = lambda v, i: v[i] if i < len(v) else ""
        rows = ((i + 1, pad(self.hankel_values, i), pad(self.subspace_values, i)) for i in range(n))
        return _csv(["index", "hankel_sv", "subspace_sv"], rows)

    def summary(self) -> str:
        lines = [f"max Markov error (h<={self.h_max}): {self.max_markov_error:.3e}",
                 f"CL fit: {self.cl_fit_percent:.3f}%"]
        if self.ol_fit_percent is not None:
            lines.append(f"OL fit: {self.ol_fit_percent:.4f}%")
        else:
            lines.append("OL fit: n/a (recovered plant not stable)")
        lines.append(f"cond(C_u B): {self.lambda_cond:.4g}" +
                     ("  [ill-conditioned]" if self.lambda_ill_conditioned else ""))
        lines.append(f"cond(T): {self.transform_cond:.4g}")
        if self.per_k_errors:
            for name, errs in self.per_k_errors.items():
                lines.append(f"|{name}_k - {name}hat_k|_F: " + ", ".join(f"{e:.2e}" for e in errs))
        return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def closed_loop_fit(identified, dataset):
    """CL fit of the identified cycled loop on the recorded ``[y; u]``."""
    M = dataset.period
    r = cycle_signal(dataset.r, M, dataset.phase_origin)
    sr = identified.realization
    x0 = identified.fit.get("x0") if hasattr(identified, "fit") else None
    zhat = simulate_lti(sr.as_lti(), r.samples, x0).samples
    q = (dataset.y.q, dataset.u.q)
    yhat = uncycle_signal(zhat[:, :M * q[0]], tol=np.inf, M=M, q=q[0], phase_origin=dataset.phase_origin)
    uhat = uncycle_signal(zhat[:, M * q[0]:], tol=np.inf, M=M, q=q[1], phase_origin=dataset.phase_origin)
    z = np.hstack([dataset.y.samples, dataset.u.samples])
    return fit_percent(z, np.hstack([yhat.samples, uhat.samples]))


def open_loop_fit(truth: PeriodicStateSpace, recovered: PeriodicStateSpace, controller,
                  steps: int = VALIDATION_STEPS, seed: int = 12345):
    """OL fit on a fresh noise-free closed-loop run.

    The recovered plant is driven open loop by the recorded ``u`` and
    compared with the noise-free ``y``. Returns ``(None, None)`` when the
    recovered plant is not stable.
    """
    from .simulator import NoiseConfig, generate_reference, run_closed_loop_experiment
    rho = max(abs(np.linalg.eigvals(monodromy(recovered))))
    if rho >= 1.0:
        return None, None
    r = generate_reference(steps, truth.m_out, seed)
    ds = run_closed_loop_experiment(truth, controller, r, NoiseConfig(), check=False)
    yhat = simulate_lptv(recovered, ds.u)
    return fit_percent(ds.y, yhat)


def validate_pipeline(truth: PeriodicStateSpace, recovered, dataset, identified,
                      extracted=None, reduction=None, controller=None, h_max: int = H_MAX,
                      validation_steps: int = VALIDATION_STEPS, validation_seed: int = None,
                      warnings_seen=None) -> ValidationReport:
    """Assemble all metrics of a run against the true plant.

    ``recovered`` is a :class:`RecoveredPlant`; ``identified`` an
    :class:`IdentificationResult`. The OL fit needs ``controller`` to
    generate validation data; the validation seed defaults to one derived
    from the dataset seed.
    """
    true_cyc = cyclic_reformulate(truth)
    est_cyc = cyclic_reformulate(recovered.periodic)
    curve = markov_error_curve(true_cyc, est_cyc, h_max)
    ext_err = float("nan")
    if extracted is not None:
        ext_err = max_markov_error(true_cyc, extracted.realization, h_max)
    cl_ch, cl = closed_loop_fit(identified, dataset)
    ol_ch = ol = None
    if controller is not None:
        if validation_seed is None:
            validation_seed = int(dataset.metadata.get("seed", 0)) + 1_000_003
        ol_ch, ol = open_loop_fit(truth, recovered.periodic, controller, validation_steps, validation_seed)
    per_k = None
    if truth.m_in == 1 and truth.m_out == 1 and truth.n == recovered.periodic.n:
        per_k = periodic_matrix_errors(truth, recovered.periodic)
    lam = extracted.lambda_cond if extracted is not None else float("nan")
    rho_rec = float(max(abs(np.linalg.eigvals(monodromy(recovered.periodic)))))
    return ValidationReport(
        h_max=h_max,
        max_markov_error=float(curve.max()),
        markov_curve=curve.tolist(),
        extraction_markov_error=ext_err,
        cl_fit_channels=np.asarray(cl_ch).tolist(),
        cl_fit_percent=cl,
        ol_fit_channels=None if ol_ch is None else np.asarray(ol_ch).tolist(),
        ol_fit_percent=ol,
        per_k_errors=per_k,
        hankel_values=[] if reduction is None else np.asarray(reduction.hankel_values).tolist(),
        subspace_values=np.asarray(identified.singular_values).tolist(),
        lambda_cond=lam,
        transform_cond=recovered.transform_cond,
        structure_residual=recovered.structure_residual,
        discarded_feedthrough=recovered.discarded_feedthrough,
        extracted_D_norm=float("nan") if extracted is None else extracted.D_norm,
        extracted_spectral_radius=float("nan") if extracted is None else extracted.spectral_radius,
        recovered_spectral_radius=rho_rec,
        lambda_ill_conditioned=bool(np.isfinite(lam) and lam > COND_WARN),
        warnings=list(warnings_seen or []),
    )
