"""Subspace identification of the cycled closed loop.

``(A, C)`` come from the column space of the MOESP-weighted projection of
future outputs (orthogonal to future inputs, instrumented by past inputs
and outputs); ``(B, x0)`` are then fitted by linear least squares with the
feedthrough pinned to zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .closed_loop import SharedARealization
from .core import CycledSignal, LtiStateSpace, simulate_lti
from .errors import DataLengthWarning, GapNotFound, OrderGapWarning, RankDeficientData
from .hankel import SpectrumReport, spectrum_report


@dataclass
class SubspaceConfig:
    """Order and horizon of the identification.

    ``horizon`` is the number of past (and future) block rows; by default
    ``2 * ceil(order / n_outputs) + 2`` but never less than ``min_horizon``.
    ``gap_factor`` is the smallest accepted ratio ``sigma_n / sigma_{n+1}``
    of the weighted singular values at the model order; a smaller ratio
    means the order is too low (or the data too noisy) and raises
    :class:`GapNotFound`. Set it to 0 to disable the check.
    """

    model_order: int
    horizon: int = None
    min_horizon: int = 10
    gap_factor: float = 3.0
    auto_order: bool = False
    estimate_x0: bool = True

    def horizon_for(self, n_outputs: int) -> int:
        if self.horizon is not None:
            i = self.horizon
        else:
            i = max(2 * math.ceil(self.model_order / n_outputs) + 2, self.min_horizon)
        if i * n_outputs < self.model_order:
            raise ValueError(f"horizon {i} too short for order {self.model_order}")
        return i


@dataclass
class IdentificationResult:
    realization: SharedARealization
    singular_values: np.ndarray
    horizon: int
    fit: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.realization.n


def block_hankel_rows(x: np.ndarray, start: int, rows: int, cols: int) -> np.ndarray:
    """Stack ``x[start + r : start + r + cols].T`` for ``r = 0..rows-1``."""
    return np.vstack([x[start + r:start + r + cols].T for r in range(rows)])


def moesp_ac(u: np.ndarray, y: np.ndarray, order: int, i: int):
    """Estimate ``(A, C)`` and the singular spectrum from input/output data."""
    N, m = u.shape
    p = y.shape[1]
    j = N - 2 * i + 1
    if j < 2 * i * (m + p):
        raise RankDeficientData(
            f"{N} samples are too few for horizon {i} with {m} inputs and {p} outputs")
    s = 1.0 / np.sqrt(j)
    Uf = block_hankel_rows(u, i, i, j) * s
    Up = block_hankel_rows(u, 0, i, j) * s
    Yp = block_hankel_rows(y, 0, i, j) * s
    Yf = block_hankel_rows(y, i, i, j) * s
    H = np.vstack([Uf, Up, Yp, Yf])
    L = la.qr(H.T, mode="r")[0][:H.shape[0]].T
    a, b = i * m, 2 * i * m + i * p
    d = np.abs(np.diag(L[:2 * i * m, :2 * i * m]))
    if d.min() < 1e-10 * d.max():
        raise RankDeficientData("inputs are not persistently exciting (rank-deficient data matrix)")
    # future outputs with the future-input part removed, restricted to the past-data row space
    U, sv, _ = np.linalg.svd(L[b:, a:b], full_matrices=False)
    Gam = U[:, :order] * np.sqrt(sv[:order])
    C = Gam[:p]
    A = np.linalg.lstsq(Gam[:-p], Gam[p:], rcond=None)[0]
    return A, C, sv


def fit_b_x0(A: np.ndarray, C: np.ndarray, u: np.ndarray, y: np.ndarray, estimate_x0=True):
    """Least-squares ``B`` (and ``x0``) for fixed ``(A, C)`` and zero feedthrough."""
    N, m = u.shape
    n, p = A.shape[0], C.shape[0]
    nb = n * m
    X = np.zeros((n, nb + (n if estimate_x0 else 0)))
    if estimate_x0:
        X[:, nb:] = np.eye(n)
    Phi = np.empty((N, p, X.shape[1]))
    In = np.eye(n)
    for k in range(N):
        Phi[k] = C @ X
        X = A @ X
        X[:, :nb] += np.kron(u[k][None, :], In)
    theta = np.linalg.lstsq(Phi.reshape(N * p, -1), y.reshape(-1), rcond=None)[0]
    B = theta[:nb].reshape(m, n).T
    x0 = theta[nb:] if estimate_x0 else np.zeros(n)
    return B, x0


def identify_cycled_closed_loop(r: CycledSignal, z: CycledSignal, cfg: SubspaceConfig,
                                n_y: int = None) -> IdentificationResult:
    """Identify ``(A, B, [C_y; C_u])`` from cycled reference and stacked output.

    ``n_y`` is the number of rows of ``C_y``; by default the first column
    group of ``z``. Warns with :class:`OrderGapWarning` when the singular
    spectrum drops sharply before ``cfg.model_order``.
    """
    u = np.asarray(r.samples if isinstance(r, CycledSignal) else r, float)
    y = np.asarray(z.samples if isinstance(z, CycledSignal) else z, float)
    if n_y is None:
        n_y = z.period * z.groups[0]
    N = u.shape[0]
    order = cfg.model_order
    if N < 10 * order:
        warnings.warn(f"only {N} samples for order {order}", DataLengthWarning, stacklevel=2)
    i = cfg.horizon_for(y.shape[1])
    A, C, sv = moesp_ac(u, y, order, i)
    rep = spectrum_report(sv[:order + 1])
    full = spectrum_report(sv)
    if rep.gap_index is not None and rep.gap_index < order and rep.gap_ratio > 1e8:
        msg = (f"singular spectrum drops by {rep.gap_ratio:.2e} after {rep.gap_index} values; "
               f"effective order may be below {order}")
        if cfg.auto_order:
            order = rep.gap_index
            A, C, sv = moesp_ac(u, y, order, i)
        warnings.warn(msg, OrderGapWarning, stacklevel=2)
    ratio = full.ratio_at(order)
    if ratio < cfg.gap_factor:
        raise GapNotFound(
            f"weighted singular values show no gap at order {order}: "
            f"sigma_{order}/sigma_{order + 1} = {ratio:.3g} < {cfg.gap_factor:g}", sv)
    B, x0 = fit_b_x0(A, C, u, y, cfg.estimate_x0)
    sr = SharedARealization(A, B, C[:n_y], C[n_y:])
    yhat = simulate_lti(LtiStateSpace(A, B, C), u, x0).samples
    err = y - yhat
    fit = {"x0": x0, "residual_rms": float(np.sqrt(np.mean(err ** 2)))}
    return IdentificationResult(sr, sv, i, fit)


def singular_spectrum_report(result) -> SpectrumReport:
    """Sorted singular values and the largest-ratio gap.

    Accepts an :class:`IdentificationResult`, an array of singular values,
    or an LTI realization (Hankel singular values are computed).
    """
    if isinstance(result, IdentificationResult):
        return spectrum_report(result.singular_values)
    if isinstance(result, LtiStateSpace):
        from .hankel import hankel_singular_values
        return spectrum_report(hankel_singular_values(result))
    if hasattr(result, "realization") and isinstance(result.realization, LtiStateSpace):
        from .hankel import hankel_singular_values
        return spectrum_report(hankel_singular_values(result.realization))
    return spectrum_report(result)
