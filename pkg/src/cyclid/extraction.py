"""Algebraic plant extraction from a shared-A closed-loop realization.

Given ``(A, B, C_y, C_u)`` realizing ``r -> y`` and ``r -> u`` with a
common state, the plant ``P = T_yr T_ur^{-1}`` is realized without state
augmentation by::

    L   = (C_u B)^{-1}
    A_p = A - A B L C_u        B_p = A B L
    C_p = C_y (I - B L C_u)    D_p = C_y B L

For a controller of relative degree ``d`` the products ``A B``, ``C_y B``
and ``C_u B`` become ``A^d B``, ``C_y A^(d-1) B`` and ``C_u A^(d-1) B``.
The extracted realization may be unstable; its Markov parameters are
exact whenever the input realization is.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .closed_loop import SharedARealization
from .core import LtiStateSpace, markov_parameters
from .errors import ConditioningWarning, SingularControllerPath

COND_WARN = 1e4
COND_FAIL = 1e8


@dataclass(frozen=True)
class ExtractedPlant:
    realization: LtiStateSpace
    lambda_cond: float
    spectral_radius: float
    relative_degree: int = 1

    @property
    def D_norm(self) -> float:
        """Frobenius norm of the extracted feedthrough (structurally zero)."""
        return float(np.linalg.norm(self.realization.D))


def _path_inverse(P, cond_warn, cond_fail):
    if P.shape[0] != P.shape[1]:
        raise SingularControllerPath(f"controller path matrix is not square: {P.shape}")
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > cond_fail:
        raise SingularControllerPath(
            f"controller path matrix is numerically singular (cond = {cond:.3e})")
    if cond > cond_warn:
        warnings.warn(f"controller path matrix is ill-conditioned (cond = {cond:.3e}); "
                      "extraction may be unreliable", ConditioningWarning, stacklevel=4)
    Lam = la.lu_solve(la.lu_factor(P), np.eye(P.shape[0]))
    return Lam, cond


def controller_path_inverse(sr: SharedARealization, d: int = 1, cond_warn: float = COND_WARN,
                            cond_fail: float = COND_FAIL):
    """``Lambda = (C_u A^(d-1) B)^-1`` and the condition number of the inverted matrix."""
    if d < 1:
        raise ValueError("relative degree must be at least 1")
    P = sr.C_u @ np.linalg.matrix_power(sr.A, d - 1) @ sr.B
    return _path_inverse(P, cond_warn, cond_fail)


def extract_plant_general(sr: SharedARealization, d: int = 1, cond_warn: float = COND_WARN,
                          cond_fail: float = COND_FAIL, path=None) -> ExtractedPlant:
    """Extract the plant for a controller path of relative degree ``d``.

    ``path`` may hold a precomputed ``(Lambda, cond)`` pair from
    :func:`controller_path_inverse`.
    """
    if d < 1:
        raise ValueError("relative degree must be at least 1")
    A, B, C_y, C_u = sr.A, sr.B, sr.C_y, sr.C_u
    Ad1B = np.linalg.matrix_power(A, d - 1) @ B
    AdB = A @ Ad1B
    Lam, cond = path if path is not None else _path_inverse(C_u @ Ad1B, cond_warn, cond_fail)
    Bp = AdB @ Lam
    Ap = A - Bp @ C_u
    Dp = C_y @ Ad1B @ Lam
    Cp = C_y - Dp @ C_u
    real = LtiStateSpace(Ap, Bp, Cp, Dp)
    return ExtractedPlant(real, cond, real.spectral_radius(), d)


def extract_plant(sr: SharedARealization, cond_warn: float = COND_WARN,
                  cond_fail: float = COND_FAIL) -> ExtractedPlant:
    """Extract the cycled plant from a shared-A realization (relative degree one).

    Raises :class:`SingularControllerPath` if ``cond(C_u B)`` exceeds
    ``cond_fail`` and warns above ``cond_warn``.
    """
    return extract_plant_general(sr, 1, cond_warn, cond_fail)


@dataclass
class CascadeReport:
    """Check of the cascade ``T_yr^(1) [T_ur^(1)]^{-1}`` and its decoupling."""

    lower_input_norm: float
    coupling_norm: float
    scale: float
    tol: float
    markov_gap: float

    @property
    def passed(self) -> bool:
        return (self.lower_input_norm <= self.tol * self.scale
                and self.coupling_norm <= self.tol * self.scale)


def cascade_realization(sr: SharedARealization) -> LtiStateSpace:
    """Series connection of the inverse of ``T_ur^(1)`` and ``T_yr^(1)``.

    The inverse system ``(A - AB L C_u, AB L, -L C_u, L)`` feeds
    ``(A, AB, C_y, C_y B)``; the result has twice the state dimension.
    """
    A, B, C_y, C_u = sr.A, sr.B, sr.C_y, sr.C_u
    Lam = np.linalg.solve(C_u @ B, np.eye(C_u.shape[0]))
    AB = A @ B
    Ai, Bi, Ci, Di = A - AB @ Lam @ C_u, AB @ Lam, -Lam @ C_u, Lam
    n = A.shape[0]
    Acas = np.block([[Ai, np.zeros((n, n))], [AB @ Ci, A]])
    Bcas = np.vstack([Bi, AB @ Di])
    Ccas = np.hstack([C_y @ B @ Ci, C_y])
    Dcas = C_y @ B @ Di
    return LtiStateSpace(Acas, Bcas, Ccas, Dcas)


def verify_cascade_cancellation(sr: SharedARealization, tol: float = 1e-10,
                                h_max: int = None) -> CascadeReport:
    """Apply ``T = [[I, 0], [I, I]]`` to the cascade and measure what should vanish.

    ``lower_input_norm`` is the norm of the lower half of ``T^-1 B_cas``;
    ``coupling_norm`` the norm of the off-diagonal blocks of
    ``T^-1 A_cas T``. ``markov_gap`` compares the cascade Markov parameters
    (up to ``h_max``, default ``2 n``) with those of :func:`extract_plant`.
    """
    cas = cascade_realization(sr)
    n = sr.n
    I, Z = np.eye(n), np.zeros((n, n))
    T = np.block([[I, Z], [I, I]])
    Ti = np.block([[I, Z], [-I, I]])
    At = Ti @ cas.A @ T
    Bt = Ti @ cas.B
    lower = float(np.linalg.norm(Bt[n:]))
    coupling = float(np.linalg.norm(At[:n, n:]) + np.linalg.norm(At[n:, :n]))
    scale = max(1.0, float(np.linalg.norm(cas.A)), float(np.linalg.norm(cas.B)))
    ep = extract_plant(sr, cond_warn=np.inf, cond_fail=np.inf)
    h_max = 2 * n if h_max is None else h_max
    gap = max(float(np.linalg.norm(a - b)) for a, b in
              zip(markov_parameters(cas, h_max), markov_parameters(ep.realization, h_max)))
    return CascadeReport(lower, coupling, scale, tol, gap)
