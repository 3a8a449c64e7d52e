"""Hankel singular values, ERA realization and balanced truncation.

Gramians are handled through triangular factors (squared Smith iteration
with QR compression), so singular values of cancelled modes come out at
round-off level instead of at the square root of it. Unstable modes are
separated first; the antistable part is treated through the anticausal
system ``(A^-1, A^-1 B, C)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .core import LtiStateSpace


def gramian_factor(A, B, tol=1e-18, max_doublings=60):
    """Triangular ``L`` with ``L L^T = sum_k A^k B B^T (A^T)^k`` (``A`` Schur stable)."""
    n = A.shape[0]
    Z = np.hstack([B, np.zeros((n, max(0, n - B.shape[1])))])
    L = la.qr(Z.T, mode="r")[0][:n].T
    Ak = A.copy()
    for _ in range(max_doublings):
        inc = Ak @ L
        L = la.qr(np.hstack([L, inc]).T, mode="r")[0][:n].T
        if np.linalg.norm(inc) <= tol * max(np.linalg.norm(L), 1e-300):
            break
        Ak = Ak @ Ak
        if not np.all(np.isfinite(Ak)):
            raise np.linalg.LinAlgError("gramian iteration diverged; A is not Schur stable")
    return L


def _empty(m_in, m_out, D=None):
    return LtiStateSpace(np.zeros((0, 0)), np.zeros((0, m_in)), np.zeros((m_out, 0)), D)


def stable_antistable_split(sys: LtiStateSpace, radius: float = 1.0):
    """Split ``sys`` into ``(stable, antistable)`` parts (similar to a block-diagonal form).

    Modes with ``|lambda| < radius`` go to the stable part. Returns the two
    :class:`LtiStateSpace` objects; the stable one keeps ``D``.
    """
    A = sys.A
    n = A.shape[0]
    T, Z, ns = la.schur(A, output="real", sort=lambda re, im: re * re + im * im < radius ** 2)
    B, C = Z.T @ sys.B, sys.C @ Z
    if ns == n:
        return LtiStateSpace(T, B, C, sys.D), _empty(sys.m_in, sys.m_out)
    if ns == 0:
        return _empty(sys.m_in, sys.m_out, sys.D), LtiStateSpace(T, B, C)
    A11, A12, A22 = T[:ns, :ns], T[:ns, ns:], T[ns:, ns:]
    # X with A11 X - X A22 = -A12 decouples the two blocks
    X = la.solve_sylvester(A11, -A22, -A12)
    B1 = B[:ns] - X @ B[ns:]
    C2 = C[:, ns:] + C[:, :ns] @ X
    stable = LtiStateSpace(A11, B1, C[:, :ns], sys.D)
    anti = LtiStateSpace(A22, B[ns:], C2)
    return stable, anti


def _hsv_stable(sys):
    if sys.n == 0:
        return np.zeros(0), None
    Lp = gramian_factor(sys.A, sys.B)
    Lq = gramian_factor(sys.A.T, sys.C.T)
    U, s, Vt = np.linalg.svd(Lq.T @ Lp)
    return s, (Lp, Lq, U, s, Vt)


def hankel_singular_values(sys: LtiStateSpace) -> np.ndarray:
    """Hankel singular values in decreasing order.

    For systems with unstable modes the values of the stable part and of the
    anticausal antistable part are merged.
    """
    stable, anti = stable_antistable_split(sys)
    s1 = _hsv_stable(stable)[0]
    s2 = np.zeros(0)
    if anti.n:
        Ai = np.linalg.inv(anti.A)
        s2 = _hsv_stable(LtiStateSpace(Ai, Ai @ anti.B, anti.C))[0]
    return np.sort(np.concatenate([s1, s2]))[::-1]


@dataclass
class SpectrumReport:
    """Singular values with the location of the largest consecutive drop.

    ``gap_index`` counts the values kept before the drop (1-based), or is
    ``None`` when all values are zero.
    """

    values: np.ndarray
    gap_index: int
    gap_ratio: float

    def ratio_at(self, k: int) -> float:
        """``sigma_k / sigma_{k+1}`` (1-based ``k``); ``inf`` if the next value is zero."""
        s = self.values
        if k < 1 or k >= len(s):
            return np.inf if k == len(s) else 0.0
        return float(s[k - 1] / s[k]) if s[k] > 0 else (np.inf if s[k - 1] > 0 else 0.0)


def spectrum_report(values) -> SpectrumReport:
    s = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
    best, best_ratio = None, 0.0
    for k in range(1, len(s)):
        if s[k - 1] <= 0:
            break
        r = s[k - 1] / s[k] if s[k] > 0 else np.inf
        if r > best_ratio:
            best, best_ratio = k, r
    return SpectrumReport(s, best, float(best_ratio))


def block_hankel(markov, rows: int, cols: int, shift: int = 1) -> np.ndarray:
    """Block Hankel matrix with block ``(i, j) = markov[i + j + shift]``."""
    return np.block([[markov[i + j + shift] for j in range(cols)] for i in range(rows)])


def era(markov, order: int, rows: int = None, cols: int = None):
    """Ho-Kalman / ERA realization of order ``order`` from Markov parameters.

    ``markov[0]`` is the feedthrough. Returns ``(sys, singular_values)`` where
    the singular values are those of the block Hankel matrix.
    """
    K = len(markov) - 1
    rows = rows or K // 2
    cols = cols or K - rows
    if rows < 1 or cols < 1 or rows + cols > K:
        raise ValueError("not enough Markov parameters for the requested Hankel size")
    p, m = markov[0].shape
    H0 = block_hankel(markov, rows, cols, 1)
    U, s, Vt = np.linalg.svd(H0, full_matrices=False)
    if order > len(s) or s[order - 1] <= 0:
        raise np.linalg.LinAlgError(f"Hankel matrix has rank below {order}")
    H1 = block_hankel(markov, rows, cols, 2)
    sq = np.sqrt(s[:order])
    Obs = U[:, :order] * sq
    Ctr = (Vt[:order].T * sq).T
    A = (U[:, :order].T @ H1 @ Vt[:order].T) / np.outer(sq, sq)
    B = Ctr[:, :m]
    C = Obs[:p]
    return LtiStateSpace(A, B, C, markov[0]), s


def _balance_stable(sys: LtiStateSpace, keep: int) -> LtiStateSpace:
    """Square-root balanced truncation of a Schur-stable system to ``keep`` states."""
    if keep >= sys.n:
        return sys
    _, (Lp, Lq, U, sv, Vt) = _hsv_stable(sys)
    if keep > 0 and sv[keep - 1] <= 0:
        raise np.linalg.LinAlgError("fewer nonzero Hankel values than the kept order")
    si = 1.0 / np.sqrt(sv[:keep])
    T = Lp @ Vt[:keep].T * si
    Ti = (si[:, None] * U[:, :keep].T) @ Lq.T
    return LtiStateSpace(Ti @ sys.A @ T, Ti @ sys.B, sys.C @ T, sys.D)


def _truncate_anti(anti: LtiStateSpace, keep: int) -> LtiStateSpace:
    """Balanced truncation of an antistable part through its anticausal form."""
    if keep >= anti.n:
        return anti
    if keep == 0:
        return _empty(anti.m_in, anti.m_out)
    Ai = np.linalg.inv(anti.A)
    red = _balance_stable(LtiStateSpace(Ai, Ai @ anti.B, anti.C), keep)
    A = np.linalg.inv(red.A)
    return LtiStateSpace(A, A @ red.B, red.C)


def _split_for_order(sys: LtiStateSpace, order: int):
    """Split ``sys`` and count how many of the ``order`` largest Hankel values
    belong to the stable and to the antistable part."""
    stable, anti = stable_antistable_split(sys)
    s1 = _hsv_stable(stable)[0]
    s2 = np.zeros(0)
    if anti.n:
        Ai = np.linalg.inv(anti.A)
        s2 = _hsv_stable(LtiStateSpace(Ai, Ai @ anti.B, anti.C))[0]
    tags = np.concatenate([np.zeros(len(s1)), np.ones(len(s2))])
    top = tags[np.argsort(-np.concatenate([s1, s2]), kind="stable")[:order]]
    return stable, anti, int(np.sum(top == 0)), int(np.sum(top == 1))


def _join(stable: LtiStateSpace, anti: LtiStateSpace) -> LtiStateSpace:
    A = la.block_diag(stable.A, anti.A)
    B = np.vstack([stable.B, anti.B])
    C = np.hstack([stable.C, anti.C])
    return LtiStateSpace(A, B, C, stable.D)


def trim_antistable(sys: LtiStateSpace, order: int) -> LtiStateSpace:
    """Drop antistable modes that do not rank among the ``order`` largest Hankel values.

    The stable part is left untouched. Cancelled unstable modes otherwise
    grow like ``|lambda|^h`` in computed Markov parameters and swamp ERA.
    """
    stable, anti, _, k_anti = _split_for_order(sys, order)
    if k_anti == anti.n:
        return sys
    return _join(stable, _truncate_anti(anti, k_anti))


def balanced_truncation(sys: LtiStateSpace, order: int) -> LtiStateSpace:
    """Balanced truncation of the stable and the antistable part.

    The ``order`` largest Hankel values decide how many states each part
    keeps, so significant unstable modes survive and cancelled ones do not.
    """
    stable, anti, k_st, k_anti = _split_for_order(sys, order)
    return _join(_balance_stable(stable, k_st), _truncate_anti(anti, k_anti))
