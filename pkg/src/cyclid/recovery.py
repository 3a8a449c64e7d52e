"""Reduction of the extracted plant and recovery of the periodic matrices.

The extracted realization has order ``M n_cl``; ``M n_c`` of its modes
cancel. After reduction to ``M n_p`` the coordinate change::

    T^-1 = sum_{j=1..n_p} blockdiag(F_j) S_l^(j-1) C_p A_p^(j-1)

brings the realization into cyclic form, from which ``A_k``, ``B_k``,
``C_k`` are read off. For SISO plants ``F_j = e_j`` gives the observable
canonical form.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (LtiStateSpace, PeriodicStateSpace, block_shift_matrix,
                   cyclic_reformulate, cyclic_structure_residual, decyclic, markov_parameters)
from .errors import (GapNotFound, OrderGapWarning, SingularTransform,
                     StructureResidualExceeded)
from .extraction import ExtractedPlant
from .hankel import (balanced_truncation, era, hankel_singular_values, spectrum_report,
                     trim_antistable)

log = logging.getLogger(__name__)


@dataclass
class RecoveryConfig:
    """Settings for reduction and recovery.

    ``F`` is a list of ``n_p`` blocks of shape ``n_p x l``; ``None`` selects
    ``e_j`` for SISO plants and a seeded random draw otherwise.
    """

    n_p: int
    period: int
    F: list = None
    method: str = "era"
    markov_depth: int = None
    gap_factor: float = 1e3
    structure_tol: float = 1e-6
    zero_feedthrough: str = "after_reduction"
    f_seed: int = 0
    f_retries: int = 10
    transform_cond_max: float = 1e10

    @property
    def target_order(self) -> int:
        return self.period * self.n_p


@dataclass
class Reduction:
    realization: LtiStateSpace
    hankel_values: np.ndarray
    gap_ratio: float
    method: str
    discarded_feedthrough: float = 0.0


@dataclass
class RecoveredPlant:
    cyclic: LtiStateSpace
    periodic: PeriodicStateSpace
    structure_residual: float
    transform_cond: float
    F: list = field(repr=False)
    discarded_feedthrough: float = 0.0


def reduce_to_plant_order(ep, cfg: RecoveryConfig) -> Reduction:
    """Reduce the extracted realization to order ``M n_p``.

    Raises :class:`GapNotFound` when ``sigma_{Mn_p} / sigma_{Mn_p+1}`` of the
    Hankel singular values is below ``cfg.gap_factor``.
    """
    sys = ep.realization if isinstance(ep, ExtractedPlant) else ep
    r = cfg.target_order
    hsv = hankel_singular_values(sys)
    rep = spectrum_report(hsv)
    ratio = rep.ratio_at(r)
    if r > sys.n:
        raise GapNotFound(f"target order {r} exceeds realization order {sys.n}", hsv)
    if r == sys.n and hsv[-1] <= 1e-10 * hsv[0]:
        raise GapNotFound(f"target order {r} equals the realization order but "
                          f"sigma_{r} = {hsv[-1]:.3g} is negligible (realization not minimal)", hsv)
    if r < sys.n and ratio < cfg.gap_factor:
        raise GapNotFound(
            f"no singular-value gap at order {r}: sigma_{r}/sigma_{r + 1} = {ratio:.3g} < "
            f"{cfg.gap_factor:g}; largest gap after {rep.gap_index} values", hsv)
    if rep.gap_index is not None and rep.gap_index != r and r < sys.n:
        warnings.warn(f"largest Hankel gap is after {rep.gap_index} values, not {r}",
                      OrderGapWarning, stacklevel=2)
    discarded = 0.0
    if cfg.zero_feedthrough == "before_reduction":
        discarded = float(np.linalg.norm(sys.D))
        sys = LtiStateSpace(sys.A, sys.B, sys.C)
    if r == sys.n:
        red = sys
    elif cfg.method == "era":
        depth = cfg.markov_depth or 4 * sys.n
        red, _ = era(markov_parameters(trim_antistable(sys, r), depth), r)
    elif cfg.method == "bt":
        red = balanced_truncation(sys, r)
    else:
        raise ValueError(f"unknown reduction method {cfg.method!r}")
    if cfg.zero_feedthrough == "after_reduction":
        discarded = float(np.linalg.norm(red.D))
        red = LtiStateSpace(red.A, red.B, red.C)
    if discarded:
        log.info("discarded feedthrough of Frobenius norm %.3e", discarded)
    return Reduction(red, hsv, ratio, cfg.method, discarded)


def default_F(n_p: int, l: int, seed: int = 0, attempt: int = 0) -> list:
    """``e_j`` for SISO; otherwise a seeded Gaussian draw (one per attempt)."""
    if l == 1 and attempt == 0:
        return [np.eye(n_p)[:, [j]] for j in range(n_p)]
    rng = np.random.default_rng([seed, attempt])
    return [rng.standard_normal((n_p, l)) for _ in range(n_p)]


def transform_from_F(reduced: LtiStateSpace, F, M: int) -> np.ndarray:
    """``T^-1 = sum_j blockdiag(F_j) S_l^(j-1) C_p A_p^(j-1)``."""
    l = reduced.m_out // M
    S = block_shift_matrix(l, M)
    Ti = np.zeros((reduced.n, reduced.n))
    Sj = np.eye(M * l)
    CAj = reduced.C
    for Fj in F:
        Fj = np.atleast_2d(np.asarray(Fj, dtype=float))
        Ti += np.kron(np.eye(M), Fj) @ Sj @ CAj
        Sj = S @ Sj
        CAj = CAj @ reduced.A
    return Ti


def build_recovery_transform(reduced: LtiStateSpace, cfg: RecoveryConfig):
    """Return ``(T^-1, F, cond(T))`` for the reduced realization.

    With ``cfg.F`` unset, up to ``cfg.f_retries`` draws are tried. Raises
    :class:`SingularTransform` if no admissible ``T`` is found.
    """
    M, n_p = cfg.period, cfg.n_p
    if reduced.n != M * n_p:
        raise ValueError(f"reduced order {reduced.n} != M n_p = {M * n_p}")
    l = reduced.m_out // M
    candidates = ([cfg.F] if cfg.F is not None else
                  (default_F(n_p, l, cfg.f_seed, a) for a in range(cfg.f_retries)))
    last = None
    for F in candidates:
        if len(F) != n_p or any(np.shape(f) != (n_p, l) for f in F):
            raise ValueError(f"F must hold {n_p} blocks of shape {(n_p, l)}")
        Ti = transform_from_F(reduced, F, M)
        cond = float(np.linalg.cond(Ti))
        last = cond
        if np.isfinite(cond) and cond < cfg.transform_cond_max:
            return Ti, F, cond
    raise SingularTransform(f"recovery transform is singular (cond = {last:.3e}); "
                            "choose different F blocks")


def cast_to_cyclic(reduced: LtiStateSpace, cfg: RecoveryConfig):
    """Apply the recovery transform; return ``(cyclic, F, cond(T), residual)``.

    Raises :class:`StructureResidualExceeded` if the energy outside the
    cyclic pattern exceeds ``cfg.structure_tol`` times the energy inside it.
    """
    Ti, F, cond = build_recovery_transform(reduced, cfg)
    T = np.linalg.inv(Ti)
    cyc = LtiStateSpace(Ti @ reduced.A @ T, Ti @ reduced.B, reduced.C @ T, reduced.D)
    off, on = cyclic_structure_residual(cyc, cfg.period)
    rel = off / on if on > 0 else np.inf
    if rel > cfg.structure_tol:
        raise StructureResidualExceeded(
            f"off-pattern mass {rel:.3e} (relative) exceeds tolerance {cfg.structure_tol:g}", rel)
    return cyc, F, cond, rel


def read_periodic(cyc: LtiStateSpace, M: int):
    """Periodic matrices from the cyclic slots, with ``D_k`` set to zero.

    Returns ``(periodic, |D|_F)`` where the second entry is the norm of the
    dropped feedthrough.
    """
    per = decyclic(cyc, M)
    dropped = float(np.linalg.norm(np.hstack(per.D)))
    return PeriodicStateSpace(per.A, per.B, per.C), dropped


def recover_lptv(reduced: LtiStateSpace, cfg: RecoveryConfig, discarded_feedthrough=0.0) -> RecoveredPlant:
    """Cast the reduced realization into cyclic form and read off the periodic matrices.

    The recovered ``D_k`` are set to zero (strictly proper plant).
    """
    cyc, F, cond, rel = cast_to_cyclic(reduced, cfg)
    per, dropped = read_periodic(cyc, cfg.period)
    return RecoveredPlant(cyc, per, rel, cond, F, discarded_feedthrough + dropped)
