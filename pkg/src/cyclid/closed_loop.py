"""Augmented closed-loop system and its cycled shared-A realization.

Plant ``P`` (square, strictly proper) in feedback with controller ``K``
(no feedthrough), error ``e = r - y``. With augmented state
``xi = [x_p; x_c]`` the loop is the periodic system::

    xi(k+1) = A_cl,k xi(k) + B_cl,k r(k) + B_eta,k [w(k); v(k)]
    z(k)    = [y(k); u(k)] = C_cl,k xi(k) + [I; 0] v(k)
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import LtiStateSpace, PeriodicStateSpace, cyclic_reformulate, monodromy
from .errors import AssumptionViolation, DimensionMismatch, StabilityMarginWarning

STABILITY_WARN_RADIUS = 0.999


@dataclass(frozen=True)
class AugmentedClosedLoop:
    """Periodic closed loop from ``r`` to ``z = [y; u]``.

    ``split`` is the number of ``y`` rows in each ``C_cl,k``.
    """

    sys: PeriodicStateSpace
    B_eta: tuple
    split: int
    n_p: int
    n_c: int

    @property
    def period(self) -> int:
        return self.sys.period

    @property
    def C_y(self):
        return tuple(C[:self.split] for C in self.sys.C)

    @property
    def C_u(self):
        return tuple(C[self.split:] for C in self.sys.C)


@dataclass(frozen=True)
class SharedARealization:
    """State-space model ``(A, B, [C_y; C_u])`` with zero feedthrough."""

    A: np.ndarray
    B: np.ndarray
    C_y: np.ndarray
    C_u: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C_y = np.atleast_2d(np.asarray(self.C_y, dtype=float))
        C_u = np.atleast_2d(np.asarray(self.C_u, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C_y.shape[1] != n or C_u.shape[1] != n:
            raise DimensionMismatch("inconsistent shared-A realization")
        for name, val in (("A", A), ("B", B), ("C_y", C_y), ("C_u", C_u)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def C(self) -> np.ndarray:
        return np.vstack([self.C_y, self.C_u])

    def as_lti(self) -> LtiStateSpace:
        return LtiStateSpace(self.A, self.B, self.C)

    def T_yr(self) -> LtiStateSpace:
        return LtiStateSpace(self.A, self.B, self.C_y)

    def T_ur(self) -> LtiStateSpace:
        return LtiStateSpace(self.A, self.B, self.C_u)

    def similarity(self, T) -> "SharedARealization":
        Ti = np.linalg.inv(T)
        return SharedARealization(Ti @ self.A @ T, Ti @ self.B, self.C_y @ T, self.C_u @ T)

    @classmethod
    def from_lti(cls, sys: LtiStateSpace, n_y: int) -> "SharedARealization":
        """Split the output rows of ``sys`` into the first ``n_y`` and the rest."""
        return cls(sys.A, sys.B, sys.C[:n_y], sys.C[n_y:])


@dataclass
class AssumptionReport:
    """Outcome of the four structural checks.

    ``controller_path`` lists ``C_c,k B_c,k-1`` for ``k = 0..M-1``.
    """

    square: bool
    plant_strictly_proper: bool
    controller_strictly_proper: bool
    controller_path: list
    controller_path_det: list
    controller_path_cond: list
    closed_loop_radius: float
    reachability_rank: int
    observability_rank: int
    cycled_order: int
    rank_tol: float
    notes: list = field(default_factory=list)

    @property
    def assumption1(self) -> bool:
        return self.square and self.plant_strictly_proper

    @property
    def assumption2(self) -> bool:
        return self.controller_strictly_proper and all(
            np.isfinite(c) and c < 1.0 / np.finfo(float).eps for c in self.controller_path_cond)

    @property
    def assumption3(self) -> bool:
        return self.closed_loop_radius < 1.0

    @property
    def assumption4(self) -> bool:
        return (self.reachability_rank == self.cycled_order
                and self.observability_rank == self.cycled_order)

    @property
    def ok(self) -> bool:
        return self.assumption1 and self.assumption2 and self.assumption3 and self.assumption4

    @property
    def failed(self) -> list:
        flags = [self.assumption1, self.assumption2, self.assumption3, self.assumption4]
        return [i + 1 for i, f in enumerate(flags) if not f]

    def as_dict(self) -> dict:
        return {
            "assumption1": self.assumption1,
            "assumption2": self.assumption2,
            "assumption3": self.assumption3,
            "assumption4": self.assumption4,
            "square": self.square,
            "plant_strictly_proper": self.plant_strictly_proper,
            "controller_strictly_proper": self.controller_strictly_proper,
            "controller_path": [np.asarray(c).tolist() for c in self.controller_path],
            "controller_path_det": [float(d) for d in self.controller_path_det],
            "controller_path_cond": [float(c) for c in self.controller_path_cond],
            "closed_loop_radius": float(self.closed_loop_radius),
            "reachability_rank": int(self.reachability_rank),
            "observability_rank": int(self.observability_rank),
            "cycled_order": int(self.cycled_order),
            "rank_tol": float(self.rank_tol),
            "notes": list(self.notes),
        }

    def summary(self) -> str:
        lines = []
        names = {1: "square strictly proper plant", 2: "controller relative degree one",
                 3: "internal stability", 4: "minimal cycled closed loop"}
        for i, ok in enumerate([self.assumption1, self.assumption2,
                                self.assumption3, self.assumption4], start=1):
            lines.append(f"Assumption {i} ({names[i]}): {'ok' if ok else 'FAILED'}")
        for k, (d, c) in enumerate(zip(self.controller_path_det, self.controller_path_cond)):
            lines.append(f"  k={k}: det(C_c,k B_c,k-1) = {d:.6g}, cond = {c:.4g}")
        lines.append(f"  closed-loop spectral radius (monodromy) = {self.closed_loop_radius:.6f}")
        lines.append(f"  cycled reachability rank {self.reachability_rank}, observability rank "
                     f"{self.observability_rank} (order {self.cycled_order})")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _check_dims(plant: PeriodicStateSpace, controller: PeriodicStateSpace):
    if plant.period != controller.period:
        raise DimensionMismatch(
            f"plant period {plant.period} != controller period {controller.period}")
    if controller.m_in != plant.m_out or controller.m_out != plant.m_in:
        raise DimensionMismatch(
            "controller must map plant outputs (errors) to plant inputs: "
            f"plant {plant.m_out}x{plant.m_in}, controller {controller.m_out}x{controller.m_in}")


def build_augmented(plant: PeriodicStateSpace, controller: PeriodicStateSpace,
                    Bw=None) -> AugmentedClosedLoop:
    """Assemble the closed-loop periodic system.

    ``Bw`` is an optional list of process-noise input matrices (``n_p x m_w``);
    without it the disturbance channel only carries measurement noise.
    Raises :class:`AssumptionViolation` when the plant is not square and
    strictly proper (1) or the controller has direct feedthrough (2).
    """
    _check_dims(plant, controller)
    M = plant.period
    l, m = plant.m_out, plant.m_in
    if l != m:
        raise AssumptionViolation(1, f"plant is not square ({l} outputs, {m} inputs)")
    for k in range(M):
        if np.any(plant.D[k] != 0):
            raise AssumptionViolation(1, "plant has direct feedthrough", phase=k)
        if np.any(controller.D[k] != 0):
            raise AssumptionViolation(2, "controller has direct feedthrough", phase=k)
    n_p, n_c = plant.n, controller.n
    if Bw is None:
        Bw = [np.zeros((n_p, 0))] * M
    Bw = [np.atleast_2d(np.asarray(b, dtype=float)).reshape(n_p, -1) for b in Bw]
    m_w = Bw[0].shape[1]
    A, B, C, Beta = [], [], [], []
    for k in range(M):
        Ap, Bp, Cp, _ = plant.at(k)
        Ac, Bc, Cc, _ = controller.at(k)
        A.append(np.block([[Ap, Bp @ Cc], [-Bc @ Cp, Ac]]))
        B.append(np.vstack([np.zeros((n_p, l)), Bc]))
        C.append(np.block([[Cp, np.zeros((l, n_c))], [np.zeros((m, n_p)), Cc]]))
        Beta.append(np.block([[Bw[k], np.zeros((n_p, l))],
                              [np.zeros((n_c, m_w)), -Bc]]))
    sys = PeriodicStateSpace(A, B, C)
    return AugmentedClosedLoop(sys, tuple(Beta), l, n_p, n_c)


def cycled_closed_loop(acl: AugmentedClosedLoop) -> SharedARealization:
    """Cycled closed loop with outputs stacked as ``[y_cyc; u_cyc]``.

    The cyclic reformulation of ``z`` interleaves ``y`` and ``u`` per phase;
    the rows are permuted so that all ``y`` blocks come first.
    """
    cyc = cyclic_reformulate(acl.sys)
    M, l = acl.period, acl.split
    q = acl.sys.m_out
    m = q - l
    y_rows = np.concatenate([np.arange(k * q, k * q + l) for k in range(M)])
    u_rows = np.concatenate([np.arange(k * q + l, (k + 1) * q) for k in range(M)])
    return SharedARealization(cyc.A, cyc.B, cyc.C[y_rows], cyc.C[u_rows])


def controller_path_blocks(controller: PeriodicStateSpace, d: int = 1) -> list:
    """``C_c,k A_c,k-1 ... A_c,k-d+1 B_c,k-d`` for each phase ``k``."""
    blocks = []
    for k in range(controller.period):
        X = controller.at(k - d)[1]
        for j in range(d - 1, 0, -1):
            X = controller.at(k - j)[0] @ X
        blocks.append(controller.at(k)[2] @ X)
    return blocks


def rank(X, tol=None) -> int:
    """Numerical rank with threshold ``max(shape) * eps * sigma_max`` by default."""
    if X.size == 0:
        return 0
    s = np.linalg.svd(X, compute_uv=False)
    if tol is None:
        tol = max(X.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    return int(np.sum(s > tol))


def _reachability(A, B):
    n = A.shape[0]
    blocks, X = [], B
    for _ in range(n):
        blocks.append(X)
        X = A @ X
    return np.hstack(blocks)


def check_assumptions(plant: PeriodicStateSpace, controller: PeriodicStateSpace,
                      rank_tol=None) -> AssumptionReport:
    """Evaluate the four structural assumptions without raising."""
    _check_dims(plant, controller)
    M = plant.period
    notes = []
    square = plant.m_in == plant.m_out
    p_sp = all(np.all(D == 0) for D in plant.D)
    c_sp = all(np.all(D == 0) for D in controller.D)
    path = controller_path_blocks(controller, 1)
    dets, conds = [], []
    for P in path:
        if P.shape[0] == P.shape[1]:
            dets.append(float(np.linalg.det(P)))
            conds.append(float(np.linalg.cond(P)) if np.any(P) else np.inf)
        else:
            dets.append(np.nan)
            conds.append(np.inf)
    # the closed loop is formed without the feedthrough terms; those are reported above
    plant0 = PeriodicStateSpace(plant.A, plant.B, plant.C)
    ctrl0 = PeriodicStateSpace(controller.A, controller.B, controller.C)
    if square:
        acl = build_augmented(plant0, ctrl0)
        radius = float(np.max(np.abs(np.linalg.eigvals(monodromy(acl.sys)))))
        sr = cycled_closed_loop(acl)
        R = _reachability(sr.A, sr.B)
        O = _reachability(sr.A.T, sr.C.T).T
        r_rank, o_rank = rank(R, rank_tol), rank(O, rank_tol)
        order = sr.n
        tol_used = rank_tol if rank_tol is not None else max(R.shape) * np.finfo(float).eps
        if STABILITY_WARN_RADIUS < radius < 1.0:
            msg = f"closed loop is nearly marginal (spectral radius {radius:.6f})"
            notes.append(msg)
            warnings.warn(msg, StabilityMarginWarning, stacklevel=2)
    else:
        radius, r_rank, o_rank, order, tol_used = np.nan, 0, 0, M * (plant.n + controller.n), 0.0
        notes.append("plant is not square; closed loop not formed")
    return AssumptionReport(square, p_sp, c_sp, path, dets, conds, radius,
                            r_rank, o_rank, order, float(tol_used), notes)


def require_assumptions(report: AssumptionReport, which=(1, 2, 3)):
    """Raise :class:`AssumptionViolation` for the first failing assumption in ``which``."""
    if 1 in which and not report.assumption1:
        raise AssumptionViolation(1, "plant must be square and strictly proper")
    if 2 in which and not report.assumption2:
        bad = [k for k, c in enumerate(report.controller_path_cond)
               if not (np.isfinite(c) and c < 1.0 / np.finfo(float).eps)]
        phase = bad[0] if bad else None
        raise AssumptionViolation(
            2, "controller must have zero feedthrough and nonsingular C_c,k B_c,k-1", phase)
    if 3 in which and not report.assumption3:
        raise AssumptionViolation(
            3, f"closed loop is not stable (spectral radius {report.closed_loop_radius:.4f})")
    if 4 in which and not report.assumption4:
        raise AssumptionViolation(4, "cycled closed loop is not minimal")
