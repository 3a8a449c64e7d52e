"""Periodic and LTI state-space models, cyclic reformulation and Markov parameters.

A periodic system with period ``M``::

    x(k+1) = A_k x(k) + B_k u(k)
    y(k)   = C_k x(k) + D_k u(k),          A_k = A_{k mod M}, ...

is embedded into an LTI system of ``M`` times the dimensions whose state,
input and output are *cycled*: at time ``k`` only the block at position
``k mod M`` is nonzero and it carries the original vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, SparsityViolation


def _as_matrix(a, name="matrix"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LtiStateSpace:
    """Discrete-time LTI realization ``(A, B, C, D)``.

    ``D`` defaults to zeros of the right shape.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        A, B, C = _as_matrix(self.A, "A"), _as_matrix(self.B, "B"), _as_matrix(self.C, "C")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if B.shape[0] != n or C.shape[1] != n:
            raise DimensionMismatch(
                f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
        D = np.zeros((C.shape[0], B.shape[1])) if self.D is None else _as_matrix(self.D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(f"D has shape {D.shape}, expected {(C.shape[0], B.shape[1])}")
        for name, val in zip("ABCD", (A, B, C, D)):
            object.__setattr__(self, name, _frozen(val))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m_in(self) -> int:
        return self.B.shape[1]

    @property
    def m_out(self) -> int:
        return self.C.shape[0]

    def similarity(self, T) -> "LtiStateSpace":
        """Return ``(T^-1 A T, T^-1 B, C T, D)``."""
        T = _as_matrix(T, "T")
        Ti = np.linalg.inv(T)
        return LtiStateSpace(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D)

    def spectral_radius(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class PeriodicStateSpace:
    """``M``-periodic realization ``{A_k, B_k, C_k, D_k}``, ``k = 0..M-1``.

    Indexing with any integer ``k`` is taken modulo the period.
    """

    A: tuple
    B: tuple
    C: tuple
    D: tuple = None

    def __post_init__(self):
        A = [_as_matrix(a, "A_k") for a in self.A]
        M = len(A)
        if M == 0:
            raise DimensionMismatch("period must be at least 1")
        B = [_as_matrix(b, "B_k") for b in self.B]
        C = [_as_matrix(c, "C_k") for c in self.C]
        if len(B) != M or len(C) != M:
            raise DimensionMismatch("A, B, C must have one matrix per phase")
        n = A[0].shape[0]
        m_in, m_out = B[0].shape[1], C[0].shape[0]
        if self.D is None:
            D = [np.zeros((m_out, m_in)) for _ in range(M)]
        else:
            D = [_as_matrix(d, "D_k") for d in self.D]
            if len(D) != M:
                raise DimensionMismatch("D must have one matrix per phase")
        for k in range(M):
            if (A[k].shape != (n, n) or B[k].shape != (n, m_in)
                    or C[k].shape != (m_out, n) or D[k].shape != (m_out, m_in)):
                raise DimensionMismatch(f"inconsistent dimensions at phase k={k}")
        for name, val in zip("ABCD", (A, B, C, D)):
            object.__setattr__(self, name, tuple(_frozen(v) for v in val))

    @property
    def period(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def m_in(self) -> int:
        return self.B[0].shape[1]

    @property
    def m_out(self) -> int:
        return self.C[0].shape[0]

    def at(self, k: int):
        """Matrices ``(A_k, B_k, C_k, D_k)`` with ``k`` reduced mod ``M``."""
        k %= self.period
        return self.A[k], self.B[k], self.C[k], self.D[k]

    @classmethod
    def constant(cls, A, B, C, D=None, period=1) -> "PeriodicStateSpace":
        """Time-invariant system viewed as ``period``-periodic."""
        A, B, C = _as_matrix(A), _as_matrix(B), _as_matrix(C)
        D = np.zeros((C.shape[0], B.shape[1])) if D is None else _as_matrix(D)
        return cls([A] * period, [B] * period, [C] * period, [D] * period)


@dataclass(frozen=True)
class SignalRecord:
    """Sampled signal, one row per time step."""

    samples: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise DimensionMismatch(f"samples must be N x q with N >= 1, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal contains non-finite entries")
        labels = self.labels
        if labels is None:
            labels = tuple(f"ch{i}" for i in range(s.shape[1]))
        labels = tuple(labels)
        if len(labels) != s.shape[1]:
            raise DimensionMismatch("one label per channel required")
        object.__setattr__(self, "samples", _frozen(s))
        object.__setattr__(self, "labels", labels)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def q(self) -> int:
        return self.samples.shape[1]

    def __len__(self):
        return self.N


@dataclass(frozen=True)
class CycledSignal:
    """Cycled (block-sparse) signal.

    Columns are organised in groups; group ``g`` occupies ``period * groups[g]``
    columns and at time ``k`` only its block ``(k - phase_origin) mod period``
    may be nonzero. A plain cycled signal has a single group; the stacked
    closed-loop output ``[y_cyc; u_cyc]`` has two.
    """

    period: int
    samples: np.ndarray
    groups: tuple
    phase_origin: int = 0
    tol: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        groups = tuple(int(g) for g in self.groups)
        if s.ndim != 2 or s.shape[1] != self.period * sum(groups):
            raise DimensionMismatch(
                f"samples shape {s.shape} does not match period {self.period} and groups {groups}")
        object.__setattr__(self, "samples", _frozen(s))
        object.__setattr__(self, "groups", groups)
        resid = _off_pattern_energy(s, self.period, groups, self.phase_origin)
        scale = max(np.linalg.norm(s), 1.0)
        if resid > self.tol * scale:
            raise SparsityViolation(
                f"off-pattern energy {resid:.3e} exceeds tolerance {self.tol:g}")

    @property
    def base_dim(self) -> int:
        return sum(self.groups)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    def group(self, g: int) -> "CycledSignal":
        """Sub-signal made of column group ``g`` only."""
        start = self.period * sum(self.groups[:g])
        cols = slice(start, start + self.period * self.groups[g])
        return CycledSignal(self.period, self.samples[:, cols], (self.groups[g],),
                            self.phase_origin, self.tol)


def _active_mask(N, period, q, phase_origin):
    pos = (np.arange(N) - phase_origin) % period
    mask = np.zeros((N, period * q), dtype=bool)
    for p in range(period):
        mask[pos == p, p * q:(p + 1) * q] = True
    return mask


def _off_pattern_energy(s, period, groups, phase_origin):
    total = 0.0
    start = 0
    for q in groups:
        block = s[:, start:start + period * q]
        mask = _active_mask(s.shape[0], period, q, phase_origin)
        total += float(np.sum(block[~mask] ** 2))
        start += period * q
    return np.sqrt(total)


# --------------------------------------------------------------------------
# Cyclic reformulation
# --------------------------------------------------------------------------


def monodromy(sys: PeriodicStateSpace) -> np.ndarray:
    """Monodromy matrix ``A_{M-1} ... A_1 A_0``."""
    Phi = np.eye(sys.n)
    for A in sys.A:
        Phi = A @ Phi
    return Phi


def _cyclic_blocks(mats, M):
    r, c = mats[0].shape
    out = np.zeros((M * r, M * c))
    for k in range(M):
        i = (k + 1) % M
        out[i * r:(i + 1) * r, k * c:(k + 1) * c] = mats[k]
    return out


def _block_diag(mats):
    r, c = mats[0].shape
    M = len(mats)
    out = np.zeros((M * r, M * c))
    for k, m in enumerate(mats):
        out[k * r:(k + 1) * r, k * c:(k + 1) * c] = m
    return out


def cyclic_reformulate(sys: PeriodicStateSpace) -> LtiStateSpace:
    """Cycled LTI realization of a periodic system.

    ``A`` and ``B`` carry ``A_k``/``B_k`` in block ``(k+1 mod M, k)``;
    ``C`` and ``D`` are block diagonal.
    """
    M = sys.period
    return LtiStateSpace(_cyclic_blocks(sys.A, M), _cyclic_blocks(sys.B, M),
                         _block_diag(sys.C), _block_diag(sys.D))


def decyclic(sys: LtiStateSpace, M: int) -> PeriodicStateSpace:
    """Read periodic matrices off the cyclic block slots of ``sys``.

    Entries outside the cyclic pattern are ignored; use
    :func:`cyclic_structure_residual` to measure them.
    """
    n, mi, mo = sys.n // M, sys.m_in // M, sys.m_out // M
    if n * M != sys.n or mi * M != sys.m_in or mo * M != sys.m_out:
        raise DimensionMismatch(f"dimensions of sys are not multiples of M={M}")
    A, B, C, D = [], [], [], []
    for k in range(M):
        i = (k + 1) % M
        A.append(sys.A[i * n:(i + 1) * n, k * n:(k + 1) * n])
        B.append(sys.B[i * n:(i + 1) * n, k * mi:(k + 1) * mi])
        C.append(sys.C[k * mo:(k + 1) * mo, k * n:(k + 1) * n])
        D.append(sys.D[k * mo:(k + 1) * mo, k * mi:(k + 1) * mi])
    return PeriodicStateSpace(A, B, C, D)


def cyclic_structure_residual(sys: LtiStateSpace, M: int):
    """Off-pattern and on-pattern Frobenius mass of a would-be cyclic realization.

    Returns ``(off, on)`` where ``off`` is the norm of all entries outside the
    cyclic/diagonal slots and ``on`` the norm of the entries inside them.
    """
    recycled = cyclic_reformulate(decyclic(sys, M))
    off = on = 0.0
    for name in "ABCD":
        full, pat = getattr(sys, name), getattr(recycled, name)
        on += float(np.sum(pat ** 2))
        off += float(np.sum((full - pat) ** 2))
    return np.sqrt(off), np.sqrt(on)


def cycle_signal(sig, M: int, phase_origin: int = 0) -> CycledSignal:
    """Place sample ``k`` in block ``(k - phase_origin) mod M``."""
    s = sig.samples if isinstance(sig, SignalRecord) else np.atleast_2d(np.asarray(sig, float).T).T
    N, q = s.shape
    out = np.zeros((N, M * q))
    pos = (np.arange(N) - phase_origin) % M
    for p in range(M):
        rows = pos == p
        out[rows, p * q:(p + 1) * q] = s[rows]
    return CycledSignal(M, out, (q,), phase_origin)


def stack_cycled(*signals: CycledSignal) -> CycledSignal:
    """Stack individually cycled signals column-wise (e.g. ``[y_cyc, u_cyc]``)."""
    M = signals[0].period
    phase = signals[0].phase_origin
    if any(s.period != M or s.phase_origin != phase or s.N != signals[0].N for s in signals):
        raise DimensionMismatch("stacked signals must share period, phase and length")
    groups = sum((s.groups for s in signals), ())
    return CycledSignal(M, np.hstack([s.samples for s in signals]), groups, phase,
                        max(s.tol for s in signals))


def uncycle_signal(cs, tol: float = 0.0, labels=None, M: int = None, q: int = None,
                   phase_origin: int = 0) -> SignalRecord:
    """Inverse of :func:`cycle_signal`; stacked groups are concatenated.

    ``cs`` may also be a raw ``N x Mq`` array (then ``M`` and ``q`` are required).
    Raises :class:`SparsityViolation` if the energy outside the active blocks
    exceeds ``tol`` times the signal norm.
    """
    if not isinstance(cs, CycledSignal):
        s = np.asarray(cs, dtype=float)
        if M is None:
            raise ValueError("M is required for raw arrays")
        q = s.shape[1] // M if q is None else q
        groups = (q,) * (s.shape[1] // (M * q))
        cs = CycledSignal(M, s, groups, phase_origin, tol=np.inf)
    s, M = cs.samples, cs.period
    resid = _off_pattern_energy(s, M, cs.groups, cs.phase_origin)
    if resid > tol * max(np.linalg.norm(s), 1.0):
        raise SparsityViolation(
            f"off-pattern energy {resid:.3e} exceeds tolerance {tol:g}; check the phase origin")
    N = s.shape[0]
    pos = (np.arange(N) - cs.phase_origin) % M
    parts = []
    start = 0
    for q in cs.groups:
        block = s[:, start:start + M * q].reshape(N, M, q)
        parts.append(block[np.arange(N), pos, :])
        start += M * q
    return SignalRecord(np.hstack(parts), labels)


def block_shift_matrix(q: int, M: int) -> np.ndarray:
    """Block cyclic shift: block ``(i, i+1)`` and ``(M-1, 0)`` equal ``I_q``."""
    if q < 1 or M < 1:
        raise ValueError("q and M must be positive")
    return np.kron(np.roll(np.eye(M), 1, axis=1), np.eye(q))


# --------------------------------------------------------------------------
# Markov parameters
# --------------------------------------------------------------------------


def markov_parameters(sys: LtiStateSpace, h_max: int) -> list:
    """``[D, CB, CAB, ..., C A^(h_max-1) B]``."""
    if h_max < 0:
        raise ValueError("h_max must be nonnegative")
    out = [sys.D.copy()]
    AkB = sys.B
    for _ in range(h_max):
        out.append(sys.C @ AkB)
        AkB = sys.A @ AkB
    return out


def periodic_markov_block(sys: PeriodicStateSpace, k: int, h: int) -> np.ndarray:
    """``H_k^(h) = C_{k+h} A_{k+h-1} ... A_{k+1} B_k`` (``D_k`` for ``h = 0``)."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    if h == 0:
        return sys.at(k)[3].copy()
    X = sys.at(k)[1]
    for j in range(1, h):
        X = sys.at(k + j)[0] @ X
    return sys.at(k + h)[2] @ X


def cycled_markov_from_periodic(sys: PeriodicStateSpace, h: int) -> np.ndarray:
    """Cycled Markov parameter ``H(h)`` assembled from the periodic blocks.

    Inverts the shifted sparsity identity: ``H(h) = S^{-h} diag(H_k^(h))``.
    Independent of any cyclic realization, so usable as an oracle.
    """
    M = sys.period
    diag = _block_diag([periodic_markov_block(sys, k, h) for k in range(M)])
    S = block_shift_matrix(sys.m_out, M)
    return np.linalg.matrix_power(S.T, h) @ diag


@dataclass
class ShiftedSparsityReport:
    residuals: np.ndarray
    tol: float
    blocks: list = field(repr=False, default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.residuals <= self.tol))

    @property
    def failing_h(self) -> list:
        return [int(h) for h in np.flatnonzero(self.residuals > self.tol)]


def check_shifted_sparsity(sys: LtiStateSpace, M: int, q_out: int, h_max: int,
                           tol: float = 1e-10) -> ShiftedSparsityReport:
    """Check that ``S^h H(h)`` is block diagonal for ``h = 0..h_max``.

    The residual for each ``h`` is the Frobenius norm of the off-diagonal
    blocks; the diagonal blocks (``H_k^(h)``) are returned in ``blocks``.
    """
    if sys.m_out != M * q_out:
        raise DimensionMismatch(f"output dimension {sys.m_out} != M*q_out = {M * q_out}")
    q_in = sys.m_in // M
    S = block_shift_matrix(q_out, M)
    mask = np.kron(np.eye(M), np.ones((q_out, q_in))).astype(bool)
    residuals, blocks = [], []
    Sh = np.eye(M * q_out)
    for h, H in enumerate(markov_parameters(sys, h_max)):
        G = Sh @ H
        residuals.append(np.linalg.norm(G[~mask]))
        blocks.append([G[k * q_out:(k + 1) * q_out, k * q_in:(k + 1) * q_in] for k in range(M)])
        Sh = S @ Sh
    return ShiftedSparsityReport(np.array(residuals), tol, blocks)


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------


def _input_array(u, N=None):
    if isinstance(u, SignalRecord):
        return u.samples
    if isinstance(u, CycledSignal):
        return u.samples
    u = np.asarray(u, dtype=float)
    return u[:, None] if u.ndim == 1 else u


def simulate_lti(sys: LtiStateSpace, u, x0=None, return_states: bool = False):
    """Simulate ``x+ = Ax + Bu, y = Cx + Du`` from ``x0`` (zero by default).

    Returns the output :class:`SignalRecord`, and the ``N x n`` state
    trajectory when ``return_states`` is set.
    """
    U = _input_array(u)
    if U.shape[1] != sys.m_in:
        raise DimensionMismatch(f"input has {U.shape[1]} channels, system expects {sys.m_in}")
    N = U.shape[0]
    x = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.shape != (sys.n,):
        raise DimensionMismatch("x0 has wrong dimension")
    BU = U @ sys.B.T
    X = np.empty((N, sys.n))
    A = sys.A
    for k in range(N):
        X[k] = x
        x = A @ x + BU[k]
    Y = X @ sys.C.T + U @ sys.D.T
    y = SignalRecord(Y)
    return (y, X) if return_states else y


def simulate_lptv(sys: PeriodicStateSpace, u, x0=None, process_noise=None, Bw=None,
                  meas_noise=None, phase: int = 0, return_states: bool = False):
    """Simulate a periodic system; time ``k`` uses matrices of phase ``k + phase``.

    ``process_noise`` (``N x m_w``) enters through ``Bw`` (a list of ``M``
    matrices ``n x m_w``); ``meas_noise`` (``N x m_out``) is added to the output.
    """
    U = _input_array(u)
    if U.shape[1] != sys.m_in:
        raise DimensionMismatch(f"input has {U.shape[1]} channels, system expects {sys.m_in}")
    N, M = U.shape[0], sys.period
    x = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.shape != (sys.n,):
        raise DimensionMismatch("x0 has wrong dimension")
    W = None
    if process_noise is not None:
        W = _input_array(process_noise)
        if Bw is None:
            raise ValueError("Bw is required with process_noise")
        Bw = [np.atleast_2d(np.asarray(b, dtype=float)) for b in Bw]
    Y = np.empty((N, sys.m_out))
    X = np.empty((N, sys.n))
    for k in range(N):
        p = (k + phase) % M
        X[k] = x
        Y[k] = sys.C[p] @ x + sys.D[p] @ U[k]
        x_next = sys.A[p] @ x + sys.B[p] @ U[k]
        if W is not None:
            x_next = x_next + Bw[p] @ W[k]
        x = x_next
    if meas_noise is not None:
        Y = Y + _input_array(meas_noise)
    y = SignalRecord(Y)
    return (y, X) if return_states else y
