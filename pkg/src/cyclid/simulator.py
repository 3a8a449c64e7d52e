"""Closed-loop experiments: reference excitation, noise injection, datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closed_loop import build_augmented, check_assumptions, require_assumptions
from .core import PeriodicStateSpace, SignalRecord
from .errors import DimensionMismatch, DivergenceDetected

DIVERGENCE_BOUND = 1e9


@dataclass(frozen=True)
class NoiseConfig:
    """Measurement (and optional process) noise settings.

    ``snr_db = inf`` means noise-free. The measurement noise on output
    channel ``i`` has variance ``P_i / 10^(snr_db/10)`` where ``P_i`` is the
    mean power of that channel in a noise-free run with the same reference.
    Process noise is off unless ``process_std > 0``; it enters through
    ``Bw`` (identity by default, so ``m_w = n_p``).
    """

    snr_db: float = float("inf")
    seed: int = 0
    process_std: float = 0.0
    Bw: tuple = None

    @property
    def noise_free(self) -> bool:
        return not np.isfinite(self.snr_db) and self.process_std == 0.0


@dataclass(frozen=True)
class ExperimentDataset:
    r: SignalRecord
    y: SignalRecord
    u: SignalRecord
    period: int
    phase_origin: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.r.N == self.y.N == self.u.N):
            raise DimensionMismatch("r, y, u must have equal length")

    @property
    def N(self) -> int:
        return self.r.N


def generate_reference(N: int, dim: int = 1, seed: int = 0) -> SignalRecord:
    """Zero-mean, unit-variance white Gaussian reference."""
    if N < 1:
        raise ValueError("N must be positive")
    rng = np.random.default_rng(seed)
    return SignalRecord(rng.standard_normal((N, dim)),
                        tuple(f"r{i}" for i in range(dim)))


def _simulate_loop(plant, controller, r, x0p, x0c, v=None, w=None, Bw=None, bound=DIVERGENCE_BOUND):
    """Run plant and controller as separate recursions with ``e = r - y``."""
    M = plant.period
    N = r.shape[0]
    xp = np.zeros(plant.n) if x0p is None else np.asarray(x0p, float).ravel().copy()
    xc = np.zeros(controller.n) if x0c is None else np.asarray(x0c, float).ravel().copy()
    Y = np.empty((N, plant.m_out))
    U = np.empty((N, plant.m_in))
    for k in range(N):
        p = k % M
        Ap, Bp, Cp, _ = plant.at(p)
        Ac, Bc, Cc, _ = controller.at(p)
        y = Cp @ xp
        if v is not None:
            y = y + v[k]
        u = Cc @ xc
        e = r[k] - y
        Y[k], U[k] = y, u
        xp = Ap @ xp + Bp @ u
        if w is not None:
            xp = xp + Bw[p] @ w[k]
        xc = Ac @ xc + Bc @ e
        if not (np.all(np.abs(xp) < bound) and np.all(np.abs(xc) < bound)):
            raise DivergenceDetected(f"state magnitude exceeded {bound:g} at k={k}")
    return Y, U


def run_closed_loop_experiment(plant: PeriodicStateSpace, controller: PeriodicStateSpace,
                               r, noise: NoiseConfig = NoiseConfig(), x0=None,
                               bound: float = DIVERGENCE_BOUND, check: bool = True,
                               metadata=None) -> ExperimentDataset:
    """Simulate the feedback loop driven by ``r`` and record ``r, y, u``.

    ``x0`` is the initial augmented state ``[x_p; x_c]`` (zero by default).
    With ``check`` set, assumptions 1-3 are verified first.
    """
    if check:
        require_assumptions(check_assumptions(plant, controller), (1, 2, 3))
    else:
        build_augmented(plant, controller)
    R = r.samples if isinstance(r, SignalRecord) else np.atleast_2d(np.asarray(r, float).T).T
    if R.shape[1] != plant.m_out:
        raise DimensionMismatch(f"reference has {R.shape[1]} channels, plant has {plant.m_out} outputs")
    x0p = x0c = None
    if x0 is not None:
        x0 = np.asarray(x0, float).ravel()
        x0p, x0c = x0[:plant.n], x0[plant.n:]
    N, l = R.shape
    rng = np.random.default_rng(noise.seed)
    Y, U = _simulate_loop(plant, controller, R, x0p, x0c, bound=bound)
    v = w = Bw = None
    noise_std = np.zeros(l)
    if np.isfinite(noise.snr_db):
        power = np.mean(Y ** 2, axis=0)
        noise_std = np.sqrt(power / 10.0 ** (noise.snr_db / 10.0))
        v = rng.standard_normal((N, l)) * noise_std
    if noise.process_std > 0:
        Bw = noise.Bw if noise.Bw is not None else [np.eye(plant.n)] * plant.period
        Bw = [np.atleast_2d(np.asarray(b, float)) for b in Bw]
        w = rng.standard_normal((N, Bw[0].shape[1])) * noise.process_std
    if v is not None or w is not None:
        Y, U = _simulate_loop(plant, controller, R, x0p, x0c, v=v, w=w, Bw=Bw, bound=bound)
    meta = {"N": N, "M": plant.period, "snr_db": noise.snr_db, "seed": noise.seed,
            "process_std": noise.process_std, "noise_std": noise_std.tolist()}
    meta.update(metadata or {})
    return ExperimentDataset(
        SignalRecord(R, tuple(f"r{i}" for i in range(l))),
        SignalRecord(Y, tuple(f"y{i}" for i in range(l))),
        SignalRecord(U, tuple(f"u{i}" for i in range(plant.m_in))),
        plant.period, 0, meta)
