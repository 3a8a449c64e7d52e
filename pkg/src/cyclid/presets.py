"""Plants, controllers and experiment settings of the three reference examples.

``ex1``: stable SISO plant, time-invariant first-order controller.
``ex2``: open-loop unstable SISO plant, periodic first-order controller.
``ex3``: stable 2x2 MIMO plant with a second-order periodic controller.
The ex3 controller matrices are not published with the example; the ones
below were chosen to give a stable loop (spectral radius 0.865) with
well-conditioned ``C_c,k B_c,k-1`` (condition numbers 1.28, 1.48, 1.37).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PeriodicStateSpace


@dataclass(frozen=True)
class Preset:
    name: str
    plant: PeriodicStateSpace
    controller: PeriodicStateSpace
    N: int
    snr_db: float = 40.0
    seed: int = 0


def _siso_plant(a_rows, b_cols):
    A = [np.array([[0.0, 1.0], list(r)]) for r in a_rows]
    B = [np.array(b, dtype=float).reshape(2, 1) for b in b_cols]
    C = [np.array([[1.0, 0.0]])] * len(A)
    return PeriodicStateSpace(A, B, C)


def ex1_plant() -> PeriodicStateSpace:
    return _siso_plant([(0.5, 1.0), (0.9, -0.95), (1.0, 0.5)],
                       [(1.0, 2.0), (1.5, 2.0), (1.0, 0.5)])


def ex1_controller() -> PeriodicStateSpace:
    return PeriodicStateSpace.constant([[0.30]], [[0.80]], [[0.05]], period=3)


def ex2_plant() -> PeriodicStateSpace:
    return _siso_plant([(0.8, 1.2), (1.1, -0.5), (0.9, 0.8)],
                       [(1.0, 2.0), (1.5, 1.0), (1.0, 1.5)])


def ex2_controller() -> PeriodicStateSpace:
    return PeriodicStateSpace([[[0.20]], [[-0.50]], [[0.50]]],
                              [[[0.80]]] * 3, [[[0.30]]] * 3)


def ex3_plant() -> PeriodicStateSpace:
    A = [np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-0.3, -0.5, a33]])
         for a33 in (0.2, -0.1, 0.4)]
    B = [np.array([[1.0, 0.0], [0.5, 1.0], [0.0, 0.5]]),
         np.array([[1.0, 0.2], [0.3, 1.0], [0.1, 0.4]]),
         np.array([[0.8, 0.1], [0.6, 0.8], [0.0, 0.6]])]
    C = [np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])] * 3
    return PeriodicStateSpace(A, B, C)


def ex3_controller() -> PeriodicStateSpace:
    A = [np.array([[0.60, 0.050], [0.0, 0.48]]),
         np.array([[0.60, -0.050], [0.0, 0.48]]),
         np.array([[0.60, 0.025], [0.0, 0.48]])]
    B = [np.array([[1.0, 0.1], [0.0, 0.8]]),
         np.array([[1.0, 0.0], [0.0, 0.8]]),
         np.array([[1.0, -0.1], [0.0, 0.8]])]
    C = [np.array([[0.120, 0.0], [0.000, 0.12]]),
         np.array([[0.120, 0.0], [0.024, 0.12]]),
         np.array([[0.120, 0.0], [-0.024, 0.12]])]
    return PeriodicStateSpace(A, B, C)


PRESETS = {
    "ex1": lambda: Preset("ex1", ex1_plant(), ex1_controller(), N=3000),
    "ex2": lambda: Preset("ex2", ex2_plant(), ex2_controller(), N=5000),
    "ex3": lambda: Preset("ex3", ex3_plant(), ex3_controller(), N=9000),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
