"""Reading and writing signals, models, datasets and run outputs.

Signals are CSV files with a ``t`` column followed by one column per
channel. Models are JSON documents holding nested lists; floats are
written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import LtiStateSpace, PeriodicStateSpace, SignalRecord
from .errors import DataFileError
from .simulator import ExperimentDataset


def _open(path, mode):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise DataFileError(f"cannot open {path}: {exc.strerror or exc}") from exc


def _mat(a):
    return [[float(x) for x in row] for row in np.atleast_2d(a)]


def save_signal_csv(path, rec: SignalRecord):
    with _open(path, "w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", *rec.labels])
        for k, row in enumerate(rec.samples):
            w.writerow([k, *(repr(float(x)) for x in row)])


def load_signal_csv(path) -> SignalRecord:
    with _open(path, "r") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:1] != ["t"] or len(rows[0]) < 2:
        raise DataFileError(f"{path}: expected a header 't,<channel>,...'")
    try:
        data = np.array([[float(x) for x in r[1:]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DataFileError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(rows[0]) - 1:
        raise DataFileError(f"{path}: ragged rows")
    return SignalRecord(data, tuple(rows[0][1:]))


def periodic_to_dict(sys: PeriodicStateSpace) -> dict:
    return {"type": "periodic", "period": sys.period,
            **{k: [_mat(m) for m in getattr(sys, k)] for k in "ABCD"}}


def periodic_from_dict(d: dict) -> PeriodicStateSpace:
    try:
        mats = {k: [np.array(m, dtype=float) for m in d[k]] for k in "ABC"}
        D = [np.array(m, dtype=float) for m in d["D"]] if d.get("D") is not None else None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFileError(f"malformed periodic model: {exc}") from exc
    return PeriodicStateSpace(mats["A"], mats["B"], mats["C"], D)


def lti_to_dict(sys: LtiStateSpace) -> dict:
    return {"type": "lti", "n": sys.n, "m_in": sys.m_in, "m_out": sys.m_out,
            **{k: _mat(getattr(sys, k)) for k in "ABCD"}}


def lti_from_dict(d: dict) -> LtiStateSpace:
    try:
        n, m, p = int(d["n"]), int(d["m_in"]), int(d["m_out"])
        shapes = {"A": (n, n), "B": (n, m), "C": (p, n), "D": (p, m)}
        mats = {k: np.array(d[k], dtype=float).reshape(shape) for k, shape in shapes.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFileError(f"malformed LTI model: {exc}") from exc
    return LtiStateSpace(**mats)


def write_json(path, obj):
    with _open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path) -> dict:
    with _open(path, "r") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise DataFileError(f"{path}: invalid JSON ({exc})") from exc


def save_periodic(path, sys: PeriodicStateSpace):
    write_json(path, periodic_to_dict(sys))


def load_periodic(path) -> PeriodicStateSpace:
    return periodic_from_dict(read_json(path))


def save_lti(path, sys: LtiStateSpace):
    write_json(path, lti_to_dict(sys))


def load_lti(path) -> LtiStateSpace:
    return lti_from_dict(read_json(path))


def save_dataset(directory, ds: ExperimentDataset):
    """Write ``r.csv``, ``y.csv``, ``u.csv`` and ``metadata.json`` into ``directory``."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataFileError(f"cannot create {d}: {exc}") from exc
    for name in ("r", "y", "u"):
        save_signal_csv(d / f"{name}.csv", getattr(ds, name))
    meta = dict(ds.metadata)
    meta.update(period=ds.period, phase_origin=ds.phase_origin, N=ds.N)
    write_json(d / "metadata.json", meta)


def load_dataset(directory) -> ExperimentDataset:
    d = Path(directory)
    if not d.is_dir():
        raise DataFileError(f"dataset directory {d} does not exist")
    meta = read_json(d / "metadata.json")
    if "period" not in meta:
        raise DataFileError(f"{d / 'metadata.json'}: missing 'period'")
    r, y, u = (load_signal_csv(d / f"{n}.csv") for n in ("r", "y", "u"))
    return ExperimentDataset(r, y, u, int(meta["period"]), int(meta.get("phase_origin", 0)), meta)
