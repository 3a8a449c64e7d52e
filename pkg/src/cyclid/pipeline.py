"""End-to-end closed-loop identification run.

Steps (each logged, and attached as ``exc.stage`` to any error raised):

1. collect closed-loop data ``r, y, u``
2. cycle the signals and stack ``z = [y; u]``
3. subspace identification with order ``M (n_p + n_c)`` and zero feedthrough
4. split the output matrix into ``C_y`` and ``C_u``
5. check and invert ``C_u B``
6. extract the cycled plant
7. reduce to order ``M n_p``
8. build the recovery transform and cast into cyclic form
9. read off the periodic matrices
"""
from __future__ import annotations

import logging
import time
import warnings
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io as cio
from .closed_loop import SharedARealization
from .core import PeriodicStateSpace, cycle_signal, stack_cycled
from .errors import CyclidError, DataFileError
from .extraction import ExtractedPlant, controller_path_inverse, extract_plant_general
from .metrics import H_MAX, VALIDATION_STEPS, ValidationReport, validate_pipeline
from .presets import get_preset
from .recovery import (RecoveredPlant, RecoveryConfig, Reduction, cast_to_cyclic, read_periodic,
                       reduce_to_plant_order)
from .simulator import ExperimentDataset, NoiseConfig, generate_reference, run_closed_loop_experiment
from .subspace import IdentificationResult, SubspaceConfig, identify_cycled_closed_loop

log = logging.getLogger(__name__)

NOISE_SEED_OFFSET = 1_000_000
VALIDATION_SEED_OFFSET = 2_000_000

STEPS = {
    1: "collect closed-loop data",
    2: "construct cycled signals",
    3: "subspace identification",
    4: "split output matrix",
    5: "invert controller path",
    6: "extract cycled plant",
    7: "reduce to plant order",
    8: "recovery transform",
    9: "read off periodic matrices",
}


@dataclass
class PipelineConfig:
    """Everything needed to reproduce one run.

    ``plant`` is the true plant (used for simulation and validation only);
    ``controller`` is the known controller realization. Setting ``preset``
    fills unset fields from the named example. ``structure_tol`` defaults
    to ``1e-6`` for noise-free runs and ``1e-2`` otherwise.
    """

    preset: str = None
    plant: PeriodicStateSpace = None
    controller: PeriodicStateSpace = None
    n_p: int = None
    n_c: int = None
    N: int = None
    snr_db: float = None
    seed: int = 0
    relative_degree: int = 1
    horizon: int = None
    min_horizon: int = 10
    auto_order: bool = False
    order_gap_factor: float = 3.0
    reduction: str = "era"
    markov_depth: int = None
    gap_factor: float = 1e3
    structure_tol: float = None
    zero_feedthrough: str = "after_reduction"
    f_seed: int = 0
    h_max: int = H_MAX
    validation_steps: int = VALIDATION_STEPS
    out: str = None

    def resolved(self) -> "PipelineConfig":
        """Copy with preset values and derived defaults filled in."""
        cfg = replace(self)
        if cfg.preset is not None:
            p = get_preset(cfg.preset)
            cfg.plant = cfg.plant or p.plant
            cfg.controller = cfg.controller or p.controller
            cfg.N = cfg.N or p.N
            cfg.snr_db = p.snr_db if cfg.snr_db is None else cfg.snr_db
        if cfg.n_p is None and cfg.plant is not None:
            cfg.n_p = cfg.plant.n
        if cfg.n_c is None and cfg.controller is not None:
            cfg.n_c = cfg.controller.n
        if cfg.snr_db is None:
            cfg.snr_db = float("inf")
        if cfg.structure_tol is None:
            cfg.structure_tol = 1e-6 if not np.isfinite(cfg.snr_db) else 1e-2
        return cfg

    @property
    def period(self) -> int:
        for s in (self.controller, self.plant):
            if s is not None:
                return s.period
        raise ValueError("period unknown: supply a plant or controller")

    def subspace_config(self, M) -> SubspaceConfig:
        return SubspaceConfig(M * (self.n_p + self.n_c), horizon=self.horizon,
                              min_horizon=self.min_horizon, gap_factor=self.order_gap_factor,
                              auto_order=self.auto_order)

    def recovery_config(self, M) -> RecoveryConfig:
        return RecoveryConfig(self.n_p, M, method=self.reduction, markov_depth=self.markov_depth,
                              gap_factor=self.gap_factor, structure_tol=self.structure_tol,
                              zero_feedthrough=self.zero_feedthrough, f_seed=self.f_seed)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("plant", "controller")}
        for k in ("plant", "controller"):
            s = getattr(self, k)
            d[k] = None if s is None else cio.periodic_to_dict(s)
        if d["snr_db"] is not None and not np.isfinite(d["snr_db"]):
            d["snr_db"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DataFileError(f"unknown configuration keys: {sorted(unknown)}")
        for k in ("plant", "controller"):
            if isinstance(d.get(k), dict):
                d[k] = cio.periodic_from_dict(d[k])
        if isinstance(d.get("snr_db"), str):
            d["snr_db"] = float(d["snr_db"])
        return cls(**d)


def load_config(path) -> PipelineConfig:
    """Read a JSON configuration; ``plant``/``controller`` may be inline or file paths."""
    d = cio.read_json(path)
    base = Path(path).parent
    for k in ("plant", "controller"):
        if isinstance(d.get(k), str):
            d[k] = cio.read_json(base / d[k])
    return PipelineConfig.from_dict(d)


@dataclass
class StageRecord:
    step: int
    name: str
    seconds: float
    ok: bool = True


@dataclass
class PipelineResult:
    config: PipelineConfig
    dataset: ExperimentDataset
    identified: IdentificationResult = None
    extracted: ExtractedPlant = None
    reduction: Reduction = None
    recovered: RecoveredPlant = None
    report: ValidationReport = None
    stages: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


@contextmanager
def _stage(step, stages):
    name = STEPS[step]
    log.info("step %d: %s", step, name)
    t0 = time.perf_counter()
    try:
        yield
    except CyclidError as exc:
        stages.append(StageRecord(step, name, time.perf_counter() - t0, False))
        exc.stage = f"step {step} ({name})"
        log.info("step %d (%s) failed", step, name)
        raise
    stages.append(StageRecord(step, name, time.perf_counter() - t0))


def collect_data(cfg: PipelineConfig, stages=None) -> ExperimentDataset:
    """Step 1: simulate the closed loop with the configured noise."""
    cfg = cfg.resolved()
    stages = [] if stages is None else stages
    if cfg.plant is None or cfg.controller is None or cfg.N is None:
        raise ValueError("simulation needs a plant, a controller and N")
    with _stage(1, stages):
        r = generate_reference(cfg.N, cfg.plant.m_out, cfg.seed)
        noise = NoiseConfig(cfg.snr_db, cfg.seed + NOISE_SEED_OFFSET)
        meta = {"preset": cfg.preset, "seed": cfg.seed, "noise_seed": noise.seed}
        ds = run_closed_loop_experiment(cfg.plant, cfg.controller, r, noise, metadata=meta)
    return ds


def identify(dataset: ExperimentDataset, cfg: PipelineConfig, stages=None) -> PipelineResult:
    """Steps 2-9 on a recorded dataset, followed by validation when the truth is known."""
    cfg = cfg.resolved()
    if cfg.n_p is None or cfg.n_c is None:
        raise ValueError("identification needs the plant order n_p and the controller order n_c")
    stages = [] if stages is None else stages
    M = dataset.period
    res = PipelineResult(cfg, dataset, stages=stages)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with _stage(2, stages):
            r = cycle_signal(dataset.r, M, dataset.phase_origin)
            z = stack_cycled(cycle_signal(dataset.y, M, dataset.phase_origin),
                             cycle_signal(dataset.u, M, dataset.phase_origin))
        with _stage(3, stages):
            ident = identify_cycled_closed_loop(r, z, cfg.subspace_config(M))
        with _stage(4, stages):
            n_y = M * dataset.y.q
            sr = ident.realization
            if not isinstance(sr, SharedARealization) or sr.C_y.shape[0] != n_y:
                sr = SharedARealization.from_lti(sr.as_lti(), n_y)
            res.identified = ident
        with _stage(5, stages):
            path = controller_path_inverse(sr, cfg.relative_degree)
        with _stage(6, stages):
            res.extracted = extract_plant_general(sr, cfg.relative_degree, path=path)
        rcfg = cfg.recovery_config(M)
        with _stage(7, stages):
            res.reduction = reduce_to_plant_order(res.extracted, rcfg)
        with _stage(8, stages):
            cyc, F, cond, rel = cast_to_cyclic(res.reduction.realization, rcfg)
        with _stage(9, stages):
            per, dropped = read_periodic(cyc, M)
            res.recovered = RecoveredPlant(cyc, per, rel, cond, F,
                                           res.reduction.discarded_feedthrough + dropped)
        if cfg.plant is not None:
            res.report = validate_pipeline(
                cfg.plant, res.recovered, dataset, ident, res.extracted, res.reduction,
                cfg.controller, cfg.h_max, cfg.validation_steps,
                cfg.seed + VALIDATION_SEED_OFFSET)
    res.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    for msg in res.warnings:
        log.warning(msg)
    if res.report is not None:
        res.report.warnings = list(res.warnings)
    return res


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Simulate (step 1) and identify (steps 2-9)."""
    stages = []
    ds = collect_data(cfg, stages)
    return identify(ds, cfg, stages)


def save_results(directory, res: PipelineResult):
    """Write models, report and plot-ready CSV tables.

    Everything except ``run.json`` (stage timings) is deterministic for a
    fixed configuration and seed.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataFileError(f"cannot create {d}: {exc}") from exc
    cio.save_periodic(d / "recovered_plant.json", res.recovered.periodic)
    cio.save_lti(d / "cyclic_realization.json", res.recovered.cyclic)
    cio.save_lti(d / "identified_closed_loop.json", res.identified.realization.as_lti())
    cio.save_lti(d / "extracted_plant.json", res.extracted.realization)
    cio.write_json(d / "config.json", res.config.to_dict())
    if res.report is not None:
        cio.write_json(d / "report.json", res.report.to_dict())
        (d / "markov_error.csv").write_text(res.report.markov_csv())
        (d / "singular_spectrum.csv").write_text(res.report.spectrum_csv())
    else:
        from .metrics import _csv
        hv = res.reduction.hankel_values
        sv = res.identified.singular_values
        n = max(len(hv), len(sv))
        rows = ((i + 1, hv[i] if i < len(hv) else "", sv[i] if i < len(sv) else "") for i in range(n))
        (d / "singular_spectrum.csv").write_text(_csv(["index", "hankel_sv", "subspace_sv"], rows))
    cio.write_json(d / "run.json", {
        "stages": [asdict(s) for s in res.stages],
        "warnings": res.warnings,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    })
