"""Closed-loop identification of periodically time-varying plants via cyclic reformulation."""
from .closed_loop import (AssumptionReport, AugmentedClosedLoop, SharedARealization, build_augmented,
                          check_assumptions, cycled_closed_loop, require_assumptions)
from .core import (CycledSignal, LtiStateSpace, PeriodicStateSpace, SignalRecord, block_shift_matrix,
                   check_shifted_sparsity, cycle_signal, cycled_markov_from_periodic,
                   cyclic_reformulate, decyclic, markov_parameters, monodromy, simulate_lptv,
                   simulate_lti, stack_cycled, uncycle_signal)
from .errors import (AssumptionViolation, ConditioningWarning, CyclidError, DataFileError,
                     DegenerateSignal, DimensionMismatch, DivergenceDetected, GapNotFound,
                     OrderGapWarning, RankDeficientData, SingularControllerPath, SingularTransform,
                     SparsityViolation, StabilityMarginWarning, StructureResidualExceeded)
from .extraction import (ExtractedPlant, extract_plant, extract_plant_general,
                         verify_cascade_cancellation)
from .hankel import balanced_truncation, era, hankel_singular_values
from .metrics import ValidationReport, fit_percent, max_markov_error, validate_pipeline
from .pipeline import PipelineConfig, PipelineResult, identify, run_pipeline
from .presets import PRESETS, get_preset
from .recovery import RecoveredPlant, RecoveryConfig, recover_lptv, reduce_to_plant_order
from .simulator import (ExperimentDataset, NoiseConfig, generate_reference,
                        run_closed_loop_experiment)
from .subspace import SubspaceConfig, identify_cycled_closed_loop, singular_spectrum_report

__version__ = "0.1.0"

import logging as _logging

_logging.getLogger(__name__).addHandler(_logging.NullHandler())
