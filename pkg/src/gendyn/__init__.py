"""Generalization dynamics of deep linear teacher-student networks."""

__version__ = "0.1.0"

from . import errors  # noqa: E402
from .dynamics import DynamicsParams, learning_curves, s_of_t, t_of_s, transition_time  # noqa: E402
from .rmt import (  # noqa: E402
    OverlapTriple,
    SpectrumParams,
    detection_threshold,
    mp_density,
    mp_quantile,
    mp_region_mean,
    overlap,
    sbar_of_shat,
    shat_of_sbar,
)
from .shrinkage import ShrinkageReport, estimate_noise_scale, shrink_denoise  # noqa: E402
from .simulator import (  # noqa: E402
    ErrorTrace,
    StudentState,
    TeacherSpec,
    TrainingSet,
    init_student,
    make_dataset,
    make_teacher,
    measure_errors,
    train_gd,
)
from .theory import (  # noqa: E402
    TheoryConfig,
    nongradient_optimal_error,
    optimal_stopping,
    rank1_closed_form,
    test_error_curve,
    theory_curves,
)
from .transfer import TransferPair, TransferResult, transfer_benefit_sim, transfer_benefit_theory  # noqa: E402
