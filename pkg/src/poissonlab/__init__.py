"""poissonlab: Poisson point processes driven by measure-preserving maps.

Exact lazy samplers for the Poisson process on the half-line and line, the
point-wise suspension of a measure-preserving transformation, the marked
product dynamics with its gap-event factor maps, the leftmost-return
transformation, and a registry of seeded statistical experiments checking
the exact formulas these constructions satisfy.
"""

from .dynamics import (
    MarkedConfiguration,
    OrbitState,
    in_X0,
    induced_step,
    kappa,
    leftmost_guarantee,
    leftmost_map,
    pi0,
    pi0_inv,
    sample_mu0,
    suspend,
    union_mark,
    z2_invariant_event,
)
from .experiments import (
    BirkhoffRun,
    ExperimentReport,
    birkhoff_average,
    experiment_names,
    run_experiment,
    verify_conditional_identity,
)
from .point_process import (
    Configuration,
    CylinderEvent,
    Window,
    config_from_json,
    config_to_json,
    count,
    cylinder_probability,
    extend,
    leftmost,
    sample,
    sample_conditioned,
    sample_hat,
    sample_tilde,
)
from .stats import TestResult, chi_square_counts, ks_test
from .streams import StreamKey
from .transforms import (
    Kind,
    PreimageBranch,
    Side,
    Transform,
    apply,
    apply_iter,
    boole_signed,
    boole_unsigned,
    preimages,
    random_walk,
    translation,
    unit_preimage_sum_residual,
    z2_translation,
)

__version__ = "0.1.0"
