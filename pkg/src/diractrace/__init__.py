"""Numerical evaluation of the geometric side of the Dirac pretrace
identity on explicitly presented free Fuchsian groups with spin
structures, together with the transform machinery and the quantitative
bound suite that certify it.
"""

from .errors import (
    BudgetExceededError,
    DiracTraceError,
    DomainError,
    NumericError,
    ValidationError,
)
from .groups import (
    BallEnumeration,
    EnumeratedElement,
    GroupPresentation,
    counting_bound,
    enumerate_ball,
    fundamental_domain_grid,
    systole_estimate,
)
from .halfplane import (
    HPoint,
    MoebiusElement,
    apply_moebius,
    area_of_signature,
    classify,
    compose,
    distance,
    parallel_transport,
    translation_length,
)
from .spin import SpinAssignment, enumerate_spin_assignments, epsilon, is_nontrivial
from .traceterms import (
    SurfaceModel,
    TraceReport,
    TraceSettings,
    counting_upper_bound,
    cusp_term,
    geometric_term,
    in_good_set,
    integral_term,
    main_term,
    multiplicity_bound,
    parameter_schedule,
    pinched_low_eigenvalue_count,
    remainder_window,
    smoothed_density,
    smoothing_edge_offset,
    stability_probes,
    weyl_leading,
)
from .transforms import (
    ScalarFunction,
    abel_forward,
    abel_inverse,
    kernel_from_transform,
    smooth_bump,
    transform_from_profile,
    window_kernel,
)
from .windows import (
    WindowParams,
    even_window,
    smoothed_indicator,
    tail_envelope,
    window_transform,
    window_transform_deriv,
)

__version__ = "0.1.0"
