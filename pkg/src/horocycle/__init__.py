"""Horocycle Radon transform on the upper half-space model of H^n.

Forward transforms over horocycles, the Fourier-in-x' reduction to
one-dimensional Volterra/Abel equations, and reconstruction of Fourier
slices from exterior horocycle data.
"""

from .geometry import (
    Dilation,
    Horocycle,
    HorizontalTranslation,
    Inversion,
    Isometry,
    Plane,
    PointH,
    Sphere,
    apply_isometry,
    distance,
    lies_outside,
    sphere_to_plane_isometry,
)
from .transform import (
    DecayFunction,
    QuadratureSpec,
    decay_certificate,
    transform_plane,
    transform_sphere,
    transform_via_isometry,
)
from .slice_fourier import (
    KernelEquation,
    SliceData,
    assemble_kernel_equation,
    exterior_data,
    fourier_slice,
    sphere_phase_integral,
)
from .volterra import (
    AbelProblem,
    SecondKindProblem,
    reduce_diagonal_vanishing,
    reduce_even_step,
    solve_abel,
    solve_first_kind,
    solve_second_kind,
)
from .support import (
    ExteriorDataset,
    SupportReport,
    reconstruct_slice,
    reconstruct_slice_reduced,
    verify_support,
)

__version__ = "0.1.0"

__all__ = [
    "AbelProblem",
    "DecayFunction",
    "Dilation",
    "ExteriorDataset",
    "HorizontalTranslation",
    "Horocycle",
    "Inversion",
    "Isometry",
    "KernelEquation",
    "Plane",
    "PointH",
    "QuadratureSpec",
    "SecondKindProblem",
    "SliceData",
    "Sphere",
    "SupportReport",
    "apply_isometry",
    "assemble_kernel_equation",
    "decay_certificate",
    "distance",
    "exterior_data",
    "fourier_slice",
    "lies_outside",
    "reconstruct_slice",
    "reconstruct_slice_reduced",
    "reduce_diagonal_vanishing",
    "reduce_even_step",
    "solve_abel",
    "solve_first_kind",
    "solve_second_kind",
    "sphere_phase_integral",
    "sphere_to_plane_isometry",
    "transform_plane",
    "transform_sphere",
    "transform_via_isometry",
    "verify_support",
]
