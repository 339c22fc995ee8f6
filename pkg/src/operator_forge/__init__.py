"""Numerical laboratory for orbit-steering perturbations of operators on
finite-dimensional complex Hilbert space."""

__version__ = "0.1.0"

from .cyclic import (BSequence, CyclicVectorCertificate, EigenvalueList,
                     approximate_basis_vector, b_sequence,
                     certificate_from_payload, certificate_payload,
                     cyclic_vector, finite_dim_cyclic_test,
                     random_phase_eigenvalues, rapid_decrease_ok,
                     roots_of_unity)
from .independence import (IndependenceState, cyclicity_openness_probe,
                           independence_step, initial_state, krylov_matrix,
                           krylov_rank, make_orbit_independent)
from .orbits import (DensityReport, DriveReport, OrbitReport, ProbeSet,
                     density_report, growth_check, multi_target_drive,
                     orbit, orbit_perturbation_bound, projective_distance,
                     verify_drive, weak_to_strong_bound)
from .strong import (StrongApproxRequest, StrongApproxResult,
                     strong_approximate, verify_strong)
from .weak import (WeakApproxRequest, WeakApproxResult, verify_weak,
                   weak_approximate, weak_supercyclic_approximate)

__all__ = [
    "__version__",
    "BSequence", "CyclicVectorCertificate", "EigenvalueList",
    "approximate_basis_vector", "b_sequence", "certificate_from_payload",
    "certificate_payload", "cyclic_vector", "finite_dim_cyclic_test",
    "random_phase_eigenvalues", "rapid_decrease_ok", "roots_of_unity",
    "IndependenceState", "cyclicity_openness_probe", "independence_step",
    "initial_state", "krylov_matrix", "krylov_rank",
    "make_orbit_independent",
    "DensityReport", "DriveReport", "OrbitReport", "ProbeSet",
    "density_report", "growth_check", "multi_target_drive", "orbit",
    "orbit_perturbation_bound", "projective_distance", "verify_drive",
    "weak_to_strong_bound",
    "StrongApproxRequest", "StrongApproxResult", "strong_approximate",
    "verify_strong",
    "WeakApproxRequest", "WeakApproxResult", "verify_weak",
    "weak_approximate", "weak_supercyclic_approximate",
]
