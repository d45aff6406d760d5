"""2-D multigroup discrete-ordinates transport with matrix-free sweeps,
GMRES, and a sweep-based reduced-order-model pipeline whose online phase
is pure interpolation plus an r x r solve.
"""

from .configfile import default_config_path, load_config, load_default_config
from .fom import FomResult, solve_fom
from .gmres import GmresReport, gmres_solve
from .operators import TransportOperator, apply_D, apply_MS, particle_balance
from .problem import (CrossSections, Mesh, ProblemConfig, Quadrature,
                      build_mesh, build_quadrature, make_cross_sections)
from .rom import (ReducedBasis, ReducedSystem, RomLibrary, SnapshotMatrix,
                  assemble_reduced, build_library, collect_snapshots,
                  info_retained, interpolate_system, pod_basis, rom_solve)
from .sampling import SampleSet, sample_parameters

__version__ = "0.1.0"

__all__ = [
    "CrossSections", "FomResult", "GmresReport", "Mesh", "ProblemConfig",
    "Quadrature", "ReducedBasis", "ReducedSystem", "RomLibrary", "SampleSet",
    "SnapshotMatrix", "TransportOperator", "apply_D", "apply_MS",
    "assemble_reduced", "build_library", "build_mesh", "build_quadrature",
    "collect_snapshots", "default_config_path", "gmres_solve", "info_retained",
    "interpolate_system", "load_config", "load_default_config",
    "make_cross_sections", "particle_balance", "pod_basis", "rom_solve",
    "sample_parameters", "solve_fom",
]
