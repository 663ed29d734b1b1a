"""Two-sided obstacle problem for the superconducting region of thin shells.

Submodules
----------
surface       surfaces of revolution and triangle meshes
fields        axisymmetric potentials, fields and critical gaps
obstacle1d    axisymmetric solvers (closed-form regimes and projected SOR)
obstacle2d    projected SOR on triangle meshes and region diagnostics
barriers      piecewise-cubic comparison profiles
analysis      gap sweeps, transitions, scaling fits and freezing
vortexapprox  circle-vortex approximation of the vorticity measure
"""

from .analysis import (
    AxiProblem, MeshProblem, SweepReport, check_continuity, check_monotonicity,
    check_thickness, detect_freezing, fit_scaling, sweep, transitions,
)
from .barriers import BarrierProfile, build_barrier, verify_barrier, width_bracket
from .exceptions import (
    BetaOutOfRange, BracketFailure, CoincidentPoints, InvalidInput, NondegeneracyViolated,
    NotConverged, PackingFailure, ScObstacleError,
)
from .fields import (
    AxiPotential, critical_betas, derive_fields, integral_I, integrals_IJ, level_points,
    make_mesh_field, make_potential,
)
from .obstacle1d import Profile1D, components_1d, solve_pgs_1d, solve_regime
from .obstacle2d import MeshSolution, sc_region, solve_pgs_2d, vorticity
from .surface import RevolutionSurface, TriMesh, build_icosphere, build_revolution, make_trimesh
from .vortexapprox import (
    PointVortexSet, convergence_check, energy_J, green_energy, green_sphere, sample_measure,
)

__version__ = "0.1.0"

__all__ = [
    "AxiPotential", "AxiProblem", "BarrierProfile", "BetaOutOfRange", "BracketFailure",
    "CoincidentPoints", "InvalidInput", "MeshProblem", "MeshSolution", "NondegeneracyViolated",
    "NotConverged", "PackingFailure", "PointVortexSet", "Profile1D", "RevolutionSurface",
    "ScObstacleError", "SweepReport", "TriMesh", "build_barrier", "build_icosphere",
    "build_revolution", "check_continuity", "check_monotonicity", "check_thickness",
    "components_1d", "convergence_check", "critical_betas", "derive_fields", "detect_freezing",
    "energy_J", "fit_scaling", "green_energy", "green_sphere", "integral_I", "integrals_IJ",
    "level_points", "make_mesh_field", "make_potential", "make_trimesh", "sample_measure",
    "sc_region", "solve_pgs_1d", "solve_pgs_2d", "solve_regime", "sweep", "transitions",
    "verify_barrier", "vorticity", "width_bracket",
]
