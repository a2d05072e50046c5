"""modlab: a numerical laboratory for the modulus of curve families.

Computes discrete p-moduli by convex constraint generation, carries a zoo of
branched mappings of a punctured ball with exact distortion data, and runs the
weighted modulus-inequality, proof-bound, continuity, and blow-up scenarios as
reproducible experiments.
"""

__version__ = "0.1.0"

from .geometry import (ChordalBall, ExtendedPoint, RingPosition, SphericalRing,
                       chordal_distance, chordal_set_distance, ring_membership)
from .curves import (Curve, CurveFamily, GridDensity, GridSpec, NoCrossing,
                     crossing_subcurve, generate_ring_family, line_integral,
                     load_family, minorizes, save_family)
from .modulus import (EtaFunction, ModulusResult, SolverBudgetExceeded,
                      admissible_check, blowup_experiment, discrete_modulus,
                      power_eta, reciprocal_eta, ring_grid,
                      ring_modulus_analytic, uniform_eta, unit_sphere_area,
                      weighted_rhs_integral)
from .mappings import (DistortionReport, LiftingAmbiguity, MappingSpec, WeightQ,
                       cluster_set_estimate, composition, distortion_at,
                       evaluate, identity, inversion, lift_curve, multiplicity,
                       preimages, radial_stretch, weight_Q, winding)
from .verifier import (WeightBoundReport, ContinuityReport, PoletskiReport,
                       ScenarioReport, lifted_ring_family, continuity_bound,
                       weight_bound_check, singularity_scenario, verify_poletski)

__all__ = [
    "ChordalBall", "ExtendedPoint", "RingPosition", "SphericalRing",
    "chordal_distance", "chordal_set_distance", "ring_membership",
    "Curve", "CurveFamily", "GridDensity", "GridSpec", "NoCrossing",
    "crossing_subcurve", "generate_ring_family", "line_integral",
    "load_family", "minorizes", "save_family",
    "EtaFunction", "ModulusResult", "SolverBudgetExceeded",
    "admissible_check", "blowup_experiment", "discrete_modulus",
    "power_eta", "reciprocal_eta", "ring_grid", "ring_modulus_analytic",
    "uniform_eta", "unit_sphere_area", "weighted_rhs_integral",
    "DistortionReport", "LiftingAmbiguity", "MappingSpec", "WeightQ",
    "cluster_set_estimate", "composition", "distortion_at", "evaluate",
    "identity", "inversion", "lift_curve", "multiplicity", "preimages",
    "radial_stretch", "weight_Q", "winding",
    "WeightBoundReport", "ContinuityReport", "PoletskiReport", "ScenarioReport",
    "lifted_ring_family", "continuity_bound", "weight_bound_check",
    "singularity_scenario", "verify_poletski",
]
