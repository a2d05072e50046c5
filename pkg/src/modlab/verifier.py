"""Executable inequality scenarios for the mapping zoo.

Builds the family of domain curves whose images cross a given image ring,
checks the weighted upper bound on its modulus against a library of admissible
test functions, evaluates the total-weight bound driven by the uniform test
function, estimates the continuity modulus constant, and stages the blow-up
versus fixed-bound contradiction experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curves import Curve, CurveFamily, resample
from .geometry import SphericalRing
from .mappings import (MappingSpec, evaluate_many, image_ball, image_mask,
                       lift_curve, multiplicity, preimages, sup_distortion,
                       weight_Q, with_domain, HIT_PUNCTURE)
from .modulus import (EtaFunction, ModulusResult, admissible_check,
                      blowup_experiment, discrete_modulus, power_eta,
                      reciprocal_eta, ring_grid, uniform_eta,
                      weighted_rhs_integral)

# Discrete modulus carries the dominant error; closed-form sides are exact.
DEFAULT_REL_TOL = 0.02
LIFT_VERTEX_BUDGET = 33


def default_etas(r1: float, r2: float) -> list[EtaFunction]:
    """The tested library of admissible functions: uniform, extremal, power-law."""
    return [uniform_eta(r1, r2), reciprocal_eta(r1, r2), power_eta(r1, r2, 1.0)]


def lifted_ring_family(f: MappingSpec, y0, r1: float, r2: float, count: int,
                  kind: str = "radial",
                  vertex_budget: int = LIFT_VERTEX_BUDGET) -> CurveFamily:
    """Domain curves whose images join the spheres of the image ring A(y0, r1, r2).

    The image ring family is generated, each member is resampled for stable
    branch tracking and lifted from every preimage of its initial point, and the
    lifted curves form the returned family (k branches per image curve for a
    k-fold winding).
    """
    from .curves import generate_ring_family

    y0 = np.asarray(y0, dtype=float).ravel()
    ring = SphericalRing(tuple(y0), r1, r2)
    image_family = generate_ring_family(ring, count, kind=kind)
    c = f.center_array()
    lifted = []
    for i, image_curve in enumerate(image_family):
        curve = resample(image_curve, vertex_budget)
        starts = []
        for z in preimages(f, curve.vertices[0]):
            rad = float(np.linalg.norm(z - c))
            if 0.0 < rad <= f.epsilon0 * (1.0 + 1e-9):
                starts.append(z)
        if not starts:
            raise ValueError(f"image curve {i}: initial point has no preimage "
                             f"inside the punctured ball")
        for start in starts:
            try:
                lift, status = lift_curve(f, curve, start)
            except Exception as exc:
                raise type(exc)(f"image curve {i}: {exc}") from exc
            lifted.append(lift)
    label = (f"lifts of {kind}({count}) in ring(r={r1:g},{r2:g}) "
             f"through {f.describe()} ({len(lifted)} curves)")
    return CurveFamily(lifted, label)


def _lifted_family_grid(f: MappingSpec, family: CurveFamily, resolution: int):
    """Matched grid around the lifted family, centered on the puncture."""
    c = f.center_array()
    radii = np.concatenate(
        [np.linalg.norm(curve.vertices - c, axis=1) for curve in family])
    rmin, rmax = float(radii.min()), float(radii.max())
    if rmin <= 0 or rmin >= rmax:
        raise ValueError("degenerate lifted family geometry")
    ring = SphericalRing(tuple(c), rmin, rmax)
    return ring_grid(ring, resolution, len(family))


@dataclass
class PoletskiReport:
    """One weighted modulus-inequality check for a mapping and an image ring."""

    mapping: str
    y0: tuple[float, ...]
    r1: float
    r2: float
    lhs: ModulusResult
    rhs_per_eta: list[tuple[EtaFunction, float]]
    satisfied: bool
    slack: float
    rel_tol: float
    q_value: float
    family_size: int

    def min_rhs(self) -> float:
        return min(v for _, v in self.rhs_per_eta)

    def to_dict(self) -> dict:
        return {
            "scenario": "poletski",
            "mapping": self.mapping,
            "y0": list(self.y0),
            "r1": self.r1,
            "r2": self.r2,
            "lhs": self.lhs.to_report(),
            "rhs_per_eta": [{"eta": e.describe(), "value": v}
                            for e, v in self.rhs_per_eta],
            "q_value": self.q_value,
            "satisfied": self.satisfied,
            "slack": self.slack,
            "rel_tol": self.rel_tol,
            "family_size": self.family_size,
        }


def verify_poletski(f: MappingSpec, y0, r1: float, r2: float,
                    resolution: int = 128, etas: Sequence[EtaFunction] | None = None,
                    count: int = 192, solver_tol: float = 3e-3,
                    rel_tol: float = DEFAULT_REL_TOL,
                    budget: int = 200_000) -> PoletskiReport:
    """Check that the modulus of the lifted family stays under every weighted bound.

    The left side is the discrete modulus of the lifted curves; each right side
    integrates Q * eta^n over the image ring cut to the mapping's image, with
    Q = multiplicity times supremal distortion.  The check allows the stated
    relative tolerance on the discrete side.
    """
    if not (0 < r1 < r2):
        raise ValueError("need 0 < r1 < r2")
    etas = list(default_etas(r1, r2)) if etas is None else list(etas)
    for eta in etas:
        ok, integ = admissible_check(eta, r1, r2)
        if not ok:
            raise ValueError(f"eta {eta.describe()} is inadmissible "
                             f"(integral {integ:.6g} < 1)")
    family = lifted_ring_family(f, y0, r1, r2, count)
    grid = _lifted_family_grid(f, family, resolution)
    lhs = discrete_modulus(family, grid, p=float(f.dim), tol=solver_tol, budget=budget)

    q = multiplicity(f) * sup_distortion(f)
    ring = SphericalRing(tuple(np.asarray(y0, dtype=float).ravel()), r1, r2)
    mask = image_mask(f)
    rhs = [(eta, q * weighted_rhs_integral(1.0, eta, ring, mask, n=f.dim))
           for eta in etas]
    min_rhs = min(v for _, v in rhs)
    satisfied = lhs.value <= min_rhs * (1.0 + rel_tol)
    return PoletskiReport(f.describe(), tuple(np.asarray(y0, dtype=float).ravel()),
                          r1, r2, lhs, rhs, satisfied, min_rhs - lhs.value,
                          rel_tol, q, len(family))


@dataclass
class WeightBoundReport:
    """The total-weight bound: modulus of the lifted ring family vs ||Q||_1 / gap^n."""

    mapping: str
    y1: tuple[float, ...]
    eps1: float
    eps1_star: float
    lhs: float
    bound: float
    holds: bool
    q_l1_norm: float
    lhs_result: ModulusResult | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": "weight_bound",
            "mapping": self.mapping,
            "y1": list(self.y1),
            "eps1": self.eps1,
            "eps1_star": self.eps1_star,
            "lhs": self.lhs,
            "bound": self.bound,
            "holds": self.holds,
            "q_l1_norm": self.q_l1_norm,
        }


def weight_bound_check(f: MappingSpec, y1, eps1: float, eps1_star: float,
                   resolution: int = 128, count: int = 192,
                   solver_tol: float = 3e-3, rel_tol: float = DEFAULT_REL_TOL,
                   budget: int = 200_000) -> WeightBoundReport:
    """Evaluate M(lifted family) <= ||Q||_1 / (eps1_star - eps1)^n.

    ||Q||_1 is taken over the whole image of the mapping and must be finite.
    """
    if not (0 < eps1 < eps1_star):
        raise ValueError("need 0 < eps1 < eps1_star")
    wq = weight_Q(f)
    if not math.isfinite(wq.l1_norm):
        raise ValueError("the weight is not integrable over the image")
    family = lifted_ring_family(f, y1, eps1, eps1_star, count)
    grid = _lifted_family_grid(f, family, resolution)
    lhs = discrete_modulus(family, grid, p=float(f.dim), tol=solver_tol, budget=budget)
    bound = wq.l1_norm / (eps1_star - eps1) ** f.dim
    holds = lhs.value <= bound * (1.0 + rel_tol)
    return WeightBoundReport(f.describe(), tuple(np.asarray(y1, dtype=float).ravel()),
                   eps1, eps1_star, lhs.value, bound, holds, wq.l1_norm, lhs)


@dataclass
class ContinuityReport:
    """Empirical constant for the logarithmic continuity estimate at the puncture."""

    mapping: str
    x0: tuple[float, ...]
    r0: float
    samples: list[tuple[float, float, float]]  # (|x - x0|, |f(x) - f(x0)|, rhs factor)
    estimated_Cn: float
    q_l1_norm: float

    def to_dict(self) -> dict:
        return {
            "scenario": "continuity",
            "mapping": self.mapping,
            "x0": list(self.x0),
            "r0": self.r0,
            "estimated_Cn": self.estimated_Cn,
            "q_l1_norm": self.q_l1_norm,
            "samples": [{"radius": r, "lhs": l, "rhs_factor": g}
                        for r, l, g in self.samples],
        }


def continuity_bound(f: MappingSpec, x0, r0: float, sample_count: int = 200,
                     seed: int = 0, directions: np.ndarray | None = None) -> ContinuityReport:
    """Empirical constant in |f(x) - f(x0)| <= C ||Q||_1^(1/n) / log^(1/n)(1 + r0/|x - x0|).

    Samples log-uniformly in |x - x0| down to 1e-6 r0 (the largest radius is
    always included), extends f to the puncture by its limit there, and reports
    the supremum of lhs over the bound factor.  Radii and the rotation of the
    sample directions do not affect the zoo's radially symmetric members.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    g = with_domain(f, x0, f.epsilon0)
    if not (0 < 2.0 * r0 < g.epsilon0):
        raise ValueError("need 0 < 2 r0 < distance from the puncture to the boundary")
    shape, _ = image_ball(g)
    if shape != "ball":
        raise ValueError("the weight is not integrable over an unbounded image")
    wq = weight_Q(g)
    if not math.isfinite(wq.l1_norm) or wq.l1_norm <= 0:
        raise ValueError("the weight is not integrable over the image")
    n = g.dim
    f_at_puncture = x0  # every bounded-image zoo member extends by its center

    radii = np.geomspace(1e-6 * r0, r0, sample_count)
    if directions is None:
        rng = np.random.default_rng(seed)
        vecs = rng.standard_normal((sample_count, n))
        directions = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    else:
        directions = np.asarray(directions, dtype=float)
        if directions.shape != (sample_count, n):
            raise ValueError("directions must be one unit vector per sample")

    pts = x0 + radii[:, None] * directions
    images = evaluate_many(g, pts)
    lhs = np.linalg.norm(images - f_at_puncture, axis=1)
    log_factor = np.log1p(r0 / radii) ** (1.0 / n)
    rhs_factor = wq.l1_norm ** (1.0 / n) / log_factor
    ratios = lhs / rhs_factor
    estimated = float(ratios.max())
    samples = [(float(r), float(l), float(g_)) for r, l, g_ in
               zip(radii, lhs, rhs_factor)]
    return ContinuityReport(g.describe(), tuple(x0), r0, samples, estimated,
                            wq.l1_norm)


@dataclass
class ScenarioReport:
    """Blow-up against the fixed total-weight bound, with curve tails lifted."""

    mapping: str
    x0: tuple[float, ...]
    eps0: float
    separations: list[float]
    moduli: list[float]
    bound: float
    eps_pair: tuple[float, float]
    lift_statuses: list[str]
    crossover_index: int | None
    note: str
    q_l1_norm: float = 0.0
    tail_curves: list[Curve] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": "blowup",
            "mapping": self.mapping,
            "x0": list(self.x0),
            "eps0": self.eps0,
            "separations": self.separations,
            "moduli": self.moduli,
            "bound": self.bound,
            "eps_pair": list(self.eps_pair),
            "lift_statuses": self.lift_statuses,
            "crossover_index": self.crossover_index,
            "q_l1_norm": self.q_l1_norm,
            "note": self.note,
        }


def singularity_scenario(f: MappingSpec, x0, eps0: float,
                         separations: Sequence[float], resolution: int = 192,
                         eps1_frac: float = 0.2, eps1_star_frac: float = 0.9,
                         solver_tol: float = 3e-3,
                         budget: int = 400_000) -> ScenarioReport:
    """Exhibit the mechanism that forces continuity across the puncture.

    Two image segments running into the puncture's image are lifted (their lifts
    terminate at the puncture), and the modulus of curves joining two continua
    that approach the puncture is swept over the separations.  That sequence
    grows without bound while the weighted bound for any fixed ring stays
    finite, so past some separation the two are incompatible; the first index
    where the modulus exceeds the bound is reported when reached.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    g = with_domain(f, x0, eps0)
    if g.dim != 2:
        raise ValueError("the blow-up scenario is planar")
    shape, r_img = image_ball(g)
    if shape != "ball":
        raise ValueError("scenario needs a bounded image (integrable weight)")

    # two image tails running into the puncture's image from opposite sides
    statuses = []
    tails = []
    for sign in (1.0, -1.0):
        a = x0 + np.array([sign * 0.3 * r_img, 0.0])
        ts = np.linspace(0.0, 1.0, 64)
        pts = a[None, :] + ts[:, None] * (x0 - a)[None, :]
        tail = Curve(pts)
        start = None
        for z in preimages(g, a):
            if 0.0 < np.linalg.norm(z - x0) <= eps0:
                start = z
                break
        if start is None:
            raise ValueError("image tail start has no preimage in the ball")
        lift, status = lift_curve(g, tail, start)
        statuses.append(status)
        tails.append(lift)

    wq = weight_Q(g)
    eps1 = eps1_frac * r_img
    eps1_star = eps1_star_frac * r_img
    bound = wq.l1_norm / (eps1_star - eps1) ** g.dim

    moduli = [blowup_experiment(sep, resolution, eps0=eps0, tol=solver_tol,
                                budget=budget, center=tuple(x0))
              for sep in separations]
    crossover = next((i for i, v in enumerate(moduli) if v > bound), None)
    if all(s == HIT_PUNCTURE for s in statuses):
        note = ("both image tails lift to curves ending at the puncture; the zoo "
                "member extends continuously there, so the two tails share a "
                "single limit point and the contradiction stays hypothetical")
    else:
        note = "a lifted tail left through the bounding sphere"
    return ScenarioReport(g.describe(), tuple(x0), eps0, [float(s) for s in separations],
                          moduli, bound, (eps1, eps1_star), statuses, crossover,
                          note, wq.l1_norm, tails)
