"""The mapping zoo: branched maps of a punctured ball with analytic derivative data.

Members: identity, winding (k-fold angular wrap on the first two axes), radial
stretch x -> |x|^(a-1) x, inversion x -> x/|x|^2, and compositions.  All fix the
puncture center, carry exact derivatives and preimage formulas, and expose the
distortion coefficient, multiplicity, weight, curve lifting, and cluster-set
sampling used by the inequality scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .curves import Curve
from .geometry import ExtendedPoint, SphericalRing, chordal_distance

ZOO_KINDS = ("identity", "winding", "radial_stretch", "inversion", "composition")

# Relative radius below which a lifted vertex counts as reaching the puncture.
PUNCTURE_TOL = 1e-9
# Two distinct preimage branches closer than this to equidistant are ambiguous.
AMBIGUITY_TOL = 1e-6

COMPLETED = "completed"
HIT_PUNCTURE = "hit_puncture"
HIT_OUTER_SPHERE = "hit_outer_sphere"


class LiftingAmbiguity(Exception):
    """Two preimage branches are equally close to the running lift."""


class DomainError(ValueError):
    """A point falls outside the domain or image of a zoo map."""


@dataclass(frozen=True)
class MappingSpec:
    """A zoo member acting on the punctured ball B(center, epsilon0) minus its center."""

    kind: str
    dim: int = 2
    k: int = 1
    alpha: float = 1.0
    parts: tuple["MappingSpec", ...] = ()
    center: tuple[float, ...] = ()
    epsilon0: float = 0.5

    def __post_init__(self):
        if self.kind not in ZOO_KINDS:
            raise ValueError(f"unknown mapping kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.kind == "winding" and (self.k < 1 or self.k != int(self.k)):
            raise ValueError("winding order k must be a positive integer")
        if self.kind == "radial_stretch" and not self.alpha > 0:
            raise ValueError("stretch exponent must be positive")
        if self.kind == "composition" and not self.parts:
            raise ValueError("composition needs at least one part")
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * self.dim)
        if len(self.center) != self.dim:
            raise ValueError("center length does not match dim")
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def describe(self) -> str:
        if self.kind == "winding":
            return f"winding(k={self.k})"
        if self.kind == "radial_stretch":
            return f"radial_stretch(alpha={self.alpha:g})"
        if self.kind == "composition":
            return " o ".join(p.describe() for p in reversed(self.parts))
        return self.kind


def identity(dim: int = 2, center: Sequence[float] = (), epsilon0: float = 0.5) -> MappingSpec:
    return MappingSpec("identity", dim=dim, center=tuple(center), epsilon0=epsilon0)


def winding(k: int, dim: int = 2, center: Sequence[float] = (),
            epsilon0: float = 0.5) -> MappingSpec:
    return MappingSpec("winding", dim=dim, k=int(k), center=tuple(center), epsilon0=epsilon0)


def radial_stretch(alpha: float, dim: int = 2, center: Sequence[float] = (),
                   epsilon0: float = 0.5) -> MappingSpec:
    return MappingSpec("radial_stretch", dim=dim, alpha=float(alpha),
                       center=tuple(center), epsilon0=epsilon0)


def inversion(dim: int = 2, center: Sequence[float] = (), epsilon0: float = 0.5) -> MappingSpec:
    return MappingSpec("inversion", dim=dim, center=tuple(center), epsilon0=epsilon0)


def composition(parts: Sequence[MappingSpec]) -> MappingSpec:
    """Apply the parts in list order; domain data comes from the first part."""
    parts = tuple(parts)
    if not parts:
        raise ValueError("composition needs at least one part")
    first = parts[0]
    if any(p.dim != first.dim for p in parts):
        raise ValueError("composition parts must share one dimension")
    return MappingSpec("composition", dim=first.dim, parts=parts,
                       center=first.center, epsilon0=first.epsilon0)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _eval_rel(f: MappingSpec, z: np.ndarray) -> np.ndarray:
    """Evaluate on (m, n) coordinates relative to the center."""
    if f.kind == "identity":
        return z.copy()
    if f.kind == "winding":
        out = z.copy()
        r = np.hypot(z[:, 0], z[:, 1])
        th = np.arctan2(z[:, 1], z[:, 0])
        out[:, 0] = r * np.cos(f.k * th)
        out[:, 1] = r * np.sin(f.k * th)
        return out
    if f.kind == "radial_stretch":
        r = np.linalg.norm(z, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0.0, r ** (f.alpha - 1.0), 0.0)
        return scale * z
    if f.kind == "inversion":
        r2 = np.sum(z * z, axis=1, keepdims=True)
        if np.any(r2 == 0.0):
            raise DomainError("inversion is undefined at the puncture")
        return z / r2
    out = z
    for part in f.parts:
        out = _eval_rel(part, out)
    return out


def evaluate(f: MappingSpec, x) -> np.ndarray:
    """Image of one finite point; the puncture itself is outside the domain."""
    p = np.asarray(x, dtype=float).ravel()
    if len(p) != f.dim:
        raise ValueError("point dimension does not match the mapping")
    c = f.center_array()
    if np.linalg.norm(p - c) == 0.0:
        raise DomainError("the puncture has no image")
    return c + _eval_rel(f, (p - c)[None, :])[0]


def evaluate_many(f: MappingSpec, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    c = f.center_array()
    return c + _eval_rel(f, pts - c)


# ---------------------------------------------------------------------------
# Derivatives and distortion
# ---------------------------------------------------------------------------

def _derivative_rel(f: MappingSpec, z: np.ndarray) -> np.ndarray:
    n = f.dim
    if f.kind == "identity":
        return np.eye(n)
    if f.kind == "winding":
        r = math.hypot(z[0], z[1])
        if r == 0.0:
            raise DomainError("winding derivative is undefined on the axis")
        th = math.atan2(z[1], z[0])
        er_in = np.array([math.cos(th), math.sin(th)])
        et_in = np.array([-math.sin(th), math.cos(th)])
        er_out = np.array([math.cos(f.k * th), math.sin(f.k * th)])
        et_out = np.array([-math.sin(f.k * th), math.cos(f.k * th)])
        M = np.eye(n)
        M[:2, :2] = np.outer(er_out, er_in) + f.k * np.outer(et_out, et_in)
        return M
    if f.kind == "radial_stretch":
        r = float(np.linalg.norm(z))
        if r == 0.0:
            raise DomainError("stretch derivative is undefined at the puncture")
        u = z / r
        return r ** (f.alpha - 1.0) * (np.eye(n) + (f.alpha - 1.0) * np.outer(u, u))
    if f.kind == "inversion":
        r2 = float(z @ z)
        if r2 == 0.0:
            raise DomainError("inversion derivative is undefined at the puncture")
        u = z / math.sqrt(r2)
        return (np.eye(n) - 2.0 * np.outer(u, u)) / r2
    M = np.eye(n)
    w = z
    for part in f.parts:
        M = _derivative_rel(part, w) @ M
        w = _eval_rel(part, w[None, :])[0]
    return M


def derivative_matrix(f: MappingSpec, x) -> np.ndarray:
    """Exact Jacobian matrix at a finite point away from chart singularities."""
    p = np.asarray(x, dtype=float).ravel()
    return _derivative_rel(f, p - f.center_array())


def finite_difference_derivative(f: MappingSpec, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference Jacobian with the given step."""
    p = np.asarray(x, dtype=float).ravel()
    cols = []
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = step
        cols.append((evaluate(f, p + e) - evaluate(f, p - e)) / (2.0 * step))
    return np.stack(cols, axis=1)


@dataclass
class DistortionReport:
    """Operator norm, Jacobian determinant, and outer distortion at a point."""

    point: tuple[float, ...]
    operator_norm: float
    jacobian_det: float
    K_O: float
    degenerate_case: str | None
    mode: str


def distortion_from_matrix(M: np.ndarray, n: int | None = None,
                           point: Sequence[float] = (), mode: str = "matrix") -> DistortionReport:
    """Distortion data of a derivative matrix, honoring the degenerate conventions.

    K_O = ||M||^n / |det M|; by convention K_O = 1 when M = 0, and K_O = inf
    when M != 0 but det M = 0.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0] if n is None else n
    op = float(np.linalg.svd(M, compute_uv=False)[0])
    det = float(np.linalg.det(M))
    if op == 0.0:
        return DistortionReport(tuple(point), 0.0, 0.0, 1.0, "zero_derivative", mode)
    if det == 0.0:
        return DistortionReport(tuple(point), op, 0.0, math.inf, "vanishing_jacobian", mode)
    return DistortionReport(tuple(point), op, det, op ** n / abs(det), None, mode)


def distortion_at(f: MappingSpec, x, mode: str = "analytic",
                  fd_step: float = 1e-4) -> DistortionReport:
    """Distortion report at a point, from exact or central-difference derivatives."""
    p = np.asarray(x, dtype=float).ravel()
    if mode == "analytic":
        M = derivative_matrix(f, p)
    elif mode == "finite_difference":
        M = finite_difference_derivative(f, p, fd_step)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return distortion_from_matrix(M, f.dim, point=tuple(p), mode=mode)


def multiplicity(f: MappingSpec) -> int:
    """Maximal number of preimages of an image point."""
    if f.kind == "winding":
        return f.k
    if f.kind == "composition":
        out = 1
        for part in f.parts:
            out *= multiplicity(part)
        return out
    return 1


def sup_distortion(f: MappingSpec) -> float:
    """Essential supremum of K_O over the punctured ball (constant for the zoo).

    For compositions this is the submultiplicative product of the parts, an
    upper bound that is attained when the factors distort in the same sense
    (e.g. nested windings) and remains a valid weight otherwise.
    """
    n = f.dim
    if f.kind == "identity" or f.kind == "inversion":
        return 1.0
    if f.kind == "winding":
        return float(f.k) ** (n - 1)
    if f.kind == "radial_stretch":
        return max(f.alpha, 1.0) ** n / f.alpha
    out = 1.0
    for part in f.parts:
        out *= sup_distortion(part)
    return out


# ---------------------------------------------------------------------------
# Image geometry and the weight
# ---------------------------------------------------------------------------

def image_ball(f: MappingSpec) -> tuple[str, float]:
    """The image of the punctured ball: ('ball', r) or ('exterior', r) about the center."""
    shape, r = "ball", f.epsilon0
    chain = f.parts if f.kind == "composition" else (f,)
    for part in chain:
        if part.kind == "radial_stretch":
            r = r ** part.alpha
        elif part.kind == "inversion":
            r = 1.0 / r
            shape = "exterior" if shape == "ball" else "ball"
    return shape, r


def image_mask(f: MappingSpec):
    """Indicator of f's image, as a callable on (m, n) point arrays."""
    shape, r = image_ball(f)
    c = f.center_array()

    def mask(pts: np.ndarray) -> np.ndarray:
        rad = np.linalg.norm(np.atleast_2d(pts) - c, axis=1)
        return rad < r if shape == "ball" else rad > r

    return mask


def image_volume(f: MappingSpec) -> float:
    """Volume of the image; infinite for exterior images."""
    from .modulus import unit_sphere_area

    shape, r = image_ball(f)
    if shape == "exterior":
        return math.inf
    return unit_sphere_area(f.dim) / f.dim * r ** f.dim


@dataclass
class WeightQ:
    """Constant weight N * K with its L1 norm over a stated image region."""

    value: float
    N: int
    K: float
    l1_norm: float
    region: str

    def field(self):
        v = self.value
        return lambda pts: np.full(len(np.atleast_2d(pts)), v)


def weight_Q(f: MappingSpec, image_region: SphericalRing | None = None,
             resolution: int = 128) -> WeightQ:
    """The weight Q = N(f) * sup K_O with its L1 norm over region (ring) or image.

    With no region the norm is taken over the whole image; an unbounded image
    makes it infinite.
    """
    from .modulus import masked_ring_volume

    N = multiplicity(f)
    K = sup_distortion(f)
    value = N * K
    if image_region is None:
        vol = image_volume(f)
        region = "image"
    else:
        vol = masked_ring_volume(image_region, image_mask(f), resolution=resolution)
        region = (f"ring(r={image_region.r_inner:g},{image_region.r_outer:g})")
    return WeightQ(value, N, K, value * vol, region)


# ---------------------------------------------------------------------------
# Preimages and lifting
# ---------------------------------------------------------------------------

def _preimages_rel(f: MappingSpec, w: np.ndarray) -> list[np.ndarray]:
    if f.kind == "identity":
        return [w.copy()]
    if f.kind == "winding":
        r = math.hypot(w[0], w[1])
        psi = math.atan2(w[1], w[0])
        out = []
        for j in range(f.k):
            th = (psi + 2.0 * math.pi * j) / f.k
            z = w.copy()
            z[0] = r * math.cos(th)
            z[1] = r * math.sin(th)
            out.append(z)
        return out
    if f.kind == "radial_stretch":
        r = float(np.linalg.norm(w))
        if r == 0.0:
            return []
        return [r ** (1.0 / f.alpha - 1.0) * w]
    if f.kind == "inversion":
        r2 = float(w @ w)
        if r2 == 0.0:
            return []
        return [w / r2]
    layers = [w.copy()]
    for part in reversed(f.parts):
        nxt = []
        for y in layers:
            nxt.extend(_preimages_rel(part, y))
        layers = nxt
    return layers


def preimages(f: MappingSpec, y) -> list[np.ndarray]:
    """All preimages of an image point, unrestricted to the punctured ball."""
    w = np.asarray(y, dtype=float).ravel() - f.center_array()
    if float(w @ w) == 0.0 and f.kind != "inversion":
        return []
    return [f.center_array() + z for z in _preimages_rel(f, w)]


def lift_curve(f: MappingSpec, image_curve: Curve, start,
               start_tol: float = 1e-9) -> tuple[Curve, str]:
    """Lift an image curve through f, continuing along the nearest preimage branch.

    The lift begins at `start` (which must map to the curve's first vertex) and
    stops once it leaves the closure of the punctured ball, reporting whether it
    approached the puncture or crossed the bounding sphere.
    """
    start = np.asarray(start, dtype=float).ravel()
    first = image_curve.vertices[0]
    if np.linalg.norm(evaluate(f, start) - first) > start_tol * max(1.0, float(np.linalg.norm(first))):
        raise ValueError("start point does not map to the first image vertex")
    c = f.center_array()
    eps0 = f.epsilon0
    lifted = [start]
    status = COMPLETED
    for i in range(1, image_curve.n_vertices):
        y = image_curve.vertices[i]
        cands = [z for z in preimages(f, y)]
        if not cands:
            # image vertex is the puncture's image point
            status = HIT_PUNCTURE
            break
        prev = lifted[-1]
        dists = np.array([np.linalg.norm(z - prev) for z in cands])
        order = np.argsort(dists)
        best = cands[order[0]]
        if len(cands) > 1:
            second = cands[order[1]]
            gap = dists[order[1]] - dists[order[0]]
            if gap <= AMBIGUITY_TOL and np.linalg.norm(second - best) > 1e-12:
                raise LiftingAmbiguity(
                    f"image vertex {i}: two branches within {gap:.3g} of equidistant")
        lifted.append(best)
        rad = float(np.linalg.norm(best - c))
        if rad <= PUNCTURE_TOL * eps0:
            status = HIT_PUNCTURE
            break
        if rad > eps0 * (1.0 + 1e-12):
            status = HIT_OUTER_SPHERE
            break
    pts = [lifted[0]]
    for q in lifted[1:]:
        if np.linalg.norm(q - pts[-1]) > 0.0:
            pts.append(q)
    if len(pts) < 2:
        raise DomainError("lift collapsed to a single point")
    return Curve(np.asarray(pts)), status


# ---------------------------------------------------------------------------
# Cluster set sampling
# ---------------------------------------------------------------------------

def _sphere_samples(dim: int, count: int) -> np.ndarray:
    from .curves import _directions

    return _directions(dim, count)


def cluster_set_estimate(f: MappingSpec, x0, sample_radii: Sequence[float],
                         samples_per_radius: int = 64,
                         threshold: float = 0.05) -> list[ExtendedPoint]:
    """Representative limit points of f along spheres shrinking to the puncture.

    Images on the two smallest sample spheres are clustered agglomeratively in
    the chordal metric at the given threshold; each cluster is reported by its
    medoid, snapped to the point at infinity when the whole cluster is within
    the threshold of it.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    radii = sorted(float(r) for r in sample_radii)
    if not radii or radii[0] <= 0 or radii[-1] >= f.epsilon0:
        raise ValueError("sample radii must decrease to 0 inside the punctured ball")
    dirs = _sphere_samples(f.dim, samples_per_radius)
    pts = []
    for r in radii[:2]:
        pts.append(evaluate_many(f, x0 + r * dirs))
    images = np.vstack(pts)
    m = len(images)
    points = [ExtendedPoint.of(p) for p in images]

    # single-linkage union-find at the chordal threshold
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if chordal_distance(points[i], points[j]) < threshold:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(m):
        clusters.setdefault(find(i), []).append(i)

    reps = []
    for members in clusters.values():
        sub = [points[i] for i in members]
        sums = [sum(chordal_distance(p, q) for q in sub) for p in sub]
        medoid = sub[int(np.argmin(sums))]
        if chordal_distance(medoid, ExtendedPoint.infinity(f.dim)) < threshold:
            reps.append(ExtendedPoint.infinity(f.dim))
        else:
            reps.append(medoid)
    # deduplicate representatives (e.g. several clusters near infinity)
    unique: list[ExtendedPoint] = []
    for r in reps:
        if all(chordal_distance(r, u) >= threshold for u in unique):
            unique.append(r)
    return unique


def with_domain(f: MappingSpec, center: Sequence[float], epsilon0: float) -> MappingSpec:
    """The same zoo member re-rooted at a new punctured ball."""
    return replace(f, center=tuple(float(v) for v in center), epsilon0=float(epsilon0))
