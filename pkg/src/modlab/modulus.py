"""Modulus of curve families: analytic ring formulas and a discrete solver.

The discrete p-modulus of a finite family on a grid minimizes
sum(rho^p * cell_volume) over nonnegative cell densities subject to
integral(rho, curve) >= 1 for every curve.  The solver runs constraint
generation over the family, solving each subproblem by projected ascent on
the Lagrangian dual with analytic primal recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .curves import Curve, CurveFamily, GridDensity, GridSpec, curve_cell_lengths
from .geometry import SphericalRing

DEFAULT_BUDGET = 100_000


# ---------------------------------------------------------------------------
# Analytic formulas
# ---------------------------------------------------------------------------

def _gamma_half(x: float) -> float:
    """Gamma function for positive integer and half-integer arguments."""
    if x <= 0 or round(2 * x) != 2 * x:
        raise ValueError("argument must be a positive multiple of 1/2")
    if x == int(x):
        g, v = 1.0, 1.0
    else:
        g, v = math.sqrt(math.pi), 0.5
    while v < x - 0.5:
        g *= v
        v += 1.0
    return g


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere in n-space: 2 pi^(n/2) / Gamma(n/2)."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    return 2.0 * math.pi ** (n / 2.0) / _gamma_half(n / 2.0)


def ring_modulus_analytic(n: int, r1: float, r2: float) -> float:
    """Conformal modulus of the family joining the spheres of A(y0, r1, r2)."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    if not (0.0 < r1 < r2):
        raise ValueError(f"radii must satisfy 0 < r1 < r2, got ({r1}, {r2})")
    return unit_sphere_area(n) / math.log(r2 / r1) ** (n - 1)


# ---------------------------------------------------------------------------
# Admissible radial test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EtaFunction:
    """Nonnegative test function on (r1, r2), piecewise constant or closed form.

    kinds:
      piecewise  - constant levels between sorted breakpoints
      reciprocal - 1 / (r log(r2/r1)), the extremizer for the ring
      power      - a * r^s normalized so the integral over (r1, r2) is 1
    """

    kind: str
    r1: float
    r2: float
    breaks: tuple[float, ...] = ()
    levels: tuple[float, ...] = ()
    exponent: float = 0.0

    def __post_init__(self):
        if self.r1 >= self.r2:
            raise ValueError("eta support requires r1 < r2")
        if self.kind == "piecewise":
            if len(self.breaks) != len(self.levels) + 1:
                raise ValueError("piecewise eta needs one more breakpoint than levels")
            if any(b >= c for b, c in zip(self.breaks, self.breaks[1:])):
                raise ValueError("breakpoints must increase")
            if any(v < 0 for v in self.levels):
                raise ValueError("eta must be nonnegative")
        elif self.kind not in ("reciprocal", "power"):
            raise ValueError(f"unknown eta kind {self.kind!r}")

    def _power_coeff(self) -> float:
        s = self.exponent
        if s == -1.0:
            return 1.0 / math.log(self.r2 / self.r1)
        return (s + 1.0) / (self.r2 ** (s + 1.0) - self.r1 ** (s + 1.0))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.kind == "piecewise":
            for a, b, v in zip(self.breaks, self.breaks[1:], self.levels):
                out = np.where((r >= a) & (r <= b), v, out)
        elif self.kind == "reciprocal":
            inside = (r > self.r1) & (r < self.r2)
            with np.errstate(divide="ignore"):
                out = np.where(inside, 1.0 / (np.maximum(r, 1e-300) *
                                              math.log(self.r2 / self.r1)), 0.0)
        else:
            inside = (r > self.r1) & (r < self.r2)
            out = np.where(inside, self._power_coeff() * r ** self.exponent, 0.0)
        return out

    def integral(self, a: float | None = None, b: float | None = None) -> float:
        """Exact integral over (a, b) intersected with the support."""
        a = self.r1 if a is None else a
        b = self.r2 if b is None else b
        if self.kind == "piecewise":
            total = 0.0
            for lo, hi, v in zip(self.breaks, self.breaks[1:], self.levels):
                total += v * max(0.0, min(hi, b) - max(lo, a))
            return total
        lo, hi = max(a, self.r1), min(b, self.r2)
        if hi <= lo:
            return 0.0
        if self.kind == "reciprocal":
            return math.log(hi / lo) / math.log(self.r2 / self.r1)
        s = self.exponent
        c = self._power_coeff()
        if s == -1.0:
            return c * math.log(hi / lo)
        return c * (hi ** (s + 1.0) - lo ** (s + 1.0)) / (s + 1.0)

    def describe(self) -> str:
        if self.kind == "piecewise":
            return f"piecewise[{len(self.levels)}] on ({self.r1:g},{self.r2:g})"
        if self.kind == "reciprocal":
            return f"1/(r log(r2/r1)) on ({self.r1:g},{self.r2:g})"
        return f"power(s={self.exponent:g}) on ({self.r1:g},{self.r2:g})"


def uniform_eta(r1: float, r2: float) -> EtaFunction:
    """The constant 1/(r2 - r1) on [r1, r2], zero outside; integral exactly 1."""
    if r1 >= r2:
        raise ValueError("uniform eta requires r1 < r2")
    return EtaFunction("piecewise", r1, r2, breaks=(r1, r2), levels=(1.0 / (r2 - r1),))


def reciprocal_eta(r1: float, r2: float) -> EtaFunction:
    return EtaFunction("reciprocal", r1, r2)


def power_eta(r1: float, r2: float, exponent: float = 1.0) -> EtaFunction:
    return EtaFunction("power", r1, r2, exponent=exponent)


def admissible_check(eta: EtaFunction, r1: float, r2: float) -> tuple[bool, float]:
    """Integrate eta over (r1, r2); admissible when the integral reaches 1.

    Exact for piecewise-constant representations; closed form otherwise.
    """
    if eta.kind == "piecewise" and any(v < 0 for v in eta.levels):
        raise ValueError("eta must be nonnegative")
    value = eta.integral(r1, r2)
    if value < 0:
        raise ValueError("eta integral came out negative")
    return value >= 1.0 - 1e-12, value


# ---------------------------------------------------------------------------
# Discrete modulus
# ---------------------------------------------------------------------------

class SolverBudgetExceeded(Exception):
    """Dual-ascent iteration budget ran out; carries the best feasible upper bound."""

    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


@dataclass
class ModulusResult:
    """Outcome of a discrete modulus solve."""

    value: float
    density: GridDensity
    iterations: int
    active_constraints: int
    residual: float
    family_size: int

    def to_report(self) -> dict:
        spec = self.density.spec
        return {
            "value": self.value,
            "iterations": self.iterations,
            "active_constraints": self.active_constraints,
            "residual": self.residual,
            "grid": {"lo": list(spec.lo), "hi": list(spec.hi), "shape": list(spec.shape)},
            "family_size": self.family_size,
        }


def _dual_ascent(A: sp.csr_matrix, w: float, p: float, lam: np.ndarray,
                 tol: float, max_iter: int):
    """Projected ascent with Barzilai-Borwein steps on the Lagrangian dual.

    Primal recovery: rho = (A^T lam / (p w))^(1/(p-1)).  Returns the multipliers,
    the recovered density, and the number of gradient evaluations.
    """
    q = 1.0 / (p - 1.0)

    def state(lam):
        s = A.T @ lam
        rho = (s / (p * w)) ** q
        grad = 1.0 - A @ rho
        g = lam.sum() - (1.0 - 1.0 / p) * float(s @ rho)
        return g, grad, rho

    g, grad, rho = state(lam)
    evals = 1
    step = 1.0
    for _ in range(max_iter):
        pg = grad.copy()
        pg[(lam <= 0.0) & (grad < 0.0)] = 0.0
        if np.abs(pg).max() < tol:
            break
        # monotone safeguard around the BB proposal
        while True:
            lam_new = np.maximum(0.0, lam + step * grad)
            g_new, grad_new, rho_new = state(lam_new)
            evals += 1
            if g_new >= g - 1e-14 * max(1.0, abs(g)) or step < 1e-15:
                break
            step *= 0.5
        dl = lam_new - lam
        dg = grad_new - grad
        curv = float(dl @ dg)
        if curv < 0.0:
            step = float(dl @ dl) / (-curv)
        else:
            step *= 2.0
        lam, g, grad, rho = lam_new, g_new, grad_new, rho_new
        if evals >= max_iter:
            break
    return lam, rho, evals


def discrete_modulus(family: CurveFamily, grid: GridSpec, p: float | None = None,
                     tol: float = 1e-3, budget: int = DEFAULT_BUDGET,
                     grow: int = 1) -> ModulusResult:
    """Discrete p-modulus of a finite curve family on a grid.

    Constraint generation: solve the dual subproblem on an active subset, add
    the most-violated curve (lowest index on ties), and stop once no curve is
    violated by more than tol.  The returned density is rescaled so the least
    constraint integral over the whole family equals 1, making it feasible and
    its energy an upper bound certified by the reported residual.

    grow > 1 admits that many most-violated curves per outer round; the default
    matches the one-at-a-time policy.
    """
    if p is None:
        p = float(grid.dim)
    if p <= 1.0:
        raise ValueError("modulus exponent must exceed 1")
    if len(family.curves) == 0:
        return ModulusResult(0.0, GridDensity.zeros(grid), 0, 0, 0.0, 0)

    rows = [curve_cell_lengths(grid, c) for c in family]
    m = len(rows)
    indptr = np.concatenate([[0], np.cumsum([len(r[0]) for r in rows])])
    A_full = sp.csr_matrix(
        (np.concatenate([r[1] for r in rows]),
         np.concatenate([r[0] for r in rows]), indptr),
        shape=(m, grid.n_cells))
    w = grid.cell_volume

    active: list[int] = [0]
    lam = np.ones(1)
    total_evals = 0
    inner_tol = 0.3 * tol
    integrals = np.zeros(m)
    rho = np.zeros(grid.n_cells)

    def most_violated(violation: np.ndarray) -> int:
        # quantize before the argmax so symmetric configurations tie exactly
        # and the lowest curve index wins, independent of summation order
        quantum = 1e-9 * max(float(violation.max()), tol)
        return int(np.argmax(np.round(violation / quantum)))

    def budget_error() -> SolverBudgetExceeded:
        worst = integrals.min() if m else 0.0
        best = None
        if worst > 0.0:
            best = float(np.sum(w * (rho / worst) ** p))
        return SolverBudgetExceeded(
            f"no convergence within {budget} dual iterations "
            f"(violation {1.0 - worst:.3g} > tol {tol:g})", best)

    for _ in range(m + 1):
        A_act = A_full[active]
        lam, rho, evals = _dual_ascent(A_act, w, p, lam, inner_tol,
                                       min(budget - total_evals, 50_000))
        total_evals += evals
        if total_evals >= budget:
            integrals = A_full @ rho
            raise budget_error()
        integrals = A_full @ rho
        violation = 1.0 - integrals
        worst = most_violated(violation)
        if violation[worst] < tol:
            break
        if worst in active:
            # active subproblem not tight enough: solve it harder
            lam, rho, evals = _dual_ascent(A_act, w, p, lam, 0.1 * inner_tol,
                                           min(budget - total_evals, 50_000))
            total_evals += evals
            integrals = A_full @ rho
            violation = 1.0 - integrals
            worst = most_violated(violation)
            if violation[worst] < tol:
                break
            if total_evals >= budget or worst in active:
                raise budget_error()
        order = np.argsort(-np.round(violation / (1e-9 * max(float(violation.max()), tol))),
                           kind="stable")
        added = 0
        for j in order:
            j = int(j)
            if violation[j] < tol or added >= grow:
                break
            if j not in active:
                active.append(j)
                lam = np.append(lam, 1.0)
                added += 1
    else:
        raise budget_error()

    scale = integrals.min()
    rho_star = rho / scale
    value = float(np.sum(w * rho_star ** p))
    residual = float(max(0.0, 1.0 - (A_full @ rho_star).min()))
    density = GridDensity(grid, rho_star.reshape(grid.shape))
    return ModulusResult(value, density, total_evals, len(active), residual, m)


def ring_grid(ring: SphericalRing, resolution: int, family_size: int,
              match: float = 1.0) -> GridSpec:
    """Square grid centered on a ring, sized so cells match the curve spacing.

    A family of `family_size` curves equidistributed over directions is spaced
    2 pi r_outer / family_size apart (n = 2) at the outer sphere.  Cells finer
    than that spacing let the minimizing density collapse onto per-curve tubes
    and undershoot badly, so the box half-width is grown (never below the ring
    itself) until the cell size equals `match` times the spacing.
    """
    r2 = ring.r_outer
    n = ring.dim
    if n == 2:
        spacing = 2.0 * math.pi * r2 / family_size
    elif n == 3:
        spacing = math.sqrt(4.0 * math.pi * r2 * r2 / family_size)
    else:
        raise ValueError("ring grids support dimensions 2 and 3 only")
    half = max(r2 * (1.0 + 2.0 / resolution), match * spacing * resolution / 2.0)
    c = ring.center_array()
    return GridSpec(tuple(c - half), tuple(c + half), (resolution,) * n)


def family_grid(family: CurveFamily, resolution: int, pad: float = 0.05) -> GridSpec:
    """Bounding-box grid around a family, padded by a fraction of its extent."""
    pts = np.vstack([c.vertices for c in family])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = np.maximum(hi - lo, 1e-12)
    return GridSpec(tuple(lo - pad * extent), tuple(hi + pad * extent),
                    (resolution,) * family.dim)


# ---------------------------------------------------------------------------
# Weighted right-hand-side quadrature
# ---------------------------------------------------------------------------

def _box_quadrature(lo: np.ndarray, hi: np.ndarray, resolution: int,
                    integrand: Callable[[np.ndarray], np.ndarray], sub: int) -> float:
    """Composite midpoint rule with sub^n sample points per cell."""
    n = len(lo)
    h = (hi - lo) / resolution
    axes = []
    for a in range(n):
        cell = lo[a] + h[a] * np.arange(resolution)
        offs = h[a] * (np.arange(sub) + 0.5) / sub
        axes.append((cell[:, None] + offs[None, :]).ravel())
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(integrand(pts), dtype=float)
    return float(vals.sum()) * float(np.prod(h)) / sub ** n


def weighted_rhs_integral(Q, eta: EtaFunction, ring: SphericalRing,
                          domain_mask: Callable[[np.ndarray], np.ndarray] | None = None,
                          n: int | None = None, resolution: int = 128,
                          rel_tol: float = 1e-3, max_refinements: int = 5) -> float:
    """Integral of Q(y) eta(|y - y0|)^n over the ring intersected with a mask.

    Q is a scalar or a callable on (m, n) point arrays; the mask restricts to the
    mapped domain.  Midpoint quadrature over the ring's bounding box; cells that
    straddle the ring or mask boundary are handled by 16 sub-samples per cell,
    and the grid is refined until the relative change drops below rel_tol.
    """
    n = ring.dim if n is None else n
    ok, integ = admissible_check(eta, eta.r1, eta.r2)
    if not ok:
        raise ValueError(f"eta is not admissible (integral {integ:.6g} < 1)")
    qfun = Q if callable(Q) else (lambda pts, _v=float(Q): np.full(len(pts), _v))
    c = ring.center_array()
    sub = max(2, int(round(16 ** (1.0 / ring.dim))))

    def integrand(pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts - c, axis=1)
        inside = (r > ring.r_inner) & (r < ring.r_outer)
        if domain_mask is not None:
            inside &= np.asarray(domain_mask(pts), dtype=bool)
        out = np.zeros(len(pts))
        if np.any(inside):
            out[inside] = qfun(pts[inside]) * eta(r[inside]) ** n
        return out

    lo = c - ring.r_outer
    hi = c + ring.r_outer
    value = _box_quadrature(lo, hi, resolution, integrand, sub)
    for _ in range(max_refinements):
        if (2 * resolution * sub) ** ring.dim > 8_000_000:
            break
        resolution *= 2
        refined = _box_quadrature(lo, hi, resolution, integrand, sub)
        done = abs(refined - value) <= rel_tol * max(abs(refined), 1e-300)
        value = refined
        if done:
            break
    return value


def masked_ring_volume(ring: SphericalRing,
                       domain_mask: Callable[[np.ndarray], np.ndarray] | None = None,
                       resolution: int = 128, rel_tol: float = 1e-3) -> float:
    """Volume of the ring intersected with a mask, by the same quadrature."""
    eta = uniform_eta(ring.r_inner, ring.r_outer)
    scale = (ring.r_outer - ring.r_inner) ** ring.dim  # cancel eta^n
    return scale * weighted_rhs_integral(1.0, eta, ring, domain_mask,
                                         resolution=resolution, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# Blow-up experiment
# ---------------------------------------------------------------------------

def blowup_family(separation: float, grid: GridSpec, eps0: float = 1.0,
                  far_fraction: float = 0.9, arcs_per_octave: int = 8,
                  center: Sequence[float] = (0.0, 0.0),
                  vertex_budget: int = 128) -> CurveFamily:
    """Circular arcs joining two radial segments that approach the puncture.

    The segments sit on the positive and negative first axis, reaching from the
    separation radius out to far_fraction * eps0 inside the punctured ball.  The
    arc radii decrease geometrically (arcs_per_octave per factor two) down to
    max(separation, half a grid cell), so families at smaller separations are
    supersets of families at larger ones.
    """
    c = np.asarray(center, dtype=float)
    if len(c) != 2:
        raise ValueError("the blow-up experiment is planar")
    h_min = float(np.min(grid.spacing))
    floor = max(separation, 0.5 * h_min)
    ratio = 2.0 ** (-1.0 / arcs_per_octave)
    curves = []
    r = far_fraction * eps0
    while r >= floor and r > 0.0:
        th = np.linspace(0.0, math.pi, vertex_budget)
        upper = c + np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        lower = c + np.stack([r * np.cos(th), -r * np.sin(th)], axis=1)
        curves.append(Curve(upper))
        curves.append(Curve(lower))
        r *= ratio
    label = (f"arcs joining axis segments, separation={separation:g}, "
             f"floor={floor:g}, {len(curves)} curves")
    return CurveFamily(curves, label)


def blowup_experiment(separation: float, resolution: int, eps0: float = 1.0,
                      far_fraction: float = 0.9, arcs_per_octave: int = 8,
                      tol: float = 3e-3, budget: int = DEFAULT_BUDGET,
                      center: Sequence[float] = (0.0, 0.0)) -> float:
    """Discrete modulus of curves joining two continua that run toward a puncture.

    As the separation shrinks the segments extend toward the puncture, the
    family gains arcs, and the modulus grows without bound in the limit.
    """
    if separation < 0:
        raise ValueError("separation must be >= 0")
    c = np.asarray(center, dtype=float)
    grid = GridSpec(tuple(c - eps0), tuple(c + eps0), (resolution, resolution))
    family = blowup_family(separation, grid, eps0, far_fraction, arcs_per_octave,
                           center=c)
    result = discrete_modulus(family, grid, p=2.0, tol=tol, budget=budget)
    return result.value
