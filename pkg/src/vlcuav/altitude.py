"""Closed-form optimal flight altitude and an independent grid-search oracle.

The serving radius squared, as a function of altitude h, is

    f(h) = coeff * h^(2(m+1)/(m+3)) - h^2

which has a single interior maximum.  Flying at the altitude maximizing f
lets the UAV serve each GU from as far away as possible, which minimizes
horizontal travel.  The optimum is either that stationary point or the
minimum safe altitude, whichever yields the larger radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import VlcParams, lambertian_order, radius_coeff
from .errors import InvalidParameterError


@dataclass(frozen=True)
class AltitudeProblem:
    """Inputs of the altitude optimization.

    radius_coeff     : power-law coefficient of the squared-radius function
    lambertian_order : LED beam shape exponent m (>= 1)
    h_min            : minimum safe altitude, m
    h_max            : search cap for the grid oracle only, m
    """

    radius_coeff: float
    lambertian_order: float
    h_min: float
    h_max: float = 200.0

    def __post_init__(self):
        if self.radius_coeff <= 0.0:
            raise InvalidParameterError("radius_coeff must be positive")
        if self.lambertian_order < 1.0:
            raise InvalidParameterError("lambertian_order must be >= 1")
        if not 0.0 < self.h_min < self.h_max:
            raise InvalidParameterError("need 0 < h_min < h_max")


def problem_from_channel(
    params: VlcParams, h_min: float, h_max: float = 200.0
) -> AltitudeProblem:
    """Derive the altitude problem from the link budget."""
    return AltitudeProblem(
        radius_coeff=radius_coeff(params),
        lambertian_order=lambertian_order(params),
        h_min=h_min,
        h_max=h_max,
    )


def squared_radius(problem: AltitudeProblem, h):
    """f(h) = coeff * h^(2(m+1)/(m+3)) - h^2 for scalar or array h > 0."""
    m = problem.lambertian_order
    h = np.asarray(h, dtype=np.float64)
    out = problem.radius_coeff * h ** (2.0 * (m + 1.0) / (m + 3.0)) - h * h
    return float(out) if out.ndim == 0 else out


def stationary_points(problem: AltitudeProblem) -> tuple[float, float | None]:
    """Zeros of f' and f'': (h0, h00); h00 is None when m == 1.

    h0 is the unique interior maximizer of f.  For m > 1, f is convex below
    h00 and concave above it, with h00 <= h0; for m == 1, f'' is constant -2
    and f is globally concave.
    """
    m = problem.lambertian_order
    lam = problem.radius_coeff
    if m < 1.0:
        raise InvalidParameterError("lambertian_order must be >= 1")
    h0 = ((m + 3.0) / (lam * (m + 1.0))) ** (-(m + 3.0) / 4.0)
    # m within float noise of 1 (e.g. a 60-degree semi-angle) hits the same
    # degeneracy: the curvature term vanishes and f is globally concave
    if m <= 1.0 + 1e-12:
        return h0, None
    h00 = ((m + 3.0) ** 2 / (lam * (m * m - 1.0))) ** (-(m + 3.0) / 4.0)
    return h0, h00


def optimal_altitude(problem: AltitudeProblem) -> float:
    """Altitude maximizing the serving radius, clamped to the safety minimum.

    Returns h_min when h_min >= h0 or f(h_min) >= f(h0), else h0.  Ties go to
    h_min (shorter vertical travel).
    """
    h0, _ = stationary_points(problem)
    if problem.h_min >= h0:
        return problem.h_min
    if squared_radius(problem, problem.h_min) >= squared_radius(problem, h0):
        return problem.h_min
    return h0


def grid_argmax(
    problem: AltitudeProblem, step: float = 0.01, *, budget: int = 2_000_000
) -> float:
    """Brute-force oracle: the grid point in [h_min, h_max] maximizing f.

    The grid is h_min + k*step; ties break toward smaller h.  When the grid
    exceeds `budget` points, the search refines coarse-to-fine on the same
    lattice (sound here because f has at most one interior local maximum and
    its curvature is bounded, so the peak is never narrower than the coarse
    spacing); results are identical to the exhaustive scan.
    """
    if step <= 0.0:
        raise InvalidParameterError("step must be positive")
    n = int(math.floor((problem.h_max - problem.h_min) / step + 1e-12))

    def values_at(indices: np.ndarray) -> np.ndarray:
        return squared_radius(problem, problem.h_min + indices * step)

    best_idx = -1
    best_val = -math.inf
    windows = [(0, n)]
    while windows:
        lo, hi = windows.pop()
        count = hi - lo + 1
        if count <= budget:
            idx = np.arange(lo, hi + 1, dtype=np.float64)
            vals = values_at(idx)
            j = int(np.argmax(vals))
            cand_idx, cand_val = int(idx[j]), float(vals[j])
            if cand_val > best_val or (cand_val == best_val and cand_idx < best_idx):
                best_idx, best_val = cand_idx, cand_val
            continue
        stride = int(math.ceil(count / budget))
        idx = np.arange(lo, hi + 1, stride, dtype=np.int64)
        if idx[-1] != hi:
            idx = np.append(idx, hi)
        vals = values_at(idx.astype(np.float64))
        # refine around the best coarse candidates and both endpoints
        top = np.argsort(vals, kind="stable")[-4:]
        for t in top:
            center = int(idx[t])
            windows.append((max(lo, center - 2 * stride), min(hi, center + 2 * stride)))
        windows.append((lo, min(hi, lo + 2 * stride)))
        windows.append((max(lo, hi - 2 * stride), hi))
    return problem.h_min + best_idx * step
