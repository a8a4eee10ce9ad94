"""Potential families with the bounded + L^p split and the asymptotic bottom.

Every potential is stored as two sampled fields on a grid: ``v_infty`` (the
essentially bounded part) and ``v_zero`` (the L^p part, typically compactly
supported or decaying).  The asymptotic bottom

    alpha_inf = lim_{R -> inf} essinf_{|x| >= R} v_infty(x)

is estimated by nodal minima over annuli at an increasing radii schedule; the
limit cannot be taken on a finite box, so the whole diagnostic sequence is
reported alongside the value at the largest radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Grid, GridError


class PotentialError(ValueError):
    """Invalid potential construction or query."""


@dataclass
class PotentialSpec:
    """Sampled potential V = v_infty + v_zero with split metadata.

    p is the integrability exponent of the v_zero part (p >= 2 in 1-D,
    p > 2 in 2-D); q = 2p/(p-2) for p > 2 and infinity at p = 2.
    """

    grid: Grid
    family: str
    v_infty: np.ndarray
    v_zero: np.ndarray
    p: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v_infty = self.grid.check_field(self.v_infty)
        self.v_zero = self.grid.check_field(self.v_zero)
        if self.grid.ndim == 1:
            if self.p < 2:
                raise PotentialError(f"p must be >= 2 in 1-D, got {self.p}")
        else:
            if self.p <= 2:
                raise PotentialError(f"p must be > 2 in 2-D, got {self.p}")

    @property
    def v(self) -> np.ndarray:
        """Total sampled potential."""
        return self.v_infty + self.v_zero

    @property
    def q(self) -> float:
        return np.inf if self.p == 2 else 2.0 * self.p / (self.p - 2.0)

    def bound_infty(self) -> float:
        """max |v_infty| over the grid."""
        return float(np.max(np.abs(self.v_infty)))


def split_kato_rellich(
    grid: Grid,
    evaluator: Callable[[np.ndarray], np.ndarray],
    cutoff_radius: float,
    center: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split a sampled potential into (v_infty, v_zero) by a ball cutoff.

    v_zero = V inside the ball of cutoff_radius around center (0 outside),
    v_infty = V outside (0 inside); their sum reproduces V at every node.
    Raises if the outside part is not finite (split invalid).
    """
    if cutoff_radius <= 0:
        raise PotentialError(f"cutoff_radius must be positive, got {cutoff_radius}")
    pts = grid.points
    if center is not None:
        pts = pts - np.asarray(center, dtype=float).reshape(1, -1)
    r = np.sqrt(np.sum(pts**2, axis=1))
    values = np.asarray(evaluator(grid.points), dtype=float)
    values = values.ravel()
    if values.shape != (grid.num_nodes,):
        raise PotentialError("evaluator did not return one value per node")
    inside = r <= cutoff_radius
    v_zero = np.where(inside, values, 0.0)
    v_infty = np.where(inside, 0.0, values)
    if not np.all(np.isfinite(v_infty)):
        raise PotentialError("v_infty is unbounded on the grid; split invalid")
    if not np.all(np.isfinite(v_zero)):
        raise PotentialError("v_zero has non-finite samples inside the cutoff ball")
    return v_infty, v_zero


def _coulomb_alpha_range(ndim: int) -> float:
    return 0.5 if ndim == 1 else 1.0


def make_potential(grid: Grid, family: str, **params) -> PotentialSpec:
    """Construct a PotentialSpec from a named family.

    Families:
        constant(c):            V = c, assigned wholly to v_infty.
        poschl_teller(ell, offset=0): V = -ell(ell+1)/cosh^2 |x| + offset
                                (bounded, wholly v_infty).
        square_well(depth, width): V = depth inside the centered box of the
                                given side length, 0 outside; the well is the
                                compactly supported v_zero part.
        coulomb(c, alpha, center=0, cutoff_radius=1, policy="offset"):
                                V = c / |x - center|^alpha with the unit-ball
                                split v_zero = chi V, v_infty = (1 - chi) V.
        custom(evaluator, cutoff_radius, center=None): arbitrary evaluator
                                split by a ball cutoff.

    The Coulomb singularity policy is either "offset" (move the center by
    half a grid spacing along the first axis, the default) or "cap" (clip
    |V| at spacing**(-alpha)).
    """
    p_default = 2.0 if grid.ndim == 1 else 4.0
    p = float(params.pop("p", p_default))

    if family == "constant":
        c = float(params.pop("c", 0.0))
        v_inf = np.full(grid.num_nodes, c)
        v0 = np.zeros(grid.num_nodes)
        return PotentialSpec(grid, family, v_inf, v0, p, {"c": c})

    if family == "poschl_teller":
        ell = float(params.pop("ell"))
        offset = float(params.pop("offset", 0.0))
        if ell <= 0:
            raise PotentialError(f"ell must be positive, got {ell}")
        r = grid.radii
        v_inf = -ell * (ell + 1.0) / np.cosh(r) ** 2 + offset
        v0 = np.zeros(grid.num_nodes)
        return PotentialSpec(grid, family, v_inf, v0, p, {"ell": ell, "offset": offset})

    if family == "square_well":
        depth = float(params.pop("depth"))
        width = float(params.pop("width"))
        if width <= 0:
            raise PotentialError(f"well width must be positive, got {width}")
        half = width / 2.0
        inside = np.all(np.abs(grid.points) <= half, axis=1)
        v0 = np.where(inside, depth, 0.0)
        v_inf = np.zeros(grid.num_nodes)
        return PotentialSpec(
            grid, family, v_inf, v0, p, {"depth": depth, "width": width}
        )

    if family == "coulomb":
        c = float(params.pop("c"))
        alpha = float(params.pop("alpha"))
        center = np.asarray(params.pop("center", np.zeros(grid.ndim)), dtype=float)
        cutoff = float(params.pop("cutoff_radius", 1.0))
        policy = params.pop("policy", "offset")
        amax = _coulomb_alpha_range(grid.ndim)
        if not 0 <= alpha < amax:
            raise PotentialError(
                f"coulomb exponent alpha must lie in [0, {amax}) for "
                f"ndim={grid.ndim}, got {alpha}"
            )
        if p * alpha >= grid.ndim:
            raise PotentialError(
                f"p*alpha = {p * alpha} >= ndim; v_zero would not be L^p"
            )
        center = center.reshape(-1)
        if center.size != grid.ndim:
            raise PotentialError("center has wrong dimension")
        h = grid.spacing
        node_dist = np.sqrt(np.sum((grid.points - center) ** 2, axis=1))
        eff_center = center.copy()
        if policy == "offset":
            if np.min(node_dist) < h * 1e-9:
                eff_center[0] += h / 2.0
        elif policy != "cap":
            raise PotentialError(f"unknown singular-node policy {policy!r}")

        def evaluator(pts):
            d = np.sqrt(np.sum((pts - eff_center) ** 2, axis=1))
            with np.errstate(divide="ignore"):
                vals = c / d**alpha if alpha > 0 else np.full(d.shape, c)
            if policy == "cap":
                cap = h ** (-alpha) * abs(c) if alpha > 0 else abs(c)
                vals = np.clip(vals, -cap, cap)
            return vals

        v_inf, v0 = split_kato_rellich(grid, evaluator, cutoff, eff_center)
        return PotentialSpec(
            grid,
            family,
            v_inf,
            v0,
            p,
            {
                "c": c,
                "alpha": alpha,
                "center": eff_center.tolist(),
                "cutoff_radius": cutoff,
                "policy": policy,
            },
        )

    if family == "custom":
        evaluator = params.pop("evaluator")
        cutoff = float(params.pop("cutoff_radius", 1.0))
        center = params.pop("center", None)
        v_inf, v0 = split_kato_rellich(grid, evaluator, cutoff, center)
        return PotentialSpec(grid, family, v_inf, v0, p, {"cutoff_radius": cutoff})

    raise PotentialError(f"unknown potential family {family!r}")


@dataclass
class AsymptoticBottom:
    """Estimated asymptotic bottom of v_infty with its diagnostic sequence."""

    value: float
    radii: list
    minima: list
    converged: bool


def asymptotic_bottom(
    spec: PotentialSpec,
    radii_schedule: Sequence[float] | None = None,
    convergence_tol: float = 1e-6,
) -> AsymptoticBottom:
    """Nodal-minimum estimate of alpha_inf over an increasing radii schedule.

    Returns the minimum of sampled v_infty over |x| >= R at the largest R,
    plus the full (nondecreasing) sequence; `converged` reports whether the
    last two entries agree to convergence_tol.
    """
    grid = spec.grid
    L = grid.half_width
    if radii_schedule is None:
        radii_schedule = [0.5 * L, 0.7 * L, 0.85 * L, 0.95 * L]
    radii = [float(r) for r in radii_schedule]
    if len(radii) == 0:
        raise PotentialError("radii_schedule is empty")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise PotentialError("radii_schedule must be strictly increasing")
    if radii[-1] > L:
        raise PotentialError(f"largest radius {radii[-1]} exceeds half-width {L}")
    minima = []
    for R in radii:
        mask = grid.radii >= R
        if not np.any(mask):
            raise PotentialError(f"annulus |x| >= {R} contains no grid nodes")
        minima.append(float(np.min(spec.v_infty[mask])))
    converged = (
        len(minima) < 2 or abs(minima[-1] - minima[-2]) <= convergence_tol
    )
    return AsymptoticBottom(
        value=minima[-1], radii=radii, minima=minima, converged=converged
    )


def tail_lp_norm(spec: PotentialSpec, radius: float, p: float | None = None) -> float:
    """(sum_{|x| >= radius} w |v_zero|^p)^(1/p)."""
    grid = spec.grid
    if p is None:
        p = spec.p
    if radius > grid.half_width:
        raise GridError(
            f"radius {radius} exceeds the box half-width {grid.half_width}"
        )
    mask = grid.radii >= radius
    return float(
        np.sum(grid.weights[mask] * np.abs(spec.v_zero[mask]) ** p) ** (1.0 / p)
    )
