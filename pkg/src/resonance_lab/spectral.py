"""Hamiltonian assembly, low spectrum, Morse counts and spectral projections.

The operator A = -Δ_h + V is self-adjoint in the trapezoid inner product but
not a symmetric matrix (the divergence-form stencil carries 1/w factors at
boundary nodes).  All eigensolves and linear solves therefore run on the
similarity transform S = W^{1/2} A W^{-1/2}, which is genuinely symmetric;
eigenvectors map back through W^{-1/2} and come out quadrature-orthonormal.

Eigenvalues are only meaningful below the asymptotic bottom of the potential:
the truncated box discretizes the continuum into a cloud of closely spaced
spurious eigenvalues above it, so the solver works under a ceiling (default
alpha_inf).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid, GridError
from .potential import AsymptoticBottom, PotentialSpec, asymptotic_bottom

DENSE_FALLBACK_NODES = 2000


class SpectralError(RuntimeError):
    """Eigensolver or projection construction failure."""


class ResonantLambdaError(ValueError):
    """A query landed within clustering tolerance of an eigenvalue."""


class HamiltonianOperator:
    """Sparse discretization of A = -Δ + V on a grid.

    Exposes both the field-space action (`apply`) and the symmetrized matrix
    used by eigensolvers and implicit steps.  The asymptotic bottom of the
    potential is estimated once at assembly and cached.
    """

    def __init__(self, grid: Grid, potential: PotentialSpec,
                 alpha_schedule: Sequence[float] | None = None):
        if potential.grid is not grid:
            raise GridError("potential was sampled on a different grid")
        self.grid = grid
        self.potential = potential
        v = potential.v
        self.v_samples = v
        self.matrix = (grid.neg_laplacian_matrix() + sp.diags(v)).tocsr()
        self.sym_matrix = (grid.symmetrized_stiffness() + sp.diags(v)).tocsc()
        self.alpha_bottom: AsymptoticBottom = asymptotic_bottom(
            potential, alpha_schedule
        )
        self.alpha_inf = self.alpha_bottom.value
        self._gersh = None

    def apply(self, u: np.ndarray) -> np.ndarray:
        """A u as a flat field."""
        u = self.grid.check_field(u)
        return self.matrix @ u

    def quadratic_form(self, u: np.ndarray) -> float:
        """<A u, u> in the quadrature inner product."""
        u = self.grid.check_field(u)
        return self.grid.inner(self.apply(u), u)

    def gershgorin_lower(self) -> float:
        """Gershgorin lower bound on the spectrum of the symmetrized matrix."""
        if self._gersh is None:
            S = self.sym_matrix.tocsr()
            diag = S.diagonal()
            absrow = np.asarray(np.abs(S).sum(axis=1)).ravel() - np.abs(diag)
            self._gersh = float(np.min(diag - absrow))
        return self._gersh

    def spectrum_lower_bound(self) -> float:
        """Tightest cheap lower bound: -Δ_h is positive semidefinite, so the
        spectrum sits above min V; Gershgorin is kept as a fallback."""
        return max(self.gershgorin_lower(), float(np.min(self.v_samples)))


def assemble_hamiltonian(
    grid: Grid,
    potential: PotentialSpec,
    alpha_schedule: Sequence[float] | None = None,
) -> HamiltonianOperator:
    """Assemble A = -Δ_h + diag(V) with a cached asymptotic-bottom estimate."""
    return HamiltonianOperator(grid, potential, alpha_schedule)


@dataclass
class SpectralData:
    """Eigenpairs of A below a ceiling, clustered into multiplets.

    eigenvalues are sorted ascending; eigenfields are quadrature-orthonormal
    columns (field frame).  multiplets is a list of (center, [indices]) with
    indices into the eigenvalue array.
    """

    operator: HamiltonianOperator
    ceiling: float
    eigenvalues: np.ndarray
    eigenfields: np.ndarray
    residuals: np.ndarray
    multiplets: list
    cluster_tol: float
    tol_eig: float

    @property
    def alpha_inf(self) -> float:
        return self.operator.alpha_inf

    def multiplet_of(self, lam0: float) -> tuple[float, list]:
        """The multiplet nearest lam0, within a safe snapping radius.

        The radius is the larger of cluster_tol and a quarter of the
        distance to the rest of the spectrum (or to the ceiling when the
        multiplet is alone), so discretization shifts of the eigenvalue are
        absorbed while genuinely off-spectrum values are rejected.
        """
        if not self.multiplets:
            raise SpectralError("no eigenvalues were computed below the ceiling")
        centers = np.array([c for c, _ in self.multiplets])
        j = int(np.argmin(np.abs(centers - lam0)))
        center, idx = self.multiplets[j]
        others = np.abs(centers - center)
        others = others[others > 0]
        room = float(np.min(others)) if others.size else abs(self.ceiling - center)
        guard = max(self.cluster_tol, 0.25 * room)
        if abs(center - lam0) > guard:
            raise SpectralError(
                f"lambda0 = {lam0} is not in the computed spectrum "
                f"{centers.tolist()}"
            )
        return center, idx

    def select_lambda0(self, selector) -> float:
        """Resolve a λ0 selector: ('index', k) picks the k-th multiplet
        (0-based, ascending), ('value', v) the multiplet nearest v."""
        kind, arg = selector
        if kind == "index":
            k = int(arg)
            if not 0 <= k < len(self.multiplets):
                raise SpectralError(
                    f"multiplet index {k} out of range ({len(self.multiplets)} found)"
                )
            return self.multiplets[k][0]
        if kind == "value":
            return self.multiplet_of(float(arg))[0]
        raise SpectralError(f"unknown lambda0 selector kind {kind!r}")


def _cluster(eigenvalues: np.ndarray, tol: float) -> list:
    clusters = []
    start = 0
    for i in range(1, len(eigenvalues) + 1):
        if i == len(eigenvalues) or eigenvalues[i] - eigenvalues[i - 1] > tol:
            idx = list(range(start, i))
            clusters.append((float(np.mean(eigenvalues[start:i])), idx))
            start = i
    return clusters


def eigenpairs_below(
    op: HamiltonianOperator,
    ceiling: float | None = None,
    tol_eig: float = 1e-8,
    cluster_tol: float | None = None,
    max_count: int = 64,
    ceiling_margin: float = 1e-6,
) -> SpectralData:
    """All discrete eigenvalues of A below the ceiling, with eigenfields.

    The ceiling defaults to the cached alpha_inf estimate and may not exceed
    it by more than ceiling_margin (above it the box fills with spurious
    continuum states).  Uses shift-invert Lanczos with an adaptively grown
    block; dense tridiagonal/symmetric fallback for small grids.  Raises
    SpectralError if max_count eigenvalues are found below the ceiling or a
    residual exceeds tol_eig.
    """
    grid = op.grid
    if ceiling is None:
        ceiling = op.alpha_inf
    scale = max(1.0, abs(op.alpha_inf), abs(ceiling), abs(op.spectrum_lower_bound()))
    if ceiling > op.alpha_inf + ceiling_margin * scale:
        raise SpectralError(
            f"ceiling {ceiling} exceeds alpha_inf estimate {op.alpha_inf}; "
            "eigenvalues up there are discretization artifacts"
        )
    if tol_eig <= 0:
        raise SpectralError("tol_eig must be positive")

    M = grid.num_nodes
    S = op.sym_matrix
    if M <= DENSE_FALLBACK_NODES:
        if grid.ndim == 1:
            Sc = S.tocsr()
            vals, vecs = sla.eigh_tridiagonal(
                Sc.diagonal(), Sc.diagonal(-1), select="v",
                select_range=(op.spectrum_lower_bound() - 1.0, ceiling),
            )
        else:
            vals, vecs = np.linalg.eigh(S.toarray())
            keep = vals < ceiling
            vals, vecs = vals[keep], vecs[:, keep]
        if len(vals) > max_count:
            raise SpectralError(
                f"{len(vals)} eigenvalues below the ceiling (max {max_count}); "
                "suspected spurious continuum states"
            )
    else:
        sigma = op.spectrum_lower_bound() - 0.1 * scale
        # fixed Lanczos start vector: ARPACK's default draws from the global
        # RNG and would break byte-identical reruns
        v0 = np.random.default_rng(0x5EED).standard_normal(M)
        k = min(8, M - 2)
        while True:
            try:
                vals, vecs = spla.eigsh(S, k=k, sigma=sigma, which="LM", v0=v0)
            except Exception as exc:  # noqa: BLE001
                raise SpectralError(f"eigensolver failed: {exc}") from exc
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            if vals[-1] >= ceiling or k >= min(max_count, M - 2):
                break
            k = min(2 * k, max_count, M - 2)
        keep = vals < ceiling
        if np.count_nonzero(keep) >= max_count:
            raise SpectralError(
                f"hit max_count = {max_count} eigenvalues below the ceiling; "
                "suspected spurious continuum states"
            )
        vals, vecs = vals[keep], vecs[:, keep]

    # back to the field frame; columns are W-orthonormal by construction
    inv_sqrt_w = 1.0 / np.sqrt(grid.weights)
    fields = vecs * inv_sqrt_w[:, None]

    if cluster_tol is None:
        cluster_tol = 1e-6 * scale
    multiplets = _cluster(vals, cluster_tol) if len(vals) else []

    # re-orthonormalize inside each multiplet (discretization splits exact
    # degeneracies; cross-cluster orthogonality is automatic)
    for _, idx in multiplets:
        if len(idx) > 1:
            block = vecs[:, idx]
            qblock, _ = np.linalg.qr(block)
            vecs[:, idx] = qblock
            fields[:, idx] = qblock * inv_sqrt_w[:, None]

    residuals = np.empty(len(vals))
    for i in range(len(vals)):
        phi = fields[:, i]
        residuals[i] = grid.norm(op.apply(phi) - vals[i] * phi)
        if residuals[i] > tol_eig:
            raise SpectralError(
                f"eigenpair {i} residual {residuals[i]:.3e} exceeds tol_eig {tol_eig}"
            )

    return SpectralData(
        operator=op,
        ceiling=float(ceiling),
        eigenvalues=vals,
        eigenfields=fields,
        residuals=residuals,
        multiplets=multiplets,
        cluster_tol=float(cluster_tol),
        tol_eig=float(tol_eig),
    )


@dataclass
class MorseCount:
    """Total multiplicity below λ and its pointed-sphere label."""

    k: int
    conley_label: str


def morse_count(data: SpectralData, lam: float) -> MorseCount:
    """k(λ) = total multiplicity of computed eigenvalues strictly below λ.

    λ must sit below the ceiling and at distance > cluster_tol from every
    computed eigenvalue (the index is undefined on the spectrum).
    """
    if lam >= data.ceiling:
        raise ResonantLambdaError(
            f"lambda = {lam} is not below the ceiling {data.ceiling}"
        )
    if len(data.eigenvalues) and np.min(np.abs(data.eigenvalues - lam)) <= data.cluster_tol:
        raise ResonantLambdaError(
            f"resonant lambda: {lam} is within cluster_tol of the spectrum"
        )
    k = int(np.count_nonzero(data.eigenvalues < lam))
    return MorseCount(k=k, conley_label=f"Sigma^{k}")


class Projections:
    """Kernel / below / above spectral projections at a selected eigenvalue.

    P projects onto X0 = Ker(A - λ0), Q_minus onto the span of eigenfields
    strictly below λ0, Q_plus is the remainder I - P - Q_minus (so the
    resolution of identity is exact as actions).  All three are orthogonal
    in the quadrature inner product.  The window half-width delta doubles as
    the spectral gap constant c.
    """

    def __init__(self, data: SpectralData, lambda0: float, delta: float,
                 kernel_idx: list, below_idx: list):
        op = data.operator
        self.grid = op.grid
        self.operator = op
        self.lambda0 = float(lambda0)
        self.delta = float(delta)
        self.kernel_fields = data.eigenfields[:, kernel_idx]
        self.below_fields = (
            data.eigenfields[:, below_idx]
            if below_idx
            else np.zeros((self.grid.num_nodes, 0))
        )
        sqrt_w = np.sqrt(self.grid.weights)
        self._psi_kernel = self.kernel_fields * sqrt_w[:, None]
        self._psi_below = self.below_fields * sqrt_w[:, None]
        self._resolvent_cache: dict[float, object] = {}

    @property
    def dim_kernel(self) -> int:
        return self.kernel_fields.shape[1]

    @property
    def dim_below(self) -> int:
        return self.below_fields.shape[1]

    @property
    def gap_constant(self) -> float:
        """Lower bound c on |λ_i - λ| over the complement for |λ-λ0| <= δ."""
        return self.delta

    def project_kernel(self, u: np.ndarray) -> np.ndarray:
        """P u."""
        u = self.grid.check_field(u)
        coeff = self._psi_kernel.T @ (np.sqrt(self.grid.weights) * u)
        return self.kernel_fields @ coeff

    def project_below(self, u: np.ndarray) -> np.ndarray:
        """Q_minus u."""
        u = self.grid.check_field(u)
        if self.dim_below == 0:
            return np.zeros_like(u)
        coeff = self._psi_below.T @ (np.sqrt(self.grid.weights) * u)
        return self.below_fields @ coeff

    def project_above(self, u: np.ndarray) -> np.ndarray:
        """Q_plus u = u - P u - Q_minus u."""
        return self.grid.check_field(u) - self.project_kernel(u) - self.project_below(u)

    def project_complement(self, u: np.ndarray) -> np.ndarray:
        """Q u = (I - P) u."""
        return self.grid.check_field(u) - self.project_kernel(u)


def build_projections(
    data: SpectralData, lambda0: float, delta_request: float | None = None
) -> Projections:
    """Build P, Q_minus, Q_plus at λ0 with an admissible gap δ.

    δ = min(delta_request, half the distance to the rest of the computed
    spectrum, half of alpha_inf - λ0 when λ0 sits below alpha_inf).  Raises
    if λ0 is not a computed eigenvalue or the gap collapses.
    """
    center, kernel_idx = data.multiplet_of(lambda0)
    below_idx = [
        i for c, idx in data.multiplets if c < center - data.cluster_tol for i in idx
    ]
    candidates = []
    others = [abs(c - center) for c, _ in data.multiplets if c != center]
    if others:
        candidates.append(0.5 * min(others))
    if center < data.alpha_inf:
        candidates.append(0.5 * (data.alpha_inf - center))
    if delta_request is not None:
        if delta_request <= 0:
            raise SpectralError(f"delta_request must be positive, got {delta_request}")
        candidates.append(float(delta_request))
    if not candidates:
        raise SpectralError(
            "cannot choose delta: no other spectrum computed, lambda0 is not "
            "below alpha_inf, and no delta_request was given"
        )
    delta = min(candidates)
    if delta <= 0:
        raise SpectralError(
            f"spectral gap collapsed at lambda0 = {center} (delta = {delta}); "
            "the grid is too coarse to separate the multiplet"
        )
    return Projections(data, center, delta, kernel_idx, below_idx)


class _BorderedResolvent:
    """LU factorization of the kernel-deflated (A - λ) solve at one λ."""

    def __init__(self, op: HamiltonianOperator, proj: Projections, lam: float):
        n = op.grid.num_nodes
        psi = proj._psi_kernel
        k = psi.shape[1]
        block = sp.bmat(
            [[op.sym_matrix - lam * sp.identity(n), sp.csc_matrix(psi)],
             [sp.csc_matrix(psi.T), None]],
            format="csc",
        )
        self.lu = spla.splu(block)
        self.n = n
        self.k = k


def apply_resolvent_complement(
    op: HamiltonianOperator,
    proj: Projections,
    lam: float,
    w_field: np.ndarray,
    tol_lin: float = 1e-8,
) -> np.ndarray:
    """z = [(A - λ)|_X]^{-1} Q w, solved with kernel deflation.

    w is pre-projected onto the complement X; the bordered system pins the
    kernel coefficients to zero, so the solve stays well-conditioned through
    λ = λ0.  The residual ||(A-λ)z - Qw|| must come out below
    tol_lin * ||Qw|| and ||z|| <= ||Qw|| / c, both checked.
    """
    grid = op.grid
    if abs(lam - proj.lambda0) > proj.delta * (1 + 1e-12):
        raise SpectralError(
            f"lambda = {lam} outside the window |lambda - lambda0| <= {proj.delta}"
        )
    w_in = grid.check_field(w_field)
    q = proj.project_complement(w_in)
    qnorm = grid.norm(q)
    if qnorm == 0.0:
        return np.zeros(grid.num_nodes)
    # absolute slack at the scale of the unprojected input: a numerically
    # pure-kernel w leaves only rounding in q and a relative test is moot
    floor = 1e-13 * grid.norm(w_in)
    key = float(lam)
    solver = proj._resolvent_cache.get(key)
    if solver is None:
        solver = _BorderedResolvent(op, proj, lam)
        proj._resolvent_cache[key] = solver
    sqrt_w = np.sqrt(grid.weights)
    rhs = np.concatenate([sqrt_w * q, np.zeros(solver.k)])
    sol = solver.lu.solve(rhs)
    z = sol[: solver.n] / sqrt_w
    residual = grid.norm(op.apply(z) - lam * z - q)
    if residual > tol_lin * qnorm + floor:
        raise SpectralError(
            f"resolvent solve residual {residual:.3e} exceeds "
            f"{tol_lin:.1e} * ||Qw|| = {tol_lin * qnorm:.3e}"
        )
    if grid.norm(z) > (qnorm + floor) / proj.gap_constant * (1 + 1e-9):
        raise SpectralError(
            "resolvent output violates the spectral bound ||z|| <= ||Qw||/c"
        )
    return z
