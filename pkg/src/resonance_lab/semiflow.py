"""Parabolic semiflow u_t = Δu - Vu + λu + f(x, u): time stepping and
diagnostics.

One step is implicit-explicit Euler: the stiff linear part (A - λ) is
treated implicitly, the globally bounded nonlinearity explicitly,

    (I + dt (A - λ)) u_next = u + dt F(u),

which is unconditionally stable in the linear part as long as the implicit
matrix stays positive definite (dt (λ - λ_min) < 1, checked).  The energy

    J_λ(u) = 1/2 (||∇u||^2 + <Vu, u> - λ ||u||^2) - ∫ F_prim(x, u)

decreases along steps up to O(dt^2), mirroring dJ/dt = -||u̇||^2.

The tail-decay report assembles the admissibility bound

    ∫_{|x| >= n} |Qu(t1)|^2 <= e^{-2α(t1-t0)} ||u(t0)||^2 + α_n

with α_n built from the cutoff constant, the potential and bound-field
tails over |x| >= n/√2, and the exact finite-dimensional kernel tail
maximum, and checks it against measured tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import field_norms, tail_mass
from .nonlinearity import NonlinearitySpec, evaluate_f, evaluate_primitive
from .potential import tail_lp_norm
from .spectral import HamiltonianOperator, Projections

CUTOFF_LIPSCHITZ = 2.0  # sup |phi'| of the radial cutoff ramp on [1/2, 1]
DT_FLOOR = 1e-12


class StepRejected(RuntimeError):
    """The implicit matrix lost positivity; retry with a smaller dt."""


class StepCascadeError(RuntimeError):
    """dt underflowed while rejecting steps."""


@dataclass
class SemiflowState:
    t: float
    u: np.ndarray
    J: float | None = None
    kernel_norm: float | None = None
    complement_norm: float | None = None


@dataclass
class Trajectory:
    lam: float
    states: list = field(default_factory=list)  # saved SemiflowStates
    dt_history: list = field(default_factory=list)
    equilibrium: bool = False
    stop_reason: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def J_values(self) -> np.ndarray:
        return np.array([s.J for s in self.states], dtype=float)


class ImexStepper:
    """Cached factorization of (I + dt (A - λ)) in the symmetrized frame."""

    def __init__(self, op: HamiltonianOperator, lam: float, dt: float):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        lower = op.spectrum_lower_bound()
        if 1.0 + dt * (lower - lam) <= 0.0:
            raise StepRejected(
                f"dt = {dt} too large: I + dt(A - λ) loses positivity for "
                f"λ = {lam} (need dt < {1.0 / max(lam - lower, 1e-300):.3e})"
            )
        n = op.grid.num_nodes
        mat = (sp.identity(n) + dt * (op.sym_matrix - lam * sp.identity(n))).tocsc()
        self._lu = spla.splu(mat)
        self._sqrt_w = np.sqrt(op.grid.weights)
        self.op = op
        self.lam = lam
        self.dt = dt

    def step(self, u: np.ndarray, fu: np.ndarray) -> np.ndarray:
        rhs = self._sqrt_w * (u + self.dt * fu)
        return self._lu.solve(rhs) / self._sqrt_w


def default_dt(op: HamiltonianOperator, lam: float) -> float:
    """Resolve the fastest retained linear mode: min(0.1/(|λ_min|+|λ|+1), 1e-2)."""
    lam_min = op.spectrum_lower_bound()
    return min(0.1 / (abs(lam_min) + abs(lam) + 1.0), 1e-2)


def imex_step(
    state: SemiflowState,
    lam: float,
    dt: float,
    op: HamiltonianOperator,
    spec: NonlinearitySpec,
    stepper: ImexStepper | None = None,
) -> SemiflowState:
    """One implicit-explicit Euler step (local truncation O(dt^2))."""
    if stepper is None or stepper.lam != lam or stepper.dt != dt:
        stepper = ImexStepper(op, lam, dt)
    u = op.grid.check_field(state.u)
    u_next = stepper.step(u, evaluate_f(spec, u))
    return SemiflowState(t=state.t + dt, u=u_next)


def lyapunov_J(
    lam: float, u: np.ndarray, op: HamiltonianOperator, spec: NonlinearitySpec
) -> float:
    """J_λ(u); requires the family's primitive."""
    grid = op.grid
    u = grid.check_field(u)
    norms = field_norms(grid, u)
    quad = norms.grad_l2**2 + grid.inner(op.v_samples * u, u) - lam * norms.l2**2
    prim = evaluate_primitive(spec, u)
    return 0.5 * quad - float(np.sum(grid.weights * prim))


def _attach_diagnostics(
    state: SemiflowState,
    lam: float,
    op: HamiltonianOperator,
    spec: NonlinearitySpec,
    projections: Projections | None,
) -> SemiflowState:
    state.J = lyapunov_J(lam, state.u, op, spec)
    if projections is not None:
        state.kernel_norm = op.grid.norm(projections.project_kernel(state.u))
        state.complement_norm = op.grid.norm(projections.project_complement(state.u))
    return state


def evolve(
    state0: SemiflowState,
    lam: float,
    horizon: float,
    op: HamiltonianOperator,
    spec: NonlinearitySpec,
    dt: float | None = None,
    stop: str = "equilibrium",
    save_every: int = 10,
    tol_eq: float | None = None,
    projections: Projections | None = None,
    j_plateau_tol: float = 1e-12,
) -> Trajectory:
    """Advance the semiflow to the horizon with the chosen stopping rule.

    stop is one of "time-only", "equilibrium" (||u_next - u||/dt below
    tol_eq, default 1e-6 (1 + ||u||_H1)) or "j-plateau".  Rejected steps
    halve dt; dt underflow raises StepCascadeError.  States are saved every
    save_every accepted steps with J and, when projections are attached, the
    kernel/complement norms.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if stop not in ("time-only", "equilibrium", "j-plateau"):
        raise ValueError(f"unknown stop rule {stop!r}")
    grid = op.grid
    if dt is None:
        dt = default_dt(op, lam)
    traj = Trajectory(lam=lam)
    state = SemiflowState(t=state0.t, u=grid.check_field(state0.u).copy())
    traj.states.append(
        _attach_diagnostics(
            SemiflowState(state.t, state.u.copy()), lam, op, spec, projections
        )
    )
    stepper = None
    steps = 0
    t_end = state0.t + horizon
    while state.t < t_end - 1e-12:
        dt_step = min(dt, t_end - state.t)
        if stepper is None or stepper.dt != dt_step:
            while True:
                try:
                    stepper = ImexStepper(op, lam, dt_step)
                    break
                except StepRejected:
                    dt_step /= 2.0
                    dt = dt_step
                    if dt_step < DT_FLOOR:
                        raise StepCascadeError(
                            "dt underflowed while seeking a positive implicit matrix"
                        ) from None
        u_next = stepper.step(state.u, evaluate_f(spec, state.u))
        rate = grid.norm(u_next - state.u) / dt_step
        state = SemiflowState(t=state.t + dt_step, u=u_next)
        steps += 1
        traj.dt_history.append(dt_step)
        save_now = steps % save_every == 0
        if stop == "equilibrium":
            scale = tol_eq if tol_eq is not None else 1e-6 * (
                1.0 + field_norms(grid, u_next).h1
            )
            if rate <= scale:
                traj.equilibrium = True
                traj.stop_reason = "equilibrium"
                save_now = True
        if stop == "j-plateau" and len(traj.states) >= 1 and save_now:
            j_now = lyapunov_J(lam, u_next, op, spec)
            if abs(j_now - traj.states[-1].J) <= j_plateau_tol * max(1.0, abs(j_now)):
                traj.stop_reason = "j-plateau"
                traj.equilibrium = True
        if save_now or state.t >= t_end - 1e-12:
            traj.states.append(
                _attach_diagnostics(
                    SemiflowState(state.t, state.u.copy()), lam, op, spec, projections
                )
            )
        if traj.equilibrium:
            break
    if not traj.stop_reason:
        traj.stop_reason = "horizon"
    return traj


def kernel_drift_rate(
    lam: float,
    u: np.ndarray,
    projections: Projections,
    spec: NonlinearitySpec,
) -> float:
    """(λ - λ0) ||Pu||^2 + <Pu, F(u)>: the exact rate of 1/2 d/dt ||Pu||^2."""
    grid = projections.grid
    pu = projections.project_kernel(u)
    return (lam - projections.lambda0) * grid.inner(pu, pu) + grid.inner(
        pu, evaluate_f(spec, u)
    )


@dataclass
class TailDecayRow:
    radius: float
    t1: float
    measured: float
    bound: float
    passed: bool
    guaranteed: bool  # radius >= n0, where the lemma's hypothesis holds


@dataclass
class TailDecayReport:
    alpha: float
    eta: float
    n0: float
    R_bound: float          # sup_t ||Qu(t)||_H1 over the trajectory
    alpha_n: dict           # radius -> assembled alpha_n
    rows: list
    all_passed: bool
    all_guaranteed_passed: bool


def tail_decay_report(
    trajectory: Trajectory,
    projections: Projections,
    op: HamiltonianOperator,
    spec: NonlinearitySpec,
    radii: Sequence[float],
    alpha: float | None = None,
    eta: float | None = None,
) -> TailDecayReport:
    """Check measured complement tails against the assembled decay bound.

    For each saved time t1 > t0 and each radius n the measured
    tail_mass(Qu(t1), n) is compared with e^{-2α(t1-t0)} ||u(t0)||^2 + α_n.
    α defaults to α_inf - λ0 - δ - η with η the midpoint default
    (α_inf - λ0 - δ)/4; α_n is assembled from 2 R^2 L_φ / n, the potential
    and bound-field tails over |x| >= n/√2 and the kernel-ball tail maximum
    κ_n, all divided by α.  n0 is the smallest radius with
    v_infty > α_inf - η on |x| >= n/√2; only radii >= n0 are guaranteed by
    the theory, the rest are reported but not required to pass.
    """
    grid = op.grid
    lam0, delta = projections.lambda0, projections.delta
    alpha_inf = op.alpha_inf
    gap = alpha_inf - lam0 - delta
    if gap <= 0:
        raise ValueError(
            "alpha_inf - lambda0 - delta <= 0: the decay bound needs "
            "lambda0 + delta below the asymptotic bottom"
        )
    if eta is None:
        eta = 0.25 * gap
    if not 0 < eta <= 0.5 * gap:
        raise ValueError(f"eta must lie in (0, {0.5 * gap}], got {eta}")
    if alpha is None:
        alpha = gap - eta
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    radii = [float(r) for r in radii]
    if any(r > grid.half_width for r in radii):
        raise ValueError("radii exceed the box half-width")
    if len(trajectory.states) < 2:
        raise ValueError("trajectory has fewer than two saved states")

    states = trajectory.states
    t0, u0 = states[0].t, states[0].u
    u0_sq = grid.norm(u0) ** 2

    # hypothesis constant: sup_t ||Qu(t)||_H1 over the saved states
    q_fields = [projections.project_complement(s.u) for s in states]
    R_bound = max(field_norms(grid, q).h1 for q in q_fields)

    # Hoelder factor: sup_t ||Qu(t)||_{L^{2p/(p-1)}}^2 (empirical embedding)
    p = op.potential.p
    r_exp = 2.0 * p / (p - 1.0)
    hoelder = max(grid.lp_norm(q, r_exp) ** 2 for q in q_fields)

    # kernel-ball tail maximum, exact in the finite-dimensional kernel
    m_norm = spec.bound_norm
    kernel = projections.kernel_fields

    def kappa(r_inner: float) -> float:
        mask = grid.radii >= r_inner
        if not np.any(mask):
            return 0.0
        blk = kernel[mask, :] * np.sqrt(grid.weights[mask])[:, None]
        gram = blk.T @ blk
        lam_max = float(np.max(np.linalg.eigvalsh(gram))) if gram.size else 0.0
        return m_norm * np.sqrt(max(lam_max, 0.0))

    # smallest radius where v_infty > alpha_inf - eta holds on |x| >= n/sqrt(2)
    viol = op.potential.v_infty <= alpha_inf - eta
    if np.any(viol):
        n0 = float(np.max(grid.radii[viol])) * np.sqrt(2.0)
    else:
        n0 = 0.0

    alpha_n = {}
    for r in radii:
        inner = r / np.sqrt(2.0)
        m_tail = np.sqrt(
            float(np.sum(grid.weights[grid.radii >= inner]
                         * spec.bound_m[grid.radii >= inner] ** 2))
        )
        tilde = (
            2.0 * R_bound**2 * CUTOFF_LIPSCHITZ / r
            + hoelder * tail_lp_norm(op.potential, inner)
            + R_bound * m_tail
            + R_bound * kappa(inner)
        )
        alpha_n[r] = tilde / alpha

    rows = []
    for s, q in zip(states[1:], q_fields[1:]):
        decay = np.exp(-2.0 * alpha * (s.t - t0)) * u0_sq
        for r in radii:
            measured = tail_mass(grid, q, r)
            bound = decay + alpha_n[r]
            rows.append(
                TailDecayRow(
                    radius=r, t1=s.t, measured=measured, bound=bound,
                    passed=bool(measured <= bound), guaranteed=bool(r >= n0),
                )
            )
    return TailDecayReport(
        alpha=float(alpha), eta=float(eta), n0=n0, R_bound=float(R_bound),
        alpha_n=alpha_n, rows=rows,
        all_passed=all(r.passed for r in rows),
        all_guaranteed_passed=all(r.passed for r in rows if r.guaranteed),
    )
