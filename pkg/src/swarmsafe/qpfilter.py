"""Safety-filter layer: empirical barrier constraints over stacked agent
controls, minimal-deviation projection onto the feasible halfspaces, and the
single-agent baseline filter.

All constraints are linear lower bounds a^T u >= r on the stacked control
vector [u_1^T, ..., u_N^T]^T.  The filtered control is the closest feasible
point in the (1/N)-scaled squared norm, whose minimizer coincides with the
plain Euclidean projection.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleConstraintError, InvalidInputError
from .obstacles import potential_eval
from .torus import repulsion, wrapped_displacement

_TINY = 1e-14


@dataclass(frozen=True)
class LinearConstraint:
    """One halfspace over the stacked controls: feasible iff a . u >= r."""

    a: np.ndarray
    r: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        if a.size % 2 != 0:
            raise InvalidInputError("coefficient vector must have even length")
        object.__setattr__(self, "a", a)

    def margin(self, u):
        return float(self.a @ np.asarray(u, dtype=float).ravel() - self.r)


@dataclass
class FilterReport:
    """Outcome of one projection: corrected controls and bookkeeping."""

    controls: np.ndarray  # (N, 2) corrected controls
    active: list  # bool per constraint
    deviation: float  # (1/N) sum ||u* - u||^2
    barriers: dict = field(default_factory=dict)
    infeasible: bool = False


def assemble_direct_constraint(positions, pot, spec, D, t=0.0, _pe=None):
    """Barrier constraint for a directly actuated population.

    The stacked coefficient block of agent k is -grad C(x_k) / N and the
    bound collects the diffusion influx, the explicit kernel motion of moving
    zones and the class-K allowance:
        r = D * mean(lap C) + mean(dt C) - gamma * (H - margin).

    `_pe` optionally reuses a precomputed potential_eval result.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    n = positions.shape[0]
    if n == 0:
        raise InvalidInputError("population must be nonempty")
    if D < 0.0:
        raise InvalidInputError("diffusion coefficient must be nonnegative")
    C, gradC, lapC, dtC = _pe if _pe is not None else potential_eval(pot, positions, t)
    H = spec.epsilon - float(np.mean(C))
    a = (-gradC / n).ravel()
    r = (
        D * float(np.mean(lapC))
        + float(np.mean(dtC))
        + spec.class_k(H)
    )
    return LinearConstraint(a=a, r=r)


def assemble_follower_constraint(
    follower_positions, leader_positions, rep, pot, spec, D, dt, t=0.0,
    lookahead=None, _pe=None, _pair=None,
):
    """Barrier constraint for an indirectly actuated (repelled) population.

    The follower drift is the leader-averaged repulsion field, which does not
    depend on the leader controls instantaneously.  The constraint therefore
    looks ahead: leaders holding control u for a horizon tau shift each
    pairwise displacement by -u_j * tau, and a first-order expansion through
    the repulsion jacobian makes the looked-ahead barrier rate linear in the
    stacked leader controls.  The u-free advection term is folded into r.

    `lookahead` defaults to the integration step dt.  A tau of one step makes
    the constraint numerically stiff: the leverage of the leader controls on
    the follower barrier rate is O(tau), so a one-step horizon demands
    O(1/dt) corrections whenever the uncontrolled rate falls short.  A tau of
    many steps, re-solved each step in receding-horizon fashion, obtains the
    same barrier behavior with moderate leader speeds.
    """
    followers = np.atleast_2d(np.asarray(follower_positions, dtype=float))
    leaders = np.atleast_2d(np.asarray(leader_positions, dtype=float))
    nf, nl = followers.shape[0], leaders.shape[0]
    if nf == 0 or nl == 0:
        raise InvalidInputError("both populations must be nonempty")
    if dt <= 0.0:
        raise InvalidInputError("dt must be positive")
    tau = dt if lookahead is None else float(lookahead)
    if tau <= 0.0:
        raise InvalidInputError("lookahead must be positive")
    C, gradC, lapC, dtC = _pe if _pe is not None else potential_eval(pot, followers, t)
    H = spec.epsilon - float(np.mean(C))
    if _pair is not None:
        g, jac = _pair
    else:
        g, jac = repulsion(followers[:, None, :], leaders[None, :, :], rep)
    drift = np.mean(g, axis=1)  # (nf, 2) current follower velocity field
    # a_j = (tau / (nf * nl)) sum_k J_g(d_kj)^T grad C(x_k)
    a = np.einsum("kjab,ka->jb", jac, gradC) * (tau / (nf * nl))
    r = (
        D * float(np.mean(lapC))
        + float(np.mean(dtC))
        + spec.class_k(H)
        + float(np.mean(np.sum(gradC * drift, axis=1)))
    )
    return LinearConstraint(a=a.ravel(), r=r)


def project_halfspace(u, c):
    """Closest point to u satisfying a . u >= r (closed-form KKT step).

    Feasible inputs are returned unchanged.  A zero-coefficient constraint
    with a positive bound is infeasible and raises; callers decide whether to
    pass the nominal control through.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size != c.a.size:
        raise InvalidInputError("control and constraint dimensions differ")
    slack = c.a @ u - c.r
    if slack >= 0.0:
        return u.copy()
    nn = c.a @ c.a
    if nn <= _TINY:
        raise InfeasibleConstraintError(
            "degenerate constraint: zero gradient with violated bound",
            violation=-slack,
        )
    return u - (slack / nn) * c.a


def project_polytope(u, constraints):
    """Exact minimizer of ||u' - u||^2 over an intersection of halfspaces.

    Small active-set enumeration: for every subset of constraints, solve the
    equality-constrained KKT system and accept the candidate that is primal
    feasible with nonnegative multipliers.  Intended for a handful of
    constraints (one barrier per population).
    """
    u = np.asarray(u, dtype=float).ravel()
    cs = list(constraints)
    if len(cs) > 8:
        raise InvalidInputError("active-set enumeration supports at most 8 constraints")
    if not cs:
        return u.copy()
    A = np.stack([c.a for c in cs])
    r = np.array([c.r for c in cs])
    if A.shape[1] != u.size:
        raise InvalidInputError("control and constraint dimensions differ")
    scale = np.maximum(np.linalg.norm(A, axis=1), 1.0)
    feas_tol = 1e-9

    best = None
    m = len(cs)
    for mask in range(1 << m):
        idx = [i for i in range(m) if mask >> i & 1]
        if not idx:
            cand = u
        else:
            As, rs = A[idx], r[idx]
            gram = As @ As.T
            try:
                lam = np.linalg.solve(gram, rs - As @ u)
            except np.linalg.LinAlgError:
                continue
            if np.any(lam < -feas_tol):
                continue
            cand = u + As.T @ lam
        if np.all((A @ cand - r) / scale >= -feas_tol):
            dev = float(np.sum((cand - u) ** 2))
            if best is None or dev < best[0]:
                best = (dev, cand.copy())
    if best is None:
        worst = int(np.argmin((A @ u - r) / scale))
        raise InfeasibleConstraintError(
            "no control satisfies all barrier constraints",
            constraint_index=worst,
            violation=float(r[worst] - A[worst] @ u),
        )
    return best[1]


def micro_cbf_filter(z, u, h_value, h_grad, h_lap, D, gamma):
    """Single-agent baseline filter for integrator drift f(z, u) = u.

    Projects u onto the halfspace grad h . u >= -gamma h - D lap h.
    """
    if D < 0.0:
        raise InvalidInputError("diffusion coefficient must be nonnegative")
    c = LinearConstraint(
        a=np.asarray(h_grad, dtype=float),
        r=-gamma * h_value - D * h_lap,
    )
    return project_halfspace(np.asarray(u, dtype=float).ravel(), c)


def barrier_rate_estimate(positions, velocities, pot, spec, D, t=0.0):
    """Empirical three-term estimate of dH/dt along the current flow.

    Combines the advective term through the agent velocities, the diffusion
    influx and the explicit kernel motion.  Used for validation and
    diagnostics only; it is not part of the control path.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
    if velocities.shape != positions.shape:
        raise InvalidInputError("positions and velocities must align")
    _, gradC, lapC, dtC = potential_eval(pot, positions, t)
    adv = float(np.mean(np.sum(gradC * velocities, axis=1)))
    return -adv - D * float(np.mean(lapC)) - float(np.mean(dtC))


def apply_filter(u, constraints, barriers=None, max_correction=None):
    """Project stacked controls onto the constraint set, logging infeasibility.

    On infeasibility the nominal control is passed through unchanged and the
    report flags a violation; aborting the run would bias ensemble metrics.

    `max_correction` bounds the root-mean-square per-agent correction: the
    constraint linearization is only trustworthy over small displacements,
    so an extreme demanded correction (typically from a nearly insensitive
    indirect constraint) is scaled back to the trust region instead of
    scattering the agents in one step.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0] if u.ndim == 2 else u.size // 2
    stacked = u.ravel()
    try:
        corrected = project_polytope(stacked, constraints)
        infeasible = False
    except InfeasibleConstraintError:
        corrected = stacked.copy()
        infeasible = True
    if max_correction is not None and not infeasible:
        delta = corrected - stacked
        rms = np.sqrt(np.sum(delta**2) / n)
        if rms > max_correction:
            corrected = stacked + delta * (max_correction / rms)
    active = [abs(c.a @ corrected - c.r) <= 1e-9 * max(1.0, np.linalg.norm(c.a))
              for c in constraints]
    deviation = float(np.sum((corrected - stacked) ** 2)) / n
    return FilterReport(
        controls=corrected.reshape(-1, 2),
        active=active,
        deviation=deviation,
        barriers=dict(barriers or {}),
        infeasible=infeasible,
    )
