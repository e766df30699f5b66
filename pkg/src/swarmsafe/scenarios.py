"""Scenario builders and nominal controllers for the two experiments:
safe coverage (diffusion-driven spreading with dangerous disks) and safe
shepherding (leaders repelling diffusive followers into a goal region).

Each scenario dataclass holds the experiment constants and `realize()`
turns them into a concrete instance: a placed obstacle layout, initial
positions with strictly positive barriers, and the per-step callbacks the
simulator consumes (nominal control, constraint assembly, velocities,
metrics).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, PlacementInfeasibleError, SetupError
from .obstacles import (
    BarrierSpec,
    ObstacleSet,
    build_potential,
    fraction_inside,
    kernel_overlap,
    potential_eval,
)
from .qpfilter import assemble_direct_constraint, assemble_follower_constraint
from .torus import (
    GaussKernelSpec,
    RepulsionSpec,
    repulsion,
    wrap,
    wrapped_displacement,
    wrapped_distance,
)

_ORIGIN = np.zeros(2)


# ---------------------------------------------------------------------------
# obstacle placement


@dataclass(frozen=True)
class ObstacleRules:
    """Placement rules for the dangerous disks.

    `center_clearance` is the minimum wrapped distance between each disk
    center and the origin (initial-support or goal boundary plus the
    standoff); `boundary_gap` is the minimum gap between disk boundaries.
    """

    count: int = 5
    radius: float = 0.5
    center_clearance: float = 1.75
    boundary_gap: float = 0.25
    max_attempts: int = 100_000


def place_obstacles(rules, rng):
    """Rejection-sample disk centers uniformly until all constraints hold."""
    centers = []
    min_center_dist = 2.0 * rules.radius + rules.boundary_gap
    attempts = 0
    while len(centers) < rules.count:
        if attempts >= rules.max_attempts:
            raise PlacementInfeasibleError(
                f"obstacle placement exceeded {rules.max_attempts} attempts"
            )
        attempts += 1
        c = rng.uniform(-np.pi, np.pi, size=2)
        if rules.center_clearance > 0.0:
            if wrapped_distance(c, _ORIGIN) < rules.center_clearance:
                continue
        if centers and np.any(
            wrapped_distance(np.asarray(centers), c) < min_center_dist
        ):
            continue
        centers.append(c)
    return ObstacleSet(centers=np.asarray(centers), radius=rules.radius)


def _uniform_excluding(rng, n, centers, clearance):
    """Uniform samples on the domain outside balls around the given centers."""
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        batch = rng.uniform(-np.pi, np.pi, size=(2 * (n - filled) + 16, 2))
        if len(centers):
            dist = wrapped_distance(batch[:, None, :], centers[None, :, :])
            batch = batch[np.all(dist > clearance, axis=1)]
        take = min(len(batch), n - filled)
        out[filled:filled + take] = batch[:take]
        filled += take
    return out


# ---------------------------------------------------------------------------
# nominal controllers


def coverage_nominal_control(positions):
    """Coverage relies on diffusion alone; the nominal control is zero."""
    return np.zeros_like(positions)


def follower_drift(follower_positions, leader_positions, rep):
    """Leader-averaged repulsion field evaluated at the follower positions."""
    followers = np.atleast_2d(np.asarray(follower_positions, dtype=float))
    leaders = np.atleast_2d(np.asarray(leader_positions, dtype=float))
    if followers.shape[0] == 0 or leaders.shape[0] == 0:
        raise InvalidInputError("both populations must be nonempty")
    g, _ = repulsion(followers[:, None, :], leaders[None, :, :], rep)
    return np.mean(g, axis=1)


@dataclass(frozen=True)
class VonMisesTarget:
    """Concentration parameters of the goal density profile."""

    k1: float = 9.0
    k2: float = 9.0


def von_mises_density(x, target):
    """Unnormalized target density exp(k1 cos x1 + k2 cos x2 + cos(x1 - x2))."""
    x = np.asarray(x, dtype=float)
    return np.exp(
        target.k1 * np.cos(x[..., 0])
        + target.k2 * np.cos(x[..., 1])
        + np.cos(x[..., 0] - x[..., 1])
    )


def _rotate(v, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([c * v[..., 0] - s * v[..., 1],
                     s * v[..., 0] + c * v[..., 1]], axis=-1)


@dataclass(frozen=True)
class ShepherdParams:
    """Gains and schedule of the substitute shepherding heuristic.

    `mode` selects between the greedy ray-offset chase ("greedy") and the
    staged sweep ("staged").  The staged controller spreads the leaders
    along the level set of wrapped distance `s` from the goal center and
    contracts `s` from `sweep_start` (just inside the far corner of the
    periodic square) down to `contain_radius`, plowing the whole population
    goal-ward behind a closed moving front; the front then holds while the
    repulsion field keeps draining the remaining annulus into the goal.
    The contraction rate `sweep_speed` is an upper bound: the front never
    advances past the bulk of the crowd still outside the goal, so a crowd
    stalled against a dangerous disk is waited for rather than overtaken.
    `sweep_speed` must stay below the peak follower drift speed the leader
    front can impart, otherwise the front passes through the crowd.
    """

    mode: str = "staged"
    k_p: float = 1.5
    u_max: float = 0.5
    delta_off: float = 0.3
    sweep_start: float = np.pi * np.sqrt(2.0) - 0.2
    sweep_speed: float = 0.035
    gate_fraction: float = 0.15
    gate_buffer: float = 0.6
    contain_radius: float = 2.0
    orbit_rate: float = 0.0
    obstacle_standoff: float = -0.15
    standoff_moving: float = 0.5


def _greedy_targets(followers, leaders, goal_radius, params):
    """Steering targets of the greedy ray-offset chase.

    Each leader is assigned the currently farthest-from-goal unassigned
    follower and aims at the point `delta_off` beyond it along the ray from
    the goal center, so its repulsion pushes the follower goal-ward.
    Leaders whose assigned follower already sits inside the goal hold
    slowly orbiting stations just outside the goal boundary.
    """
    nl = leaders.shape[0]
    dist = wrapped_distance(followers, _ORIGIN)
    order = np.argsort(-dist, kind="stable")
    targets = np.empty((nl, 2))
    for j in range(nl):
        if j < len(order) and dist[order[j]] > goal_radius:
            f = followers[order[j]]
            direction = wrapped_displacement(f, _ORIGIN)
            direction /= max(np.linalg.norm(direction), 1e-12)
            targets[j] = wrap(f + params.delta_off * direction)
        else:
            p = wrapped_displacement(leaders[j], _ORIGIN)
            norm = np.linalg.norm(p)
            u = p / norm if norm > 1e-9 else np.array([1.0, 0.0])
            station = (goal_radius + params.delta_off) * _rotate(u, 0.3)
            targets[j] = wrap(station)
    return targets


_ANTIPODE = np.array([-np.pi, -np.pi])

# cosine of the flank-deflection cone half-angle around a disk's outer axis
_FLANK_COS = 0.5


def _sweep_stations(n, s, phase):
    """n stations on the level set {wrapped distance from the origin = s}.

    For s <= pi the level set is a circle around the origin.  For larger s
    (up to the domain half-diagonal pi * sqrt(2)) it consists of four arcs
    surrounding the periodic corner opposite the origin; each arc is a piece
    of the circle of radius s around the nearest periodic image of the
    origin.  The set is star-shaped around that corner, so stations are laid
    out on uniformly spaced rays from it: for the ray direction u the front
    sits at range r solving |r u - p| = s with p the quadrant's origin
    image.  The two branches meet continuously at s = pi.
    """
    alpha = 2.0 * np.pi * np.arange(n) / n + phase
    u = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)
    if s <= np.pi:
        return wrap(s * u)
    img = np.where(u >= 0.0, np.pi, -np.pi)
    b = np.einsum("ni,ni->n", u, img)
    disc = np.maximum(b * b - 2.0 * np.pi ** 2 + s * s, 0.0)
    r = b - np.sqrt(disc)
    return wrap(_ANTIPODE + r[:, None] * u)


def _staged_targets(followers, leaders, t, goal_radius, params, obstacles=None):
    nl = leaders.shape[0]
    s = params.sweep_start - params.sweep_speed * t
    # never contract the front past the bulk of the crowd still outside the
    # goal: a front inside the crowd pushes it outward instead of containing
    # it, so a stalled crowd (e.g. piled up against a dangerous disk) must
    # be waited for rather than overtaken
    radii = wrapped_distance(followers, _ORIGIN)
    outside = radii[radii > goal_radius]
    if outside.size > params.gate_fraction * followers.shape[0]:
        r_bulk = float(np.quantile(outside, 0.8))
        s = max(s, min(params.sweep_start, r_bulk + params.gate_buffer))
    if s > params.contain_radius:
        # while the front moves, stations that would sit on a disk's outer
        # side are swung to its flanks: a station behind the disk presses
        # the plowed crowd straight into it, while flank stations pincer
        # the crowd around the rim instead
        stations = _sweep_stations(nl, s, np.pi / nl)
        return _deflect_flank(stations, obstacles, params.standoff_moving, t)
    # hold: orbit slowly so front gaps do not stay aligned with any follower
    stations = _sweep_stations(
        nl, params.contain_radius, np.pi / nl + params.orbit_rate * t
    )
    return _deflect_targets(stations, obstacles, params.obstacle_standoff, t)


def _deflect_flank(targets, obstacles, standoff, t):
    """Swing steering targets off a dangerous disk onto its flanks.

    Targets within `radius + standoff` of a disk center are pushed out to
    that circle; targets that would land inside the shadow cone on the
    disk's outer side (facing away from the goal, where the inbound crowd
    piles up against the rim) are additionally rotated to the nearer cone
    edge.  Leaders stationed at the edges both contain the plowed crowd
    and push the trapped pocket outward against the inbound drift instead
    of pressing it into the rim.
    """
    if obstacles is None or obstacles.count == 0:
        return targets
    centers = obstacles.centers_at(t)
    keep_out = obstacles.radius + standoff
    cos_max = _FLANK_COS  # cone half-angle around the outer axis
    for c in centers:
        d = wrapped_displacement(targets, c)
        dist = np.linalg.norm(d, axis=1)
        inside = dist < keep_out
        if not inside.any():
            continue
        outward = wrapped_displacement(c, _ORIGIN)
        o = outward / max(np.linalg.norm(outward), 1e-12)
        perp = np.array([-o[1], o[0]])
        e = d[inside] / np.maximum(dist[inside], 1e-12)[:, None]
        shadowed = e @ o > cos_max
        side = np.where(e[shadowed] @ perp >= 0.0, 1.0, -1.0)
        sin_max = np.sqrt(1.0 - cos_max**2)
        e[shadowed] = cos_max * o + (side * sin_max)[:, None] * perp
        targets[inside] = wrap(c + keep_out * e)
    return targets


def _deflect_targets(targets, obstacles, standoff, t):
    """Pull steering targets toward the rim of any dangerous disk they hit.

    Targets deeper inside a disk than `radius + standoff` are moved radially
    to that circle.  A small negative standoff leaves the deflected target
    just inside the rim: the unfiltered controller still parks leaders in
    the dangerous region, but the safety filter only has to counter a
    shallow graze instead of a dive to the disk center.
    """
    if obstacles is None or obstacles.count == 0:
        return targets
    centers = obstacles.centers_at(t)
    keep_out = obstacles.radius + standoff
    for c in centers:
        d = wrapped_displacement(targets, c)
        dist = np.linalg.norm(d, axis=1)
        inside = dist < keep_out
        if inside.any():
            unit = d[inside] / np.maximum(dist[inside], 1e-12)[:, None]
            targets[inside] = wrap(c + keep_out * unit)
    return targets


def shepherd_nominal_control(follower_positions, leader_positions, t, goal_radius,
                             params, obstacles=None):
    """Proportional steering toward heuristic targets, speed-clipped."""
    followers = np.atleast_2d(np.asarray(follower_positions, dtype=float))
    leaders = np.atleast_2d(np.asarray(leader_positions, dtype=float))
    if followers.shape[0] == 0 or leaders.shape[0] == 0:
        raise InvalidInputError("both populations must be nonempty")
    if params.mode == "greedy":
        targets = _greedy_targets(followers, leaders, goal_radius, params)
        targets = _deflect_targets(targets, obstacles, params.obstacle_standoff, t)
    elif params.mode == "staged":
        targets = _staged_targets(
            followers, leaders, t, goal_radius, params, obstacles
        )
    else:
        raise InvalidInputError(f"unknown controller mode {params.mode!r}")
    u = params.k_p * wrapped_displacement(targets, leaders)
    # speed clip: keeps the one-step displacement small relative to the
    # kernel bandwidth, which the linearized safety constraint relies on
    speed = np.linalg.norm(u, axis=1, keepdims=True)
    scale = np.where(speed > params.u_max, params.u_max / np.maximum(speed, 1e-12), 1.0)
    return u * scale


# ---------------------------------------------------------------------------
# coverage scenario


@dataclass(frozen=True)
class CoverageScenario:
    """Diffusive coverage with dangerous disks; nominal control is zero."""

    n_agents: int = 720
    diffusion: float = 0.05
    horizon: float = 50.0
    sigma: float = 0.2
    epsilon: float = 0.01
    gamma: float = 0.1
    safety_margin: float = 0.0095
    init_radius: float = 1.0
    obstacles: ObstacleRules = field(default_factory=ObstacleRules)
    nodes_per_disk: int = 256
    max_layout_retries: int = 50

    def realize(self, rng, layout=None):
        kernel = GaussKernelSpec(self.sigma)
        spec = BarrierSpec(self.epsilon, self.gamma, kernel, self.safety_margin)
        u = rng.uniform(size=(self.n_agents, 2))
        radii = self.init_radius * np.sqrt(u[:, 0])
        angles = 2.0 * np.pi * u[:, 1]
        positions = np.column_stack(
            [radii * np.cos(angles), radii * np.sin(angles)]
        )
        if layout is not None:
            obs = layout
            pot = build_potential(obs, kernel, self.nodes_per_disk)
        else:
            for _ in range(self.max_layout_retries):
                obs = place_obstacles(self.obstacles, rng)
                pot = build_potential(obs, kernel, self.nodes_per_disk)
                if kernel_overlap(positions, pot, 0.0) < self.epsilon:
                    break
            else:
                raise SetupError("could not place obstacles with positive barrier")
        return CoverageInstance(self, obs, pot, spec, {"agents": positions})


class CoverageInstance:
    """Realized coverage run: layout, potential and per-step callbacks."""

    controlled = "agents"

    def __init__(self, scenario, obstacles, potential, barrier, positions):
        self.scenario = scenario
        self.obstacles = obstacles
        self.potential = potential
        self.barrier = barrier
        self.initial_positions = positions
        self.populations = [("agents", scenario.diffusion)]

    def nominal(self, positions, t):
        return coverage_nominal_control(positions["agents"])

    def constraints(self, positions, t, dt):
        return self.step_eval(positions, t, dt)[0]

    def step_eval(self, positions, t, dt):
        """Constraints and barrier values from one potential evaluation."""
        pe = potential_eval(self.potential, positions["agents"], t)
        c = assemble_direct_constraint(
            positions["agents"], self.potential, self.barrier,
            self.scenario.diffusion, t, _pe=pe,
        )
        barriers = {"agents": self.barrier.epsilon - float(np.mean(pe[0]))}
        return [c], barriers

    def barriers(self, positions, t):
        return {
            "agents": self.barrier.epsilon
            - kernel_overlap(positions["agents"], self.potential, t)
        }

    def velocities(self, positions, controls, t):
        return {"agents": controls}

    def extra_metrics(self, positions, t):
        return {}

    def fraction_inside(self, positions, t):
        return {
            "agents": fraction_inside(positions["agents"], self.obstacles, t)
        }


# ---------------------------------------------------------------------------
# shepherding scenario


@dataclass(frozen=True)
class ShepherdingScenario:
    """Leaders herd diffusive followers into the goal while both stay safe."""

    n_leaders: int = 100
    n_followers: int = 720
    follower_diffusion: float = 0.005
    horizon: float = 100.0
    sigma: float = 0.25
    epsilon_leaders: float = 0.013
    epsilon_followers: float = 0.01
    gamma: float = 0.1
    safety_margin_leaders: float = 0.008
    safety_margin_followers: float = 0.0075
    constraint_lookahead: float = 1.5
    recovery_gain: float = None  # stronger class-K demand below the margin
    correction_cap: float = None  # optional RMS per-leader filter trust region
    leader_keepout: float = 0.0  # per-leader hard standoff beyond disk rims
    keepout_gain: float = 5.0
    repulsion_length: float = 1.0  # never stated by the source experiments
    repulsion_cutoff: float = None  # optional finite interaction range
    goal_radius: float = 1.0
    init_clearance: float = 1.0
    target: VonMisesTarget = field(default_factory=VonMisesTarget)
    controller: ShepherdParams = field(default_factory=ShepherdParams)
    obstacles: ObstacleRules = field(default_factory=ObstacleRules)
    nodes_per_disk: int = 256
    max_layout_retries: int = 50

    def realize(self, rng, layout=None):
        kernel = GaussKernelSpec(self.sigma)
        spec_l = BarrierSpec(
            self.epsilon_leaders, self.gamma, kernel,
            self.safety_margin_leaders, self.recovery_gain,
        )
        spec_f = BarrierSpec(
            self.epsilon_followers, self.gamma, kernel,
            self.safety_margin_followers, self.recovery_gain,
        )
        retries = 1 if layout is not None else self.max_layout_retries
        for _ in range(retries):
            obs = layout if layout is not None else place_obstacles(
                self.obstacles, rng
            )
            pot = build_potential(obs, kernel, self.nodes_per_disk)
            leaders = _uniform_excluding(
                rng, self.n_leaders, obs.centers, self.init_clearance
            )
            followers = _uniform_excluding(
                rng, self.n_followers, obs.centers, self.init_clearance
            )
            # start strictly inside the region the filter maintains: above
            # the hover margin, not merely above zero
            safe_l = (
                kernel_overlap(leaders, pot, 0.0)
                < self.epsilon_leaders - self.safety_margin_leaders
            )
            safe_f = (
                kernel_overlap(followers, pot, 0.0)
                < self.epsilon_followers - self.safety_margin_followers
            )
            if safe_l and safe_f:
                return ShepherdingInstance(
                    self, obs, pot, spec_l, spec_f,
                    {"leaders": leaders, "followers": followers},
                )
        raise SetupError("could not initialize shepherding with positive barriers")


class ShepherdingInstance:
    """Realized shepherding run with both barrier constraints over leaders."""

    controlled = "leaders"

    def __init__(self, scenario, obstacles, potential, barrier_l, barrier_f,
                 positions):
        self.scenario = scenario
        self.obstacles = obstacles
        self.potential = potential
        self.barrier_leaders = barrier_l
        self.barrier_followers = barrier_f
        self.initial_positions = positions
        self.repulsion = RepulsionSpec(
            scenario.repulsion_length, scenario.repulsion_cutoff
        )
        self.correction_cap = scenario.correction_cap
        self.populations = [
            ("leaders", 0.0),
            ("followers", scenario.follower_diffusion),
        ]

    def nominal(self, positions, t):
        return shepherd_nominal_control(
            positions["followers"], positions["leaders"], t,
            self.scenario.goal_radius, self.scenario.controller,
            obstacles=self.obstacles,
        )

    def constraints(self, positions, t, dt):
        return self.step_eval(positions, t, dt)[0]

    def step_eval(self, positions, t, dt):
        """Both constraints and barrier values from fused kernel passes.

        The follower repulsion pair field is cached for reuse by
        `velocities` within the same step.
        """
        leaders, followers = positions["leaders"], positions["followers"]
        pe_l = potential_eval(self.potential, leaders, t)
        pe_f = potential_eval(self.potential, followers, t)
        pair = repulsion(followers[:, None, :], leaders[None, :, :], self.repulsion)
        self._pair_cache = (t, followers, leaders, pair)
        direct = assemble_direct_constraint(
            leaders, self.potential, self.barrier_leaders, 0.0, t, _pe=pe_l,
        )
        indirect = assemble_follower_constraint(
            followers, leaders, self.repulsion,
            self.potential, self.barrier_followers,
            self.scenario.follower_diffusion, dt, t,
            lookahead=self.scenario.constraint_lookahead,
            _pe=pe_f, _pair=pair,
        )
        barriers = {
            "leaders": self.barrier_leaders.epsilon - float(np.mean(pe_l[0])),
            "followers": self.barrier_followers.epsilon - float(np.mean(pe_f[0])),
        }
        return [direct, indirect], barriers

    def postprocess_controls(self, controls, positions, t):
        """Per-leader keep-out: no leader may close in past an inflated rim.

        The mean-field constraint bounds the population-average overlap, so
        it cannot stop one leader from being pushed through a disk while the
        average stays low.  Each leader therefore also satisfies its own
        scalar barrier h_i = dist(x_i, center) - (radius + keepout): the
        inward velocity component toward any nearby disk is limited to
        `keepout_gain * h_i`, a closed-form halfspace projection in that
        leader's control alone.
        """
        keep = self.obstacles.radius + self.scenario.leader_keepout
        gain = self.scenario.keepout_gain
        if self.scenario.leader_keepout <= 0.0:
            return controls
        leaders = positions["leaders"]
        u = np.array(controls, dtype=float)
        for c in self.obstacles.centers_at(t):
            d = wrapped_displacement(leaders, c)
            dist = np.linalg.norm(d, axis=1)
            for i in np.flatnonzero(dist < keep + 0.5):
                a = d[i] / max(dist[i], 1e-12)
                r = -gain * (dist[i] - keep)
                slack = float(a @ u[i]) - r
                if slack < 0.0:
                    u[i] = u[i] - slack * a
        return u

    def barriers(self, positions, t):
        return {
            "leaders": self.barrier_leaders.epsilon
            - kernel_overlap(positions["leaders"], self.potential, t),
            "followers": self.barrier_followers.epsilon
            - kernel_overlap(positions["followers"], self.potential, t),
        }

    def velocities(self, positions, controls, t):
        cache = getattr(self, "_pair_cache", None)
        if (
            cache is not None
            and cache[0] == t
            and cache[1] is positions["followers"]
            and cache[2] is positions["leaders"]
        ):
            drift = np.mean(cache[3][0], axis=1)
        else:
            drift = follower_drift(
                positions["followers"], positions["leaders"], self.repulsion
            )
        return {"leaders": controls, "followers": drift}

    def extra_metrics(self, positions, t):
        dist = wrapped_distance(positions["followers"], _ORIGIN)
        return {"frac_goal": float(np.mean(dist <= self.scenario.goal_radius))}

    def fraction_inside(self, positions, t):
        return {
            name: fraction_inside(positions[name], self.obstacles, t)
            for name in ("leaders", "followers")
        }
