"""Dangerous-region density, its kernel potential, the kernel-weighted
overlap, the barrier functional and the certified mass bound.

The dangerous region is a union of disks, each carrying a uniform unit-mass
measure (so the total obstacle mass equals the number of disks).  With this
normalization the potential at the center of an isolated disk matches the
closed-form radial integral (2 sigma^2 / r^2)(1 - exp(-r^2 / 2 sigma^2))
independently of how many disks there are, and a uniform population density
is unsafe for the thresholds used by the experiments.

The potential C(x) = integral of k(x, y) against the obstacle measure is
discretized once by a deterministic concentric-ring quadrature; all
evaluations afterwards are exact sums over the fixed node set, which keeps
results reproducible bit-for-bit.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateUnavailableError, InvalidInputError
from .torus import GaussKernelSpec, wrap, wrapped_distance

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class ObstacleSet:
    """Union of dangerous disks: centers (M, 2), common radius, velocities (M, 2)."""

    centers: np.ndarray
    radius: float
    velocities: np.ndarray = None

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if centers.size == 0:
            centers = centers.reshape(0, 2)
        object.__setattr__(self, "centers", centers)
        if not (self.radius > 0.0):
            raise InvalidInputError(f"radius must be positive, got {self.radius}")
        vel = self.velocities
        vel = np.zeros_like(centers) if vel is None else np.asarray(vel, dtype=float)
        if vel.shape != centers.shape:
            raise InvalidInputError("velocities must match centers in shape")
        object.__setattr__(self, "velocities", vel)

    @property
    def count(self):
        return self.centers.shape[0]

    @property
    def is_static(self):
        return not np.any(self.velocities)

    def centers_at(self, t):
        return wrap(self.centers + self.velocities * t)

    def to_dict(self):
        return {
            "centers": self.centers.tolist(),
            "radius": self.radius,
            "velocities": self.velocities.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            centers=np.asarray(d["centers"], dtype=float),
            radius=float(d["radius"]),
            velocities=np.asarray(d["velocities"], dtype=float),
        )


@dataclass(frozen=True)
class BarrierSpec:
    """Threshold, linear class-K gain and kernel bandwidth for one population.

    `margin` is a discrete-time robustness offset: the filter treats the
    barrier as H - margin, so the population hovers at H ~ margin instead of
    H ~ 0.  With finitely many agents the empirical barrier fluctuates at
    scale ~1/sqrt(N) around its drift, and a zero margin lets those
    fluctuations carry H below zero; a margin of a few fluctuation standard
    deviations restores invariance of {H > 0} at the particle level.
    """

    epsilon: float
    gamma: float
    kernel: GaussKernelSpec
    margin: float = 0.0
    recovery_gain: float = None

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.gamma > 0.0):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not (0.0 <= self.margin < self.epsilon):
            raise InvalidInputError(
                f"margin must lie in [0, epsilon), got {self.margin}"
            )
        if self.recovery_gain is not None and not (
            self.recovery_gain >= self.gamma
        ):
            raise InvalidInputError(
                "recovery_gain must be at least gamma, got "
                f"{self.recovery_gain}"
            )

    def class_k(self, H):
        """Class-K allowance -gain * (H - margin) of the barrier rate.

        Above the margin the usual linear gain applies.  Below it the
        optional `recovery_gain` takes over: the constraint then demands a
        proportionally faster climb back.  Strengthening the demand in the
        violated region never weakens the certificate -- any rate admissible
        under the stronger gain is admissible under the weaker one.
        """
        gain = self.gamma
        if self.recovery_gain is not None and H < self.margin:
            gain = self.recovery_gain
        return -gain * (H - self.margin)


@dataclass(frozen=True)
class ObstaclePotential:
    """Fixed quadrature discretization of the obstacle potential C."""

    nodes: np.ndarray  # (Q, 2) node positions at t = 0
    weights: np.ndarray  # (Q,) quadrature weights, unit mass per disk
    node_velocities: np.ndarray  # (Q, 2), rigid with the parent disk
    kernel: GaussKernelSpec
    source: ObstacleSet = None

    @property
    def is_empty(self):
        return self.nodes.shape[0] == 0

    @property
    def is_static(self):
        return not np.any(self.node_velocities)

    def nodes_at(self, t):
        if self.is_static or t == 0.0:
            return self.nodes
        return wrap(self.nodes + self.node_velocities * t)


def _disk_nodes(nodes_per_disk):
    """Concentric-ring quadrature on the unit disk, weights summing to 1.

    Gauss-Legendre in the squared radius (the uniform area variable) crossed
    with a uniform angular rule per ring; exact for radial integrands up to
    high polynomial degree and symmetric, so the node centroid coincides
    with the disk center.  Returns (offsets (Q, 2), weights (Q,)).
    """
    n_rings = max(4, int(round(np.sqrt(nodes_per_disk / 5.0))))
    per_ring = max(8, nodes_per_disk // n_rings)
    u, gw = np.polynomial.legendre.leggauss(n_rings)
    u = 0.5 * (u + 1.0)  # squared-radius nodes on (0, 1)
    gw = 0.5 * gw
    offsets, weights = [], []
    for i in range(n_rings):
        r = np.sqrt(u[i])
        theta = 2.0 * np.pi * np.arange(per_ring) / per_ring + i * GOLDEN_ANGLE
        offsets.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        weights.append(np.full(per_ring, gw[i] / per_ring))
    return np.concatenate(offsets), np.concatenate(weights)


def build_potential(obs, kernel, nodes_per_disk=256):
    """Discretize the obstacle potential with a deterministic node layout.

    Each disk contributes the same node pattern scaled to its radius and
    carries unit total weight.  An empty obstacle set yields an empty
    potential whose evaluations are identically zero.
    """
    if nodes_per_disk < 16:
        raise InvalidInputError("nodes_per_disk must be at least 16")
    if obs.count == 0:
        empty = np.zeros((0, 2))
        return ObstaclePotential(
            nodes=empty, weights=np.zeros(0), node_velocities=empty,
            kernel=kernel, source=obs,
        )
    offsets, w = _disk_nodes(nodes_per_disk)
    nodes = wrap(
        (obs.centers[:, None, :] + obs.radius * offsets[None, :, :]).reshape(-1, 2)
    )
    weights = np.tile(w, obs.count)
    vel = np.repeat(obs.velocities, offsets.shape[0], axis=0)
    return ObstaclePotential(
        nodes=nodes, weights=weights, node_velocities=vel, kernel=kernel, source=obs,
    )


def potential_eval(pot, x, t=0.0):
    """Evaluate C, grad C, laplacian C and the explicit time derivative of C.

    x has shape (..., 2); all outputs broadcast accordingly.  For static
    zones the time derivative is exactly zero.
    """
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    if pot.is_empty:
        return (np.zeros(lead), np.zeros(lead + (2,)), np.zeros(lead), np.zeros(lead))
    nodes = pot.nodes_at(t)
    # fused kernel sums: this is the per-step hot path, so the Gaussian and
    # its derivatives are expanded in place instead of calling gauss_kernel
    sig2 = pot.kernel.sigma ** 2
    d = x[..., None, :] - nodes
    d -= (2.0 * np.pi) * np.rint(d / (2.0 * np.pi))
    s2 = np.einsum("...qi,...qi->...q", d, d)
    e = np.exp(s2 * (-0.5 / sig2))
    w = pot.weights
    C = e @ w
    ew = e * w
    gradC = np.einsum("...q,...qi->...i", ew, d) * (-1.0 / sig2)
    lapC = np.einsum("...q,...q->...", ew, s2) / sig2 ** 2 - (2.0 / sig2) * C
    if pot.is_static:
        dtC = np.zeros(lead)
    else:
        # grad_x k = -d e / sig2; dtC = -sum_q w_q grad_x k . v_q
        dtC = np.einsum("...qi,qi->...", ew[..., None] * d, pot.node_velocities) / sig2
    return C, gradC, lapC, dtC


def kernel_overlap(positions, pot, t=0.0):
    """Average obstacle potential over the agent positions.

    This is the kernel-weighted overlap between the empirical measure of the
    population and the obstacle measure; it lies in [0, number of disks].
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] == 0:
        raise InvalidInputError("kernel_overlap needs at least one position")
    C, _, _, _ = potential_eval(pot, positions, t)
    return float(np.mean(C))


def barrier_value(positions, pot, spec, t=0.0):
    """Barrier H = epsilon - overlap; the population is safe while H > 0."""
    return spec.epsilon - kernel_overlap(positions, pot, t)


def _grid_points(resolution):
    axis = -np.pi + 2.0 * np.pi * np.arange(resolution) / resolution
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def _grid_infima(pot, grid_resolution):
    """Infima of C over the obstacle region and its complement, by grid search."""
    if grid_resolution < 32:
        raise InvalidInputError("grid_resolution must be at least 32")
    pts = _grid_points(grid_resolution)
    obs = pot.source
    C = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], 65536):
        C[lo:lo + 65536] = potential_eval(pot, pts[lo:lo + 65536], 0.0)[0]
    dist = wrapped_distance(pts[:, None, :], obs.centers[None, :, :])
    inside = np.any(dist <= obs.radius, axis=1)
    if not inside.any() or inside.all():
        raise InvalidInputError("grid does not resolve both obstacle region and complement")
    return float(C[inside].min()), float(C[~inside].min())


def min_overlap_bound(pot, mu, grid_resolution=512):
    """Minimum overlap achievable by a density with mass mu inside the region.

    Affine in mu: mu * inf_O C + (1 - mu) * inf_{O^c} C, with both infima
    estimated by exhaustive search over a uniform grid.
    """
    if not (0.0 <= mu <= 1.0):
        raise InvalidInputError(f"mu must lie in [0, 1], got {mu}")
    inf_in, inf_out = _grid_infima(pot, grid_resolution)
    return mu * inf_in + (1.0 - mu) * inf_out


def certified_threshold(pot, mu, grid_resolution=512):
    """Safety threshold certifying interior mass below mu.

    Any density whose overlap stays below the returned value keeps strictly
    less than mass mu inside the dangerous region.  Requires the potential
    infimum inside the region to exceed the one outside; otherwise no
    certificate exists and CertificateUnavailableError is raised.
    """
    if not (0.0 < mu < 1.0):
        raise InvalidInputError(f"mu must lie in (0, 1), got {mu}")
    inf_in, inf_out = _grid_infima(pot, grid_resolution)
    if inf_in <= inf_out:
        raise CertificateUnavailableError(
            f"no certificate: inf C inside ({inf_in:.6g}) <= inf C outside ({inf_out:.6g})"
        )
    return mu * inf_in + (1.0 - mu) * inf_out


def fraction_inside(positions, obs, t=0.0):
    """Fraction of agents lying within some dangerous disk at time t."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] == 0:
        raise InvalidInputError("fraction_inside needs at least one position")
    if obs.count == 0:
        return 0.0
    dist = wrapped_distance(positions[:, None, :], obs.centers_at(t)[None, :, :])
    return float(np.mean(np.any(dist <= obs.radius, axis=1)))
