"""Grid-based diagnostics: periodic density reconstruction, density error
norms, ensemble statistics over independent runs, and the bounded-stability
constants computed from a corrected velocity field.

All fields live on a uniform periodic grid over the square [-pi, pi)^2 with
axis points x_i = -pi + 2 pi i / resolution; derivatives are centered
periodic finite differences and norms are grid quadratures.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .torus import wrapped_displacement

AREA = 4.0 * np.pi ** 2


@dataclass(frozen=True)
class GridField:
    """Scalar or 2-vector field sampled on the uniform periodic grid.

    `values` has shape (resolution, resolution) for scalars or
    (resolution, resolution, 2) for vector fields, indexed [i, j] for the
    point (-pi + 2 pi i / n, -pi + 2 pi j / n).
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (2, 3) or v.shape[0] != v.shape[1] or (
            v.ndim == 3 and v.shape[2] != 2
        ):
            raise InvalidInputError(
                f"grid values must be (n, n) or (n, n, 2), got {v.shape}"
            )
        if v.shape[0] < 32:
            raise InvalidInputError("grid resolution must be at least 32")
        object.__setattr__(self, "values", v)

    @property
    def resolution(self):
        return self.values.shape[0]

    @property
    def is_vector(self):
        return self.values.ndim == 3

    @property
    def spacing(self):
        return 2.0 * np.pi / self.resolution

    @property
    def cell_area(self):
        return self.spacing ** 2

    def axis(self):
        return -np.pi + self.spacing * np.arange(self.resolution)

    def points(self):
        g1, g2 = np.meshgrid(self.axis(), self.axis(), indexing="ij")
        return np.stack([g1, g2], axis=-1)


def uniform_density(resolution=128):
    """The uniform probability density on the domain as a grid field."""
    return GridField(np.full((resolution, resolution), 1.0 / AREA))


def grid_eval(fn, resolution=128):
    """Sample a vectorized function of (..., 2) points onto a grid field."""
    field = GridField(np.zeros((resolution, resolution)))
    return GridField(np.asarray(fn(field.points()), dtype=float))


def kde_density(positions, bandwidth, resolution=128):
    """Periodic Gaussian kernel density estimate of a particle cloud.

    Particles are binned to the grid and convolved with the periodic
    Gaussian kernel by FFT, which is the exact periodic convolution of the
    binned empirical measure.  The result is renormalized so the cell sum
    times the cell area is exactly 1.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] == 0:
        raise InvalidInputError("kde_density needs at least one position")
    if not (bandwidth > 0.0):
        raise InvalidInputError("bandwidth must be positive")
    n = int(resolution)
    h = 2.0 * np.pi / n
    idx = np.floor((positions + np.pi) / h).astype(int) % n
    hist = np.zeros((n, n))
    np.add.at(hist, (idx[:, 0], idx[:, 1]), 1.0)
    axis = -np.pi + h * np.arange(n)
    d = np.minimum(np.abs(axis - axis[0]), 2.0 * np.pi - np.abs(axis - axis[0]))
    g = np.exp(-0.5 * (d / bandwidth) ** 2)
    kern = g[:, None] * g[None, :]
    smooth = np.real(np.fft.ifft2(np.fft.fft2(hist) * np.fft.fft2(kern)))
    smooth = np.maximum(smooth, 0.0)
    total = smooth.sum() * h * h
    return GridField(smooth / total)


def control_field(positions, controls, bandwidth, resolution=128):
    """Kernel-weighted average of per-particle controls on the grid.

    Reconstructs the corrected velocity field w(x) from a snapshot: each
    grid point takes the Gaussian-kernel-weighted mean of the particle
    controls, with a floor on the weight sum so empty regions yield zero
    velocity instead of noise amplification.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    if controls.shape != positions.shape:
        raise InvalidInputError("positions and controls must align")
    if not (bandwidth > 0.0):
        raise InvalidInputError("bandwidth must be positive")
    pts = GridField(np.zeros((resolution, resolution))).points()
    d = wrapped_displacement(positions, pts[:, :, None, :])
    w = np.exp(-np.sum(d * d, axis=-1) / (2.0 * bandwidth ** 2))
    denom = np.maximum(w.sum(axis=-1, keepdims=True), 1e-8)
    values = np.einsum("ijp,pk->ijk", w, controls) / denom
    return GridField(values)


def _check_match(a, b):
    if a.resolution != b.resolution:
        raise InvalidInputError(
            f"grid resolutions differ: {a.resolution} vs {b.resolution}"
        )


def l2_norm(field):
    """Grid quadrature of the L2(domain) norm of a scalar or vector field."""
    return float(np.sqrt(np.sum(field.values ** 2) * field.cell_area))


def l2_error(field, target):
    """L2 distance between two grid fields of matching resolution."""
    _check_match(field, target)
    if field.is_vector != target.is_vector:
        raise InvalidInputError("cannot compare scalar and vector fields")
    return float(
        np.sqrt(np.sum((field.values - target.values) ** 2) * field.cell_area)
    )


def chi_squared_uniform(field):
    """Chi-squared divergence of a density field from the uniform density."""
    if field.is_vector:
        raise InvalidInputError("chi-squared divergence needs a scalar density")
    u = 1.0 / AREA
    return float(np.sum((field.values - u) ** 2 / u) * field.cell_area)


def _ddx(values, axis, spacing):
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (
        2.0 * spacing
    )


def divergence(field):
    """Centered periodic finite-difference divergence of a vector field."""
    if not field.is_vector:
        raise InvalidInputError("divergence needs a vector field")
    h = field.spacing
    return GridField(
        _ddx(field.values[..., 0], 0, h) + _ddx(field.values[..., 1], 1, h)
    )


def laplacian(field):
    """Standard periodic five-point Laplacian of a scalar field."""
    if field.is_vector:
        raise InvalidInputError("laplacian needs a scalar field")
    v, h = field.values, field.spacing
    return GridField(
        (np.roll(v, 1, 0) + np.roll(v, -1, 0) + np.roll(v, 1, 1)
         + np.roll(v, -1, 1) - 4.0 * v) / h ** 2
    )


@dataclass(frozen=True)
class StabilityReport:
    """Bounded-stability constants of the corrected mean-field dynamics.

    a = 2 D - ||div w||_inf and b = sqrt(2) (||div(rho_bar w)||_2
    + ||lap rho_bar||_2); when a is positive the density-tracking error
    converges to a neighborhood of size (b/a)^2, reported as `bound`.
    `condition_ok` flags D > ||div w||_inf / 2, i.e. a > 0.
    """

    a: float
    b: float
    div_w_inf: float
    bound: float = None
    condition_ok: bool = False

    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "div_w_inf": self.div_w_inf,
            "bound": self.bound,
            "condition_ok": self.condition_ok,
        }


def stability_constants(w_field, rho_bar, D):
    """Evaluate the bounded-stability constants on matching grid fields.

    `w_field` is the corrected velocity field (2-vector), `rho_bar` the
    reference density; derivatives use centered periodic differences, the
    sup norm is the grid maximum, and 2-norms are grid quadratures.  The
    bound is only present when a > 0.
    """
    _check_match(w_field, rho_bar)
    if not w_field.is_vector or rho_bar.is_vector:
        raise InvalidInputError(
            "stability_constants needs a vector w and a scalar density"
        )
    if w_field.resolution < 64:
        raise InvalidInputError("stability diagnostics need resolution >= 64")
    if D < 0.0:
        raise InvalidInputError("diffusion coefficient must be nonnegative")
    div_w = divergence(w_field)
    div_w_inf = float(np.max(np.abs(div_w.values)))
    a = 2.0 * D - div_w_inf
    flux = GridField(w_field.values * rho_bar.values[..., None])
    b = np.sqrt(2.0) * (l2_norm(divergence(flux)) + l2_norm(laplacian(rho_bar)))
    ok = a > 0.0
    return StabilityReport(
        a=float(a),
        b=float(b),
        div_w_inf=div_w_inf,
        bound=float((b / a) ** 2) if ok else None,
        condition_ok=ok,
    )


@dataclass(frozen=True)
class EnsembleStats:
    """Pointwise mean and sample standard deviation per metric column."""

    times: np.ndarray
    mean: dict
    std: dict
    n_runs: int


def ensemble_stats(records):
    """Aggregate runs sharing one time grid into mean/std time series.

    Standard deviations are sample deviations (ddof=1), zero for a single
    record.  Metrics that are NaN in every record stay NaN.
    """
    records = list(records)
    if not records:
        raise InvalidInputError("ensemble_stats needs at least one record")
    times = records[0].times
    for rec in records[1:]:
        if rec.times.shape != times.shape or not np.allclose(rec.times, times):
            raise InvalidInputError("records do not share a common time grid")
    mean, std = {}, {}
    for col in records[0].metrics:
        stack = np.stack([rec.metrics[col] for rec in records])
        mean[col] = stack.mean(axis=0)
        std[col] = (
            stack.std(axis=0, ddof=1) if len(records) > 1
            else np.zeros(stack.shape[1])
        )
    return EnsembleStats(
        times=times.copy(), mean=mean, std=std, n_runs=len(records)
    )
