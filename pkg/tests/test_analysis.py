"""Grid diagnostics unit tests: density estimation, norms, stability."""

import numpy as np
import pytest

from swarmsafe import (
    GridField,
    InvalidInputError,
    VonMisesTarget,
    chi_squared_uniform,
    divergence,
    ensemble_stats,
    grid_eval,
    kde_density,
    l2_error,
    l2_norm,
    laplacian,
    stability_constants,
    uniform_density,
    von_mises_density,
)

RNG = np.random.default_rng(17)
AREA = 4.0 * np.pi**2


class TestGridField:
    def test_shape_validation(self):
        GridField(np.zeros((32, 32)))
        GridField(np.zeros((64, 64, 2)))
        with pytest.raises(InvalidInputError):
            GridField(np.zeros((16, 16)))
        with pytest.raises(InvalidInputError):
            GridField(np.zeros((32, 33)))
        with pytest.raises(InvalidInputError):
            GridField(np.zeros((32, 32, 3)))

    def test_axis_and_points(self):
        f = GridField(np.zeros((32, 32)))
        ax = f.axis()
        assert ax[0] == pytest.approx(-np.pi)
        assert ax[1] - ax[0] == pytest.approx(f.spacing)
        assert f.points().shape == (32, 32, 2)


class TestKde:
    def test_mass_normalization(self):
        pts = RNG.uniform(-np.pi, np.pi, size=(100, 2))
        f = kde_density(pts, bandwidth=0.3, resolution=64)
        assert f.values.sum() * f.cell_area == pytest.approx(1.0, abs=1e-6)

    def test_single_particle_peak_at_its_cell(self):
        x = np.array([[0.5, -1.0]])
        f = kde_density(x, bandwidth=0.2, resolution=64)
        i, j = np.unravel_index(np.argmax(f.values), f.values.shape)
        peak = f.axis()[i], f.axis()[j]
        assert abs(peak[0] - 0.5) <= f.spacing
        assert abs(peak[1] + 1.0) <= f.spacing

    def test_large_uniform_sample_is_flat(self):
        # bandwidth 0.5 keeps the sampling noise of the cell maxima well
        # below the 5% flatness tolerance at this sample size
        pts = RNG.uniform(-np.pi, np.pi, size=(100_000, 2))
        f = kde_density(pts, bandwidth=0.5, resolution=64)
        assert np.max(np.abs(f.values - 1.0 / AREA)) < 0.05 / AREA

    def test_periodic_wrap(self):
        # a cloud at the seam must produce a smooth wrapped bump
        pts = np.tile([[-np.pi + 0.01, 0.0]], (50, 1))
        f = kde_density(pts, bandwidth=0.3, resolution=64)
        left = f.values[0, 32]
        right = f.values[-1, 32]
        assert left > 0.0 and right > 0.0
        assert abs(left - right) / max(left, right) < 0.5

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            kde_density(np.zeros((0, 2)), 0.2)
        with pytest.raises(InvalidInputError):
            kde_density(np.zeros((3, 2)), 0.0)


class TestNorms:
    def test_identical_fields(self):
        f = GridField(RNG.normal(size=(64, 64)))
        assert l2_error(f, f) == 0.0

    def test_constant_offset(self):
        c = 0.37
        f = GridField(np.zeros((64, 64)))
        g = GridField(np.full((64, 64), c))
        assert l2_error(f, g) == pytest.approx(2.0 * np.pi * c, rel=1e-12)

    def test_triangle_inequality(self):
        for _ in range(20):
            a, b, c = (GridField(RNG.normal(size=(32, 32))) for _ in range(3))
            assert l2_error(a, c) <= l2_error(a, b) + l2_error(b, c) + 1e-12

    def test_mismatched_resolutions(self):
        with pytest.raises(InvalidInputError):
            l2_error(GridField(np.zeros((32, 32))), GridField(np.zeros((64, 64))))

    def test_chi_squared_uniform(self):
        assert chi_squared_uniform(uniform_density(64)) == pytest.approx(0.0)
        bump = uniform_density(64).values.copy()
        bump[0, 0] *= 2.0
        assert chi_squared_uniform(GridField(bump)) > 0.0


class TestDerivatives:
    def test_divergence_of_analytic_field(self):
        # w = (sin x1, 0) has divergence cos x1
        f = grid_eval(
            lambda x: np.stack(
                [np.sin(x[..., 0]), np.zeros_like(x[..., 0])], axis=-1
            ),
            128,
        )
        div = divergence(f)
        expected = grid_eval(lambda x: np.cos(x[..., 0]), 128)
        assert np.max(np.abs(div.values - expected.values)) < 1e-3

    def test_divergence_free_stream_function_field(self):
        # w = (d psi / d x2, -d psi / d x1) for psi = cos x1 cos x2
        def w(x):
            return np.stack(
                [
                    -np.cos(x[..., 0]) * np.sin(x[..., 1]),
                    np.sin(x[..., 0]) * np.cos(x[..., 1]),
                ],
                axis=-1,
            )

        res = 128
        div = divergence(grid_eval(w, res))
        assert np.max(np.abs(div.values)) < 10.0 / res**2

    def test_laplacian_of_plane_wave(self):
        f = grid_eval(lambda x: np.cos(2.0 * x[..., 0]), 128)
        lap = laplacian(f)
        expected = grid_eval(lambda x: -4.0 * np.cos(2.0 * x[..., 0]), 128)
        assert np.max(np.abs(lap.values - expected.values)) < 5e-3


class TestStability:
    def test_zero_field_uniform_density(self):
        w = GridField(np.zeros((128, 128, 2)))
        rep = stability_constants(w, uniform_density(128), D=0.05)
        assert rep.a == pytest.approx(0.1, abs=1e-12)
        assert rep.b == pytest.approx(0.0, abs=1e-12)
        assert rep.bound == pytest.approx(0.0, abs=1e-12)
        assert rep.condition_ok

    def test_zero_field_depends_only_on_diffusion(self):
        w = GridField(np.zeros((128, 128, 2)))
        rho = grid_eval(
            lambda x: von_mises_density(x, VonMisesTarget()), 128
        )
        rho = GridField(rho.values / (rho.values.sum() * rho.cell_area))
        r1 = stability_constants(w, rho, D=0.05)
        r2 = stability_constants(w, uniform_density(128), D=0.05)
        assert r1.a == r2.a == pytest.approx(0.1)

    def test_spectral_oracle_for_laplacian_norm(self):
        # independent spectral differentiation of the normalized goal density;
        # the goal profile is sharply peaked, so a fine grid keeps the
        # finite-difference truncation error inside the 1% tolerance
        res = 256
        rho = grid_eval(lambda x: von_mises_density(x, VonMisesTarget()), res)
        vals = rho.values / (rho.values.sum() * rho.cell_area)
        rho = GridField(vals)
        k = np.fft.fftfreq(res, d=1.0 / res)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        lap_spec = np.real(
            np.fft.ifft2(-(k1**2 + k2**2) * np.fft.fft2(vals))
        )
        spectral_norm = np.sqrt(np.sum(lap_spec**2) * rho.cell_area)
        w = GridField(np.zeros((res, res, 2)))
        rep = stability_constants(w, rho, D=0.05)
        assert rep.b == pytest.approx(np.sqrt(2.0) * spectral_norm, rel=0.01)

    def test_condition_flag_threshold(self):
        w = grid_eval(
            lambda x: np.stack(
                [np.sin(x[..., 0]), np.zeros_like(x[..., 0])], axis=-1
            ),
            128,
        )
        rho = uniform_density(128)
        assert not stability_constants(w, rho, D=0.4).condition_ok
        assert stability_constants(w, rho, D=0.4).bound is None
        assert stability_constants(w, rho, D=0.6).condition_ok

    def test_resolution_requirement(self):
        w = GridField(np.zeros((32, 32, 2)))
        with pytest.raises(InvalidInputError):
            stability_constants(w, uniform_density(32), D=0.05)


class FakeRecord:
    def __init__(self, times, metrics):
        self.times = np.asarray(times, dtype=float)
        self.metrics = {k: np.asarray(v, dtype=float) for k, v in metrics.items()}


class TestEnsembleStats:
    def test_single_record(self):
        rec = FakeRecord([0.0, 1.0], {"m": [0.5, 0.7]})
        stats = ensemble_stats([rec])
        assert np.array_equal(stats.mean["m"], rec.metrics["m"])
        assert np.all(stats.std["m"] == 0.0)
        assert stats.n_runs == 1

    def test_two_point_statistics(self):
        r1 = FakeRecord([0.0], {"m": [0.0]})
        r2 = FakeRecord([0.0], {"m": [1.0]})
        stats = ensemble_stats([r1, r2])
        assert stats.mean["m"][0] == pytest.approx(0.5)
        assert stats.std["m"][0] == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_permutation_invariance(self):
        recs = [
            FakeRecord([0.0, 1.0], {"m": RNG.normal(size=2)}) for _ in range(6)
        ]
        s1 = ensemble_stats(recs)
        s2 = ensemble_stats(recs[::-1])
        assert np.allclose(s1.mean["m"], s2.mean["m"])
        assert np.allclose(s1.std["m"], s2.std["m"])

    def test_mismatched_grids_rejected(self):
        r1 = FakeRecord([0.0, 1.0], {"m": [0.0, 1.0]})
        r2 = FakeRecord([0.0, 2.0], {"m": [0.0, 1.0]})
        with pytest.raises(InvalidInputError):
            ensemble_stats([r1, r2])

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            ensemble_stats([])
