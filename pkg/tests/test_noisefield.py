import math

import numpy as np
import pytest

from fringearray.errors import (
    BracketError,
    GeometryError,
    GridError,
    InvalidSpecError,
    OutOfRangeError,
)
from fringearray.noisefield import (
    GRAVITATIONAL_CONSTANT as G,
    BandlimitedWhite,
    DisplacementCoefficients,
    NoiseModel,
    NoisePath,
    OrnsteinUhlenbeck,
    PointMassSource,
    ShotConstant,
    displacement_at_site,
    displacement_coefficients,
    displacement_std,
    finite_difference_sensitivity,
    kernel_weights,
    newtonian_acceleration,
    sample_path,
    solve_standoff_distance,
)


def make_path(times, values):
    values = np.atleast_2d(values)
    return NoisePath(times=times, values=values, seed=0)


class TestSamplePath:
    def test_zero_model(self):
        path = sample_path(NoiseModel.zero(order=2), 1.0, 0.1, seed=3)
        assert np.all(path.values == 0.0)
        assert path.values.shape == (3, 11)

    def test_constant_is_constant(self):
        path = sample_path(NoiseModel.common_mode(ShotConstant(std=2.0)), 1.0, 0.05, seed=3)
        assert np.ptp(path.values[0]) == 0.0

    def test_constant_law_of_large_numbers(self):
        model = NoiseModel.common_mode(ShotConstant(mean=0.0, std=1.0))
        n = 100_000
        rng = np.random.default_rng(0)
        z = rng.standard_normal((n, 1))
        values = model.processes[0].realize(z, np.array([0.0, 1.0]))[:, 0]
        assert abs(values.mean()) < 3.0 / math.sqrt(n)
        assert values.std() == pytest.approx(1.0, rel=0.02)

    def test_ou_lag_autocorrelation(self):
        # empirical lag-tau autocorrelation ~ sigma^2 / e
        tau, sigma, step = 0.5, 1.3, 0.05
        proc = OrnsteinUhlenbeck(tau=tau, std=sigma)
        times = np.arange(0.0, 2.0 + step / 2, step)
        rng = np.random.default_rng(7)
        z = rng.standard_normal((20_000, len(times)))
        paths = proc.realize(z, times)
        lag = int(round(tau / step))
        corr = np.mean(paths[:, :-lag] * paths[:, lag:])
        assert corr == pytest.approx(sigma**2 / math.e, rel=0.03)
        assert paths.std() == pytest.approx(sigma, rel=0.02)

    def test_white_holds_value(self):
        model = NoiseModel.common_mode(BandlimitedWhite(std=1.0, hold=0.25))
        path = sample_path(model, 1.0, 0.05, seed=9)
        g = path.values[0]
        # five nodes per hold block, constant within, changing across
        assert np.ptp(g[:5]) == 0.0
        assert g[0] != g[6]

    def test_deterministic_per_seed_and_shot(self):
        model = NoiseModel.common_mode(OrnsteinUhlenbeck(tau=0.3, std=1.0))
        a = sample_path(model, 1.0, 0.01, seed=11, shot=4)
        b = sample_path(model, 1.0, 0.01, seed=11, shot=4)
        c = sample_path(model, 1.0, 0.01, seed=11, shot=5)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_grid_errors(self):
        model = NoiseModel.zero()
        with pytest.raises(GridError):
            sample_path(model, 1.0, 2.0, seed=0)
        with pytest.raises(GridError):
            sample_path(model, -1.0, 0.1, seed=0)
        with pytest.raises(GridError):
            sample_path(model, 1.0, -0.1, seed=0)

    def test_invalid_processes(self):
        with pytest.raises(InvalidSpecError):
            OrnsteinUhlenbeck(tau=0.0, std=1.0)
        with pytest.raises(InvalidSpecError):
            ShotConstant(std=-1.0)
        with pytest.raises(InvalidSpecError):
            BandlimitedWhite(std=1.0, hold=0.0)


class TestDisplacement:
    def test_constant_acceleration(self):
        times = np.linspace(0.0, 2.0, 401)
        c = 1.7
        path = make_path(times, np.full_like(times, c))
        coeffs = displacement_coefficients(path, 2.0)
        # trapezoid is exact for the linear integrand c (s - t)
        assert coeffs[0] == pytest.approx(-c * 4.0 / 2.0, rel=1e-13)

    def test_linear_ramp(self):
        times = np.linspace(0.0, 1.5, 3001)
        beta = 0.8
        path = make_path(times, beta * times)
        coeffs = displacement_coefficients(path, 1.5)
        assert coeffs[0] == pytest.approx(-beta * 1.5**3 / 6.0, rel=1e-6)

    def test_zero_path(self):
        times = np.linspace(0.0, 1.0, 11)
        path = make_path(times, np.zeros((3, 11)))
        coeffs = displacement_coefficients(path, 1.0)
        assert coeffs.values == (0.0, 0.0, 0.0)

    def test_out_of_range(self):
        path = make_path(np.linspace(0, 1, 11), np.ones(11))
        with pytest.raises(OutOfRangeError):
            displacement_coefficients(path, 2.0)
        with pytest.raises(OutOfRangeError):
            displacement_coefficients(path, -0.5)

    def test_partial_interval(self):
        # t between grid nodes: still O(step^2) accurate for smooth g
        times = np.linspace(0.0, 1.0, 101)
        path = make_path(times, np.sin(3 * times))
        t = 0.73501
        got = float(np.dot(kernel_weights(times, t), path.values[0]))
        from scipy.integrate import quad
        want, _ = quad(lambda s: math.sin(3 * s) * (s - t), 0.0, t)
        assert got == pytest.approx(want, abs=5e-5)

    def test_quadrature_convergence(self):
        # halving the step shrinks the error at second order (>= 3.5x)
        def run(n):
            times = np.linspace(0.0, 2.0, n + 1)
            path = make_path(times, np.sin(2.3 * times) + 0.4)
            return displacement_coefficients(path, 2.0)[0]

        from scipy.integrate import quad
        exact, _ = quad(lambda s: (math.sin(2.3 * s) + 0.4) * (s - 2.0), 0.0, 2.0,
                        limit=200)
        e1 = abs(run(100) - exact)
        e2 = abs(run(200) - exact)
        assert e1 / e2 >= 3.5

    def test_site_evaluation(self):
        coeffs = DisplacementCoefficients(values=(1.5, -0.7), time=1.0)
        assert displacement_at_site(coeffs, 2, 0.1) == pytest.approx(1.5 + 0.2 * -0.7)
        # order-0 only: common mode, same everywhere
        c0 = DisplacementCoefficients(values=(2.2,), time=1.0)
        assert displacement_at_site(c0, 0, 0.1) == displacement_at_site(c0, 7, 0.1)
        c2 = DisplacementCoefficients(values=(0.0, 0.0, 3.0), time=1.0)
        assert displacement_at_site(c2, 3, 0.1) == pytest.approx(0.09 * 3.0)

    def test_site_preconditions(self):
        coeffs = DisplacementCoefficients(values=(1.0,), time=1.0)
        with pytest.raises(OutOfRangeError):
            displacement_at_site(coeffs, -1, 0.1)
        with pytest.raises(InvalidSpecError):
            displacement_at_site(coeffs, 1, 0.0)

    def test_displacement_std_constant(self):
        model = NoiseModel.common_mode(ShotConstant(std=2.0))
        (std,) = displacement_std(model, 3.0, 0.01)
        assert std == pytest.approx(2.0 * 9.0 / 2.0, rel=1e-12)

    def test_displacement_std_ou_vs_monte_carlo(self):
        tau, sigma = 0.4, 1.2
        model = NoiseModel.common_mode(OrnsteinUhlenbeck(tau=tau, std=sigma))
        step = 0.01
        (std,) = displacement_std(model, 2.0, step)
        times = np.arange(0.0, 2.0 + step / 2, step)
        rng = np.random.default_rng(5)
        z = rng.standard_normal((20_000, len(times)))
        paths = model.processes[0].realize(z, times)
        w = kernel_weights(times, 2.0)
        sample_std = (paths @ w).std()
        assert sample_std == pytest.approx(std, rel=0.03)

    def test_end_to_end_translation_covariance(self, small_spec):
        # a sampled path, its displacement functional, the site evaluation
        # and the closed-form density chain into a pure translation
        from fringearray.wavepacket import overlap_time, position_pdf

        tk = overlap_time(small_spec)
        model = NoiseModel.common_mode(OrnsteinUhlenbeck(tau=0.5, std=1.0))
        path = sample_path(model, tk, tk / 256, seed=17)
        coeffs = displacement_coefficients(path, tk)
        shift = displacement_at_site(coeffs, 0, 0.1)
        displaced = position_pdf(small_spec, tk, shift)
        base = position_pdf(small_spec, tk, 0.0)
        x = np.linspace(-6, 6, 501)
        assert displaced(x) == pytest.approx(base(x - shift), rel=1e-13)


class TestPointMass:
    def test_reference_scenario(self):
        a = newtonian_acceleration(PointMassSource(1.0, 1000.0))
        assert a == pytest.approx(6.674e-17, rel=1e-12)
        assert f"{a:.3g}" == "6.67e-17"

    def test_unit_distance(self):
        assert newtonian_acceleration(PointMassSource(1.0, 1.0)) == pytest.approx(G)

    def test_linear_in_mass(self):
        assert newtonian_acceleration(PointMassSource(2.0, 1000.0)) == pytest.approx(
            1.3348e-16, rel=1e-4
        )

    def test_sensitivity_order_zero(self):
        src = PointMassSource(1.0, 1000.0)
        assert finite_difference_sensitivity(src, 0.1, 0) == pytest.approx(
            newtonian_acceleration(src)
        )

    def test_sensitivity_first_order(self):
        src = PointMassSource(1.0, 58.5)
        got = finite_difference_sensitivity(src, 0.1, 1)
        leading = 2 * G * 0.1 / 58.5**3
        assert got == pytest.approx(leading, rel=5e-3)
        assert got == pytest.approx(6.67e-17, rel=0.02)

    def test_sensitivity_second_order(self):
        src = PointMassSource(1.0, 15.65)
        got = finite_difference_sensitivity(src, 0.1, 2)
        leading = 6 * G * 0.1**2 / 15.65**4
        assert got == pytest.approx(leading, rel=0.05)
        assert got == pytest.approx(6.67e-17, rel=0.05)

    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_derivative_limit(self, q):
        # sensitivity -> (q+1)! G M h^q / R^(q+2) as h/R -> 0, to O(h/R)
        R, h = 100.0, 0.01
        src = PointMassSource(1.0, R)
        got = finite_difference_sensitivity(src, h, q)
        analytic = math.factorial(q + 1) * G * h**q / R ** (q + 2)
        assert got / analytic == pytest.approx(1.0, abs=5 * (q + 2) * h / R)

    def test_geometry_error(self):
        with pytest.raises(GeometryError):
            finite_difference_sensitivity(PointMassSource(1.0, 0.15), 0.1, 2)

    def test_standoff_first_order(self):
        r = solve_standoff_distance(1.0, 0.1, 1, 6.67e-17)
        assert abs(r - 58.5) <= 0.1

    def test_standoff_second_order(self):
        r = solve_standoff_distance(1.0, 0.1, 2, 6.67e-17)
        assert abs(r - 15.7) <= 0.1

    def test_standoff_order_zero_inverts_newton(self):
        r = solve_standoff_distance(1.0, 0.1, 0, 6.674e-17)
        assert r == pytest.approx(1000.0, rel=1e-6)

    @pytest.mark.parametrize("q", [0, 1, 2])
    def test_standoff_roundtrip(self, q):
        r = solve_standoff_distance(1.0, 0.1, q, 6.67e-17)
        back = finite_difference_sensitivity(PointMassSource(1.0, r), 0.1, q)
        assert back == pytest.approx(6.67e-17, rel=1e-6)

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            solve_standoff_distance(1.0, 0.1, 0, 1e10)

    def test_invalid_budget(self):
        with pytest.raises(InvalidSpecError):
            solve_standoff_distance(1.0, 0.1, 0, -1.0)
