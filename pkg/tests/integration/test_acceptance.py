"""Cross-module acceptance runs on synthetic problems.

Long runs carry the ``slow`` marker and only run with ``--run-slow``.
"""

import math

import numpy as np
import pytest

ORDER_HORIZON = 2.0
ORDER_REFERENCE_TAU = 0.00625


def _order_problem(smooth_image):
    from mixgeo.energy import IndicatorSpec, ModelWeights, gray_level_indicator

    u0 = smooth_image(32, mean=100.0, amplitude=10.0)
    f = smooth_image(32, mean=100.0, amplitude=4.0)
    weights = ModelWeights(b=0.001, eta=0.01, indicator=IndicatorSpec.constant(1.0))
    alpha = gray_level_indicator(f, weights.indicator)
    return u0, f, weights, alpha


def _sav_trajectory(problem, order, tau):
    """Final iterate after integrating to ORDER_HORIZON with a fixed step."""
    from mixgeo.solvers.sav import (
        SavConfig,
        SavState,
        eps1_and_derivative,
        sav_step_first,
        sav_step_second,
    )

    u0, f, weights, alpha = problem
    config = SavConfig(order=order, gamma=1.0, C=1e7, tau0=tau, tau_min=tau, tau_max=tau)
    eps1, _ = eps1_and_derivative(u0, f, weights, config.gamma, config.C, alpha)
    state = SavState(
        u=u0,
        r=math.sqrt(eps1),
        tau=tau,
        u_prev=u0 if order == "second" else None,
    )
    step = sav_step_first if order == "first" else sav_step_second
    for _ in range(round(ORDER_HORIZON / tau)):
        state = step(state, f, weights, config, alpha)
    return state.u.data


class TestTemporalOrder:
    """Step-halving study against a fine-step reference trajectory."""

    @pytest.mark.parametrize("order,min_ratio", [("second", 3.2), ("first", 1.74)])
    def test_halving_tau_reduces_error(self, smooth_image, order, min_ratio):
        """Test halving tau shrinks the final-state error by the order's factor."""
        problem = _order_problem(smooth_image)
        reference = _sav_trajectory(problem, order, ORDER_REFERENCE_TAU)
        coarse = np.linalg.norm(_sav_trajectory(problem, order, 0.1) - reference)
        fine = np.linalg.norm(_sav_trajectory(problem, order, 0.05) - reference)

        assert coarse > 0 and fine > 0
        assert coarse / fine >= min_ratio


class TestFixedPoints:
    """A constant image with f = image is kept by every solver."""

    @pytest.mark.parametrize("name", ["explicit", "aos", "sav1", "sav2"])
    def test_constant_image(self, name):
        """Test the final iterate equals the constant input."""
        from mixgeo.energy import model_preset
        from mixgeo.grid import ImageGrid
        from mixgeo.solvers import get_solver
        from mixgeo.solvers.base import RunOptions

        f = ImageGrid.constant(24, 24, 120.0)
        result = get_solver(name).run(f, model_preset("mixed"), RunOptions(timings=False))
        np.testing.assert_allclose(result.final.data, 120.0, rtol=1e-12)


def _noisy(kind, looks, seed=11, size=64):
    from mixgeo.noise import GammaNoiseSpec, apply_multiplicative_noise
    from mixgeo.phantoms import make_phantom

    clean = make_phantom(kind, size)
    return clean, apply_multiplicative_noise(clean, GammaNoiseSpec(looks=looks, seed=seed))


@pytest.mark.slow
class TestEnergyDissipation:
    """Modified energy of both SAV schemes over forced step sizes."""

    @pytest.mark.parametrize("kind", ["halo", "shapes"])
    @pytest.mark.parametrize("looks", [1, 4, 10])
    @pytest.mark.parametrize("tau", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("order", ["first", "second"])
    def test_no_increase(self, kind, looks, tau, order):
        """Test 100 steps never raise the modified energy."""
        from mixgeo.energy import model_preset
        from mixgeo.solvers.base import RunOptions, StoppingRule
        from mixgeo.solvers.sav import SavConfig, sav_run

        _, noisy = _noisy(kind, looks)
        config = SavConfig(
            order=order,
            C=1e10,
            tau0=tau,
            tau_min=tau,
            tau_max=tau,
            max_iters=100,
            stop=StoppingRule.max_iters(),
        )
        result = sav_run(noisy, model_preset("mixed"), config, RunOptions(timings=False))

        values = result.log.column("modified_energy")
        slack = 1e-10 * abs(values[0])
        assert len(values) == 101
        assert all(after <= before + slack for before, after in zip(values, values[1:]))


@pytest.mark.slow
class TestAosStability:
    """Large AOS steps stay finite and bounded."""

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_long_runs(self, tau):
        """Test 200 steps stay finite and obey the per-step maximum bound."""
        from mixgeo.energy import model_preset
        from mixgeo.solvers.aos import AosConfig, aos_step, source_term
        from mixgeo.solvers.base import initial_state

        _, noisy = _noisy("shapes", 10)
        weights = model_preset("adaptive-minimal-surface")
        config = AosConfig(tau=tau)
        u, alpha = initial_state(noisy, weights)
        for _ in range(200):
            bound = np.abs(u.data + tau * source_term(u, noisy, weights).data).max()
            u = aos_step(u, noisy, weights, config, alpha)
            assert np.all(np.isfinite(u.data))
            assert u.data.max() <= max(bound, weights.floor) * (1 + 1e-12)
        assert u.data.max() < 1e6


def _best_run(name, config, clean, noisy):
    from mixgeo.energy import model_preset
    from mixgeo.solvers import get_solver
    from mixgeo.solvers.base import RunOptions

    return get_solver(name, config).run(
        noisy, model_preset("mixed"), RunOptions(truth=clean, timings=False)
    )


@pytest.mark.slow
class TestSolverAgreement:
    """All four solvers restore the same problem to comparable quality."""

    def test_cross_validation(self):
        """Test each solver gains >= 5 dB and all land within 2 dB of each other."""
        from mixgeo.metrics import psnr
        from mixgeo.solvers import AosConfig, ExplicitConfig, SavConfig, StoppingRule

        clean, noisy = _noisy("halo", 10)
        noisy_psnr = psnr(clean, noisy)
        budget = StoppingRule.max_iters()
        configs = {
            "aos": AosConfig(tau=2.0, max_iters=200, stop=budget),
            "sav1": SavConfig(order="first", C=1e10, max_iters=300, stop=budget),
            "sav2": SavConfig(order="second", C=1e10, max_iters=300, stop=budget),
            "explicit": ExplicitConfig(tau=0.05, max_iters=4000, stop=budget),
        }

        best = {}
        for name, config in configs.items():
            result = _best_run(name, config, clean, noisy)
            best[name] = result.log.best().psnr_db
            assert best[name] >= noisy_psnr + 5.0, name

        assert max(best.values()) - min(best.values()) <= 2.0
        assert best["sav1"] >= 30.0


@pytest.mark.slow
class TestIterationEfficiency:
    """The second-order scheme takes larger steps for the same quality."""

    def test_second_order_needs_fewer_iterations(self):
        """Test SAV2 at tau near 2 matches SAV1 at tau near 1 in at most half the steps."""
        from mixgeo.solvers import SavConfig, StoppingRule

        clean, noisy = _noisy("halo", 10)
        budget = StoppingRule.max_iters()
        first = _best_run(
            "sav1",
            SavConfig(order="first", C=1e10, tau0=1.0, tau_min=0.8, tau_max=1.0, max_iters=400, stop=budget),
            clean,
            noisy,
        )
        second = _best_run(
            "sav2",
            SavConfig(order="second", C=1e10, tau0=2.0, tau_min=1.8, tau_max=2.0, max_iters=400, stop=budget),
            clean,
            noisy,
        )

        first_best = first.log.best()
        second_best = second.log.best()
        assert second_best.psnr_db >= first_best.psnr_db - 0.1
        assert second_best.iter <= 0.5 * first_best.iter


@pytest.mark.slow
class TestStepSizeStudy:
    """AOS step-size sweep mirrors the reported work/quality trade-off."""

    def test_tau_sweep(self):
        """Test larger steps reach their best iterate sooner at nearly equal PSNR."""
        from mixgeo.solvers import AosConfig, StoppingRule

        clean, noisy = _noisy("halo", 10)
        rows = {}
        for tau in (1.0, 2.0, 5.0, 10.0):
            config = AosConfig(tau=tau, max_iters=300, stop=StoppingRule.max_iters())
            rows[tau] = _best_run("aos", config, clean, noisy).log.best()

        iterations = [rows[tau].iter for tau in (1.0, 2.0, 5.0, 10.0)]
        assert all(later < earlier for earlier, later in zip(iterations, iterations[1:]))
        assert abs(rows[1.0].psnr_db - rows[2.0].psnr_db) <= 0.5
