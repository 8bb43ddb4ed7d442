"""
Unit tests for DiffusionService.
Schedule construction, forward noising, the training objective, guidance mixing
and the DDIM sampler, checked against closed forms.
"""
import math

import numpy as np
import pytest
import torch

from src.domain.entities.guidance import GuidanceSignal, GuidanceVariant, one_hot
from src.domain.entities.noise_schedule import NoiseSchedule
from src.domain.services import DiffusionService


def schedule_from_alpha_bars(alpha_bars):
    """Schedule with prescribed cumulative products (betas kept consistent with alphas)"""
    alpha_bars = np.asarray(alpha_bars, dtype=np.float64)
    alphas = alpha_bars / np.concatenate([[1.0], alpha_bars[:-1]])
    betas = 1.0 - alphas
    return NoiseSchedule(betas=betas, alphas=1.0 - betas, alpha_bars=alpha_bars)


def label_batch(count=1):
    return GuidanceSignal.collate([GuidanceSignal(GuidanceVariant.LABEL, one_hot(0, 2))] * count)


class TestNoiseSchedule:
    """Test make_linear_schedule"""

    def test_two_steps(self):
        """Test betas and cumulative products for T=2"""
        schedule = DiffusionService.make_linear_schedule(2, 0.1, 0.2)

        np.testing.assert_allclose(schedule.betas, [0.1, 0.2])
        np.testing.assert_allclose(schedule.alpha_bars, [0.9, 0.72])
        assert np.array_equal(schedule.alphas, 1.0 - schedule.betas)

    def test_single_step(self):
        """Test T=1 schedule"""
        schedule = DiffusionService.make_linear_schedule(1, 0.5, 0.5)

        np.testing.assert_allclose(schedule.betas, [0.5])
        np.testing.assert_allclose(schedule.alpha_bars, [0.5])

    def test_long_schedule_matches_log_space_sum(self):
        """Test the last cumulative product against a log-space summation"""
        schedule = DiffusionService.make_linear_schedule(1000, 1e-4, 0.02)

        betas = np.linspace(1e-4, 0.02, 1000)
        expected = math.exp(math.fsum(math.log1p(-b) for b in betas))
        assert schedule.alpha_bars[999] == pytest.approx(expected, rel=1e-10)

    def test_alpha_bars_strictly_decreasing(self):
        """Test monotonicity of the default schedule"""
        schedule = DiffusionService.make_linear_schedule(1000, 1e-4, 0.02)

        assert np.all(np.diff(schedule.alpha_bars) < 0)
        assert np.all((schedule.alpha_bars > 0) & (schedule.alpha_bars < 1))

    def test_boundary_alpha_bar(self):
        """Test the clean-image boundary convention"""
        schedule = DiffusionService.make_linear_schedule(10, 1e-4, 0.02)

        assert schedule.alpha_bar(-1) == 1.0
        with pytest.raises(ValueError):
            schedule.alpha_bar(10)

    @pytest.mark.parametrize("T,start,end", [(0, 0.1, 0.2), (10, 0.0, 0.2), (10, 0.3, 0.2), (10, 0.1, 1.0)])
    def test_invalid_arguments(self, T, start, end):
        """Test rejection of bad schedule parameters"""
        with pytest.raises(ValueError):
            DiffusionService.make_linear_schedule(T, start, end)


class TestForwardSample:
    """Test forward_sample"""

    def test_zero_noise_scales_image(self):
        """Test eps = 0 at alpha_bar 0.25 halves the image"""
        schedule = schedule_from_alpha_bars([0.25])
        x0 = torch.tensor([[0.4, -0.8]], dtype=torch.float64)

        out = DiffusionService.forward_sample(x0, 0, torch.zeros_like(x0), schedule)

        torch.testing.assert_close(out, 0.5 * x0)

    def test_scalar_arithmetic(self):
        """Test x0 = eps = 1 at alpha_bar 0.81"""
        schedule = schedule_from_alpha_bars([0.81])
        one = torch.ones(1, dtype=torch.float64)

        out = DiffusionService.forward_sample(one, 0, one, schedule)

        assert float(out) == pytest.approx(0.9 + math.sqrt(0.19), abs=1e-9)
        assert float(out) == pytest.approx(1.33589, abs=1e-5)

    def test_per_element_timesteps(self):
        """Test one timestep per batch element"""
        schedule = DiffusionService.make_linear_schedule(10, 0.1, 0.2)
        x0 = torch.ones(2, 1, dtype=torch.float64)
        eps = torch.zeros_like(x0)

        out = DiffusionService.forward_sample(x0, torch.tensor([0, 9]), eps, schedule)

        expected = np.sqrt(schedule.alpha_bars[[0, 9]])
        np.testing.assert_allclose(out.numpy().ravel(), expected)

    @pytest.mark.parametrize("t", [0, 7, 19])
    def test_marginal_of_chained_steps(self, small_schedule, t):
        """Test 10^4 chains of one-step transitions reach the closed-form marginal at step t"""
        rng = np.random.default_rng(t)
        x0 = np.array([0.9, -0.5, 0.0])
        draws = 10_000
        x = np.tile(x0, (draws, 1))
        for s in range(t + 1):
            x = np.sqrt(small_schedule.alphas[s]) * x + np.sqrt(small_schedule.betas[s]) * rng.standard_normal(x.shape)

        alpha_bar = small_schedule.alpha_bars[t]
        np.testing.assert_allclose(x.mean(axis=0), np.sqrt(alpha_bar) * x0, atol=4 * np.sqrt((1 - alpha_bar) / draws))
        np.testing.assert_allclose(x.var(axis=0), np.full(3, 1 - alpha_bar), rtol=0.06)

        eps = torch.from_numpy(rng.standard_normal((draws, 3)))
        direct = DiffusionService.forward_sample(torch.from_numpy(np.tile(x0, (draws, 1))), t, eps, small_schedule)
        np.testing.assert_allclose(direct.numpy().mean(axis=0), x.mean(axis=0), atol=8 * np.sqrt((1 - alpha_bar) / draws))
        np.testing.assert_allclose(direct.numpy().var(axis=0), x.var(axis=0), rtol=0.1)

    def test_shape_mismatch(self):
        """Test eps must match x0"""
        schedule = DiffusionService.make_linear_schedule(10, 0.1, 0.2)

        with pytest.raises(ValueError, match="does not match"):
            DiffusionService.forward_sample(torch.zeros(2, 3), 1, torch.zeros(2, 4), schedule)

    def test_timestep_out_of_range(self):
        """Test t outside [0, T)"""
        schedule = DiffusionService.make_linear_schedule(10, 0.1, 0.2)

        with pytest.raises(ValueError):
            DiffusionService.forward_sample(torch.zeros(1), 10, torch.zeros(1), schedule)


class TestTrainingLoss:
    """Test training_loss"""

    def test_perfect_prediction(self, small_schedule, null_batch):
        """Test a denoiser returning the true noise has zero loss"""
        x0 = torch.randn(4, 3, 2, 2, dtype=torch.float64)
        eps = torch.randn_like(x0)
        t = torch.tensor([0, 5, 10, 19])

        loss = DiffusionService.training_loss(lambda x, tt, g: eps, x0, null_batch(4), small_schedule, t=t, eps=eps)

        assert float(loss) == 0.0

    def test_constant_offset(self, small_schedule, null_batch):
        """Test eps + c gives loss c squared"""
        x0 = torch.randn(4, 3, 2, 2, dtype=torch.float64)
        eps = torch.randn_like(x0)
        c = 0.3

        loss = DiffusionService.training_loss(
            lambda x, tt, g: eps + c, x0, null_batch(4), small_schedule, t=torch.full((4,), 7), eps=eps)

        assert float(loss) == pytest.approx(c ** 2, abs=1e-12)

    def test_zero_prediction_expected_unit_loss(self, small_schedule, null_batch):
        """Test the all-zeros denoiser scores about 1 over many draws"""
        x0 = torch.zeros(10_000, 1, 1, 1, dtype=torch.float64)
        generator = torch.Generator().manual_seed(0)

        loss = DiffusionService.training_loss(
            lambda x, tt, g: torch.zeros_like(x), x0, null_batch(10_000), small_schedule, generator=generator)

        assert float(loss) == pytest.approx(1.0, abs=0.05)

    def test_output_shape_checked(self, small_schedule, null_batch):
        """Test a denoiser of the wrong output shape is rejected"""
        x0 = torch.zeros(2, 3, 2, 2)

        with pytest.raises(ValueError, match="denoiser output"):
            DiffusionService.training_loss(lambda x, tt, g: x[:, :1], x0, null_batch(2), small_schedule)


class TestGuidedEpsilon:
    """Test guided_epsilon mixing"""

    @staticmethod
    def two_branch(x, t, guidance):
        """0.3 for conditional rows, 0.1 for null rows"""
        is_null = guidance.label[:, -1].bool().reshape(-1, 1).to(x.device)
        return torch.where(is_null, torch.full_like(x, 0.1), torch.full_like(x, 0.3))

    def test_w_zero_is_unconditional(self):
        """Test w=0 equals the null prediction bitwise"""
        x = torch.zeros(1, 1, dtype=torch.float64)

        out = DiffusionService.guided_epsilon(self.two_branch, x, 3, label_batch(), 0.0)

        assert torch.equal(out, torch.full_like(x, 0.1))

    def test_w_one_is_conditional(self):
        """Test w=1 equals the conditional prediction bitwise"""
        x = torch.zeros(1, 1, dtype=torch.float64)

        out = DiffusionService.guided_epsilon(self.two_branch, x, 3, label_batch(), 1.0)

        assert torch.equal(out, torch.full_like(x, 0.3))

    def test_extrapolation(self):
        """Test (1 - 2) * 0.1 + 2 * 0.3 = 0.5"""
        x = torch.zeros(1, 1, dtype=torch.float64)

        out = DiffusionService.guided_epsilon(self.two_branch, x, 3, label_batch(), 2.0)

        assert float(out) == pytest.approx(0.5, abs=1e-12)

    def test_batched_matches_separate_calls(self):
        """Test the 2B batched call agrees with two separate calls"""
        x = torch.randn(3, 1, dtype=torch.float64)
        guidance = label_batch(3)

        batched = DiffusionService.guided_epsilon(self.two_branch, x, 3, guidance, 1.7, batched=True)
        separate = DiffusionService.guided_epsilon(self.two_branch, x, 3, guidance, 1.7, batched=False)

        torch.testing.assert_close(batched, separate)

    def test_single_network_call(self, mocker):
        """Test conditional and null inputs share one call of batch size 2B"""
        denoiser = mocker.Mock(side_effect=lambda x, t, g: torch.zeros_like(x))
        x = torch.zeros(4, 1)

        DiffusionService.guided_epsilon(denoiser, x, 3, label_batch(4), 1.5)

        assert denoiser.call_count == 1
        assert denoiser.call_args.args[0].shape[0] == 8


class TestDdimStep:
    """Test ddim_sigma and ddim_step"""

    def test_inversion_recovers_x0(self):
        """Test a perfect noise estimate lands on x0 at the clean boundary"""
        schedule = DiffusionService.make_linear_schedule(50, 1e-4, 0.02)
        x0 = torch.rand(2, 3, 4, 4, dtype=torch.float64) * 2 - 1
        eps = torch.randn_like(x0)
        x_t = DiffusionService.forward_sample(x0, 30, eps, schedule)

        out = DiffusionService.ddim_step(x_t, eps, 30, -1, 0.0, schedule)

        torch.testing.assert_close(out, x0, atol=1e-6, rtol=0)

    def test_deterministic(self):
        """Test sigma = 0 twice gives identical outputs"""
        schedule = DiffusionService.make_linear_schedule(10, 1e-4, 0.02)
        x_t = torch.randn(1, 3, 2, 2)
        eps = torch.randn_like(x_t)

        a = DiffusionService.ddim_step(x_t, eps, 5, 2, 0.0, schedule)
        b = DiffusionService.ddim_step(x_t, eps, 5, 2, 0.0, schedule)

        assert torch.equal(a, b)

    def test_scalar_arithmetic(self):
        """Test the hand-computed transition from alpha_bar 0.64 to 0.81"""
        schedule = schedule_from_alpha_bars([0.81, 0.64])

        out = DiffusionService.ddim_step(
            torch.tensor([1.0], dtype=torch.float64), torch.tensor([0.5], dtype=torch.float64), 1, 0, 0.0, schedule)

        expected = 0.9 * 0.875 + math.sqrt(0.19) * 0.5
        assert float(out) == pytest.approx(expected, abs=1e-12)
        assert float(out) == pytest.approx(1.00544, abs=1e-5)

    def test_rejects_non_decreasing_time(self):
        """Test t_prev must precede t"""
        schedule = DiffusionService.make_linear_schedule(10, 1e-4, 0.02)

        with pytest.raises(ValueError, match="t_prev"):
            DiffusionService.ddim_step(torch.zeros(1), torch.zeros(1), 3, 3, 0.0, schedule)

    def test_rejects_oversized_sigma(self):
        """Test sigma^2 above 1 - alpha_bar_prev"""
        schedule = DiffusionService.make_linear_schedule(10, 1e-4, 0.02)

        with pytest.raises(ValueError, match="exceeds"):
            DiffusionService.ddim_step(torch.zeros(1), torch.zeros(1), 5, 2, 1.0, schedule, torch.zeros(1))

    def test_positive_sigma_needs_noise(self):
        """Test stochastic steps require a noise tensor"""
        schedule = DiffusionService.make_linear_schedule(10, 1e-4, 0.02)

        with pytest.raises(ValueError, match="noise"):
            DiffusionService.ddim_step(torch.zeros(1), torch.zeros(1), 5, 2, 1e-3, schedule)

    def test_sigma_modes(self):
        """Test eta = 0 and the DDPM-equivalent variance"""
        ab_t, ab_prev = 0.5, 0.8

        assert DiffusionService.ddim_sigma(ab_t, ab_prev, 0.0) == 0.0
        expected = math.sqrt((1 - ab_prev) / (1 - ab_t) * (1 - ab_t / ab_prev))
        assert DiffusionService.ddim_sigma(ab_t, ab_prev, 1.0) == pytest.approx(expected)


class TestTimestepSubsequence:
    """Test timestep_subsequence"""

    def test_full_sequence(self):
        """Test num_steps = T visits every timestep once"""
        np.testing.assert_array_equal(DiffusionService.timestep_subsequence(10, 10), np.arange(10))

    def test_single_step(self):
        """Test num_steps = 1 keeps only the last timestep"""
        np.testing.assert_array_equal(DiffusionService.timestep_subsequence(10, 1), [9])

    @pytest.mark.parametrize("T,steps", [(1000, 250), (1000, 50), (20, 4), (7, 2)])
    def test_endpoints_and_order(self, T, steps):
        """Test strict increase from 0 to T - 1"""
        seq = DiffusionService.timestep_subsequence(T, steps)

        assert len(seq) == steps
        assert seq[0] == 0 and seq[-1] == T - 1
        assert np.all(np.diff(seq) > 0)

    @pytest.mark.parametrize("steps", [0, 11])
    def test_out_of_range(self, steps):
        """Test num_steps outside [1, T]"""
        with pytest.raises(ValueError):
            DiffusionService.timestep_subsequence(10, steps)


class TestDdimSample:
    """Test ddim_sample"""

    def test_identical_seeds_bitwise_identical(self, small_schedule, null_batch):
        """Test the deterministic chain reproduces exactly"""
        def denoiser(x, t, g):
            return 0.1 * x + 0.01 * t.to(x.dtype).reshape(-1, 1, 1, 1)

        runs = [
            DiffusionService.ddim_sample(
                denoiser, null_batch(3), 5, "zero", 1.0, small_schedule, (3, 4, 4),
                generator=torch.Generator().manual_seed(11))
            for _ in range(2)
        ]

        assert torch.equal(runs[0], runs[1])

    def test_visits_every_timestep_descending(self, null_batch):
        """Test num_steps = T evaluates each timestep once in descending order"""
        schedule = DiffusionService.make_linear_schedule(12, 1e-4, 0.02)
        seen = []

        def denoiser(x, t, g):
            seen.append(int(t[0]))
            return torch.zeros_like(x)

        DiffusionService.ddim_sample(denoiser, null_batch(1), 12, "zero", 1.0, schedule, (3, 2, 2),
                                     generator=torch.Generator().manual_seed(0))

        assert seen == list(range(11, -1, -1))

    def test_oracle_denoiser_reaches_target(self, null_batch):
        """Test a denoiser predicting the exact noise for a fixed x0 returns x0 from any start"""
        schedule = DiffusionService.make_linear_schedule(100, 1e-4, 0.02)
        target = torch.rand(1, 3, 4, 4, dtype=torch.float64) * 1.6 - 0.8
        alpha_bars = torch.as_tensor(schedule.alpha_bars, dtype=torch.float64)

        def oracle(x, t, g):
            ab = alpha_bars[t].reshape(-1, 1, 1, 1)
            return (x - ab.sqrt() * target) / (1 - ab).sqrt()

        for seed in (0, 1):
            x_T = torch.randn((2, 3, 4, 4), generator=torch.Generator().manual_seed(seed), dtype=torch.float64)
            out = DiffusionService.ddim_sample(oracle, null_batch(2), 10, "zero", 1.0, schedule, (3, 4, 4), x_T=x_T)
            torch.testing.assert_close(out, target.expand(2, -1, -1, -1), atol=1e-6, rtol=0)

    def test_output_clipped(self, small_schedule, null_batch):
        """Test final samples lie in [-1, 1]"""
        out = DiffusionService.ddim_sample(
            lambda x, t, g: -5.0 * torch.ones_like(x), null_batch(2), 4, "zero", 1.0, small_schedule, (3, 2, 2),
            generator=torch.Generator().manual_seed(0))

        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_intermediates(self, small_schedule, null_batch):
        """Test the trajectory holds one state per step"""
        out, trajectory = DiffusionService.ddim_sample(
            lambda x, t, g: torch.zeros_like(x), null_batch(1), 4, "ddpm-equivalent", 1.0, small_schedule,
            (3, 2, 2), generator=torch.Generator().manual_seed(0), return_intermediates=True)

        assert len(trajectory) == 4
        assert trajectory[-1].shape == out.shape

    def test_unknown_sigma_mode(self, small_schedule, null_batch):
        """Test sigma_mode validation"""
        with pytest.raises(ValueError, match="sigma_mode"):
            DiffusionService.ddim_sample(lambda x, t, g: x, null_batch(1), 4, "random", 1.0, small_schedule, (3, 2, 2))
