"""
Unit tests for the guided UNet.
"""
import numpy as np
import pytest
import torch

from src.config.experiment_config import DenoiserConfig
from src.domain.entities.checkpoint import DenoiserCheckpoint
from src.domain.entities.guidance import GuidanceBatch
from src.domain.exceptions import GuidanceMismatchError
from src.infrastructure.networks import build_denoiser, load_denoiser
from src.infrastructure.networks.unet import norm_groups, sinusoidal_embedding


def small_config(**overrides):
    values = dict(image_size=8, base_channels=8, channel_multipliers=[1, 2], attention_resolutions=[2],
                  num_heads=2, sinusoid_dim=16, time_embedding_dim=16, cond_embedding_dim=16)
    values.update(overrides)
    return DenoiserConfig(**values)


def labels(count, label_dim, index=None):
    label = torch.zeros(count, label_dim)
    label[:, label_dim - 1 if index is None else index] = 1.0
    return label


class TestEmbeddings:
    """Test timestep embedding and helpers"""

    def test_sinusoid_at_zero(self):
        """Test t = 0 gives alternating sin 0 = 0, cos 0 = 1"""
        emb = sinusoidal_embedding(torch.tensor([0]), 8)

        assert emb.tolist() == [[0.0, 1.0] * 4]

    def test_sinusoid_first_frequency(self):
        """Test the first pair is (sin t, cos t)"""
        emb = sinusoidal_embedding(torch.tensor([3]), 4)

        assert emb[0, 0].item() == pytest.approx(np.sin(3.0))
        assert emb[0, 1].item() == pytest.approx(np.cos(3.0))

    @pytest.mark.parametrize("channels,groups", [(8, 8), (48, 24), (64, 32), (7, 7), (3, 3)])
    def test_norm_groups(self, channels, groups):
        assert norm_groups(channels) == groups


class TestGuidedUNet:
    """Test GuidedUNet forward pass"""

    @pytest.mark.parametrize("in_channels,label_dim", [(3, 1), (3, 5), (4, 4), (6, 4)])
    def test_output_shape(self, in_channels, label_dim):
        """Test noise prediction matches the image shape for every guidance variant"""
        model = build_denoiser(small_config(in_channels=in_channels, label_dim=label_dim), seed=0)
        mask = torch.ones(2, in_channels - 3, 8, 8) if in_channels > 3 else None

        out = model(torch.randn(2, 3, 8, 8), torch.tensor([0, 19]), GuidanceBatch(labels(2, label_dim), mask))

        assert out.shape == (2, 3, 8, 8)
        assert torch.isfinite(out).all()

    def test_scalar_timestep(self):
        """Test an int timestep is broadcast over the batch"""
        model = build_denoiser(small_config(), seed=0).eval()
        x = torch.randn(3, 3, 8, 8)
        guidance = GuidanceBatch(labels(3, 1))

        torch.testing.assert_close(model(x, 5, guidance), model(x, torch.full((3,), 5), guidance))

    def test_seeded_build_reproducible(self):
        """Test seeded initialisation is repeatable and leaves the global stream alone"""
        torch.manual_seed(11)
        expected = torch.rand(1)
        torch.manual_seed(11)

        a = build_denoiser(small_config(), seed=4)
        b = build_denoiser(small_config(), seed=4)

        assert torch.rand(1) == expected
        for (name, pa), (_, pb) in zip(a.state_dict().items(), b.state_dict().items()):
            assert torch.equal(pa, pb), name

    def test_guidance_changes_prediction(self):
        """Test different labels give different noise predictions"""
        model = build_denoiser(small_config(label_dim=3), seed=0).eval()
        x = torch.randn(1, 3, 8, 8)

        a = model(x, 3, GuidanceBatch(labels(1, 3, 0)))
        b = model(x, 3, GuidanceBatch(labels(1, 3, 1)))

        assert not torch.allclose(a, b)

    def test_null_slot_has_its_own_weights(self):
        """Test the null condition and a cluster condition train disjoint guidance-embedding columns"""
        model = build_denoiser(small_config(label_dim=4), seed=0).eval()
        x = torch.randn(2, 3, 8, 8, generator=torch.Generator().manual_seed(0))
        columns = {}

        for name, index in (("null", None), ("cluster", 0)):
            model.zero_grad()
            (model(x, torch.tensor([3, 9]), GuidanceBatch(labels(2, 4, index))) ** 2).mean().backward()
            grad = model.guidance_mlp[0].weight.grad
            columns[name] = torch.nonzero(grad.abs().sum(dim=0)).flatten().tolist()

        assert columns == {"null": [3], "cluster": [0]}
        null_embedding = model.embed_guidance(labels(1, 4))
        assert not torch.allclose(null_embedding, model.embed_guidance(labels(1, 4, 0)))
        assert not torch.allclose(null_embedding, model.embed_guidance(torch.zeros(1, 4)))

    def test_segmentation_channel_permutation(self):
        """Test permuting mask channels and multi-hot slots together is absorbed by permuting the weights"""
        K = 3
        model = build_denoiser(small_config(in_channels=3 + K, label_dim=K + 1), seed=0).eval()
        generator = torch.Generator().manual_seed(1)
        x = torch.randn(2, 3, 8, 8, generator=generator)
        mask = (torch.rand(2, K, 8, 8, generator=generator) > 0.5).float()
        label = torch.tensor([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]])
        order = [2, 0, 1]

        permuted = build_denoiser(small_config(in_channels=3 + K, label_dim=K + 1), seed=0).eval()
        with torch.no_grad():
            permuted.input_conv.weight.copy_(model.input_conv.weight[:, [0, 1, 2] + [3 + c for c in order]])
            permuted.guidance_mlp[0].weight.copy_(model.guidance_mlp[0].weight[:, order + [K]])

        t = torch.tensor([4, 15])
        expected = model(x, t, GuidanceBatch(label, mask))
        out = permuted(x, t, GuidanceBatch(label[:, order + [K]], mask[:, order]))

        assert out.shape == (2, 3, 8, 8)
        torch.testing.assert_close(out, expected, rtol=1e-5, atol=1e-5)

    def test_missing_mask(self):
        model = build_denoiser(small_config(in_channels=4), seed=0)

        with pytest.raises(GuidanceMismatchError, match="1-channel"):
            model(torch.randn(1, 3, 8, 8), 0, GuidanceBatch(labels(1, 1)))

    def test_unexpected_mask(self):
        model = build_denoiser(small_config(), seed=0)

        with pytest.raises(GuidanceMismatchError):
            model(torch.randn(1, 3, 8, 8), 0, GuidanceBatch(labels(1, 1), torch.ones(1, 1, 8, 8)))

    def test_mask_channel_count(self):
        model = build_denoiser(small_config(in_channels=5), seed=0)

        with pytest.raises(GuidanceMismatchError, match="channels"):
            model(torch.randn(1, 3, 8, 8), 0, GuidanceBatch(labels(1, 1), torch.ones(1, 1, 8, 8)))

    def test_label_dim_mismatch(self):
        model = build_denoiser(small_config(label_dim=4), seed=0)

        with pytest.raises(ValueError, match="label dim"):
            model(torch.randn(1, 3, 8, 8), 0, GuidanceBatch(labels(1, 2)))

    def test_parameter_gradients_match_finite_differences(self):
        """Test autograd against central differences on a few coordinates of every parameter"""
        model = build_denoiser(small_config(label_dim=3), seed=0).double().eval()
        generator = torch.Generator().manual_seed(0)
        x = torch.randn(2, 3, 8, 8, generator=generator, dtype=torch.float64)
        guidance = GuidanceBatch(labels(2, 3, 1).double())
        t = torch.tensor([2, 7])

        def loss():
            return (model(x, t, guidance) ** 2).mean()

        model.zero_grad()
        loss().backward()
        h = 1e-6
        for name, param in model.named_parameters():
            flat = param.data.view(-1)
            for index in range(min(3, flat.numel())):
                original = flat[index].item()
                flat[index] = original + h
                upper = loss().item()
                flat[index] = original - h
                lower = loss().item()
                flat[index] = original
                numeric = (upper - lower) / (2 * h)
                analytic = param.grad.view(-1)[index].item()
                assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-7), name


class TestLoadDenoiser:
    """Test load_denoiser"""

    def test_ema_and_raw(self):
        """Test the EMA shadow is loaded by default and raw params on request"""
        config = small_config()
        model = build_denoiser(config, seed=0)
        params = {k: v.clone() for k, v in model.state_dict().items()}
        ema = {k: torch.zeros_like(v) if v.is_floating_point() else v.clone() for k, v in params.items()}
        checkpoint = DenoiserCheckpoint(config=config.model_dump(), params=params, ema_params=ema)

        ema_model = load_denoiser(checkpoint)
        raw_model = load_denoiser(checkpoint, use_ema=False)

        assert not ema_model.training
        assert float(ema_model.input_conv.weight.abs().sum()) == 0.0
        torch.testing.assert_close(raw_model.input_conv.weight, params["input_conv.weight"])
