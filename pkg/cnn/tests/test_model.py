"""Network shape contract, padding helpers, and small-batch behavior."""

import numpy as np
import pytest
import torch

from cnn_patchless import DensityNet, pad_to_stride, unpad


class TestForwardShape:
    @pytest.mark.parametrize("dims", [(24, 16), (8, 8), (32, 64)])
    def test_dense_prediction_keeps_dims(self, dims):
        net = DensityNet(base_channels=4, depth=2)
        out = net(torch.randn(1, 1, *dims))
        assert out.shape == (1, 1, *dims)

    def test_stride_follows_depth(self):
        assert DensityNet(4, depth=1).stride == 2
        assert DensityNet(4, depth=3).stride == 8

    def test_misaligned_dims_rejected(self):
        net = DensityNet(base_channels=4, depth=2)
        with pytest.raises(ValueError, match="multiple"):
            net(torch.randn(1, 1, 10, 16))

    def test_bad_construction(self):
        with pytest.raises(ValueError):
            DensityNet(base_channels=0)
        with pytest.raises(ValueError):
            DensityNet(depth=0)

    def test_seeded_init_is_reproducible(self):
        torch.manual_seed(5)
        a = DensityNet(4, 1).state_dict()
        torch.manual_seed(5)
        b = DensityNet(4, 1).state_dict()
        for key in a:
            assert torch.equal(a[key], b[key])

    def test_no_cross_sample_coupling(self):
        """GroupNorm keeps each sample independent of its batch mates."""
        torch.manual_seed(0)
        net = DensityNet(base_channels=4, depth=2).eval()
        x = torch.randn(2, 1, 16, 16)
        with torch.no_grad():
            batched = net(x)
            singles = torch.cat([net(x[:1]), net(x[1:])])
        torch.testing.assert_close(batched, singles, rtol=1e-5, atol=1e-6)


class TestPadding:
    def test_aligned_input_untouched(self):
        x = torch.randn(1, 1, 8, 12)
        padded, pads = pad_to_stride(x, 4)
        assert pads == (0, 0)
        assert padded is x

    def test_pad_then_unpad_restores(self):
        x = torch.randn(1, 1, 25, 17)
        padded, pads = pad_to_stride(x, 8)
        assert padded.shape[-2] % 8 == 0 and padded.shape[-1] % 8 == 0
        torch.testing.assert_close(unpad(padded, pads), x)

    def test_pad_replicates_edges(self):
        x = torch.arange(6.0).reshape(1, 1, 2, 3)
        padded, _ = pad_to_stride(x, 4)
        np.testing.assert_array_equal(padded[0, 0, :, -1], [2.0, 5.0, 5.0, 5.0])
