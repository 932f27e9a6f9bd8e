"""Dense-prediction encoder-decoder for density regression.

A compact U-shaped network: `depth` pooling stages with skip
connections and a 1x1 head that emits log10 density, one channel per
pixel. GroupNorm instead of BatchNorm keeps behavior identical between
tiny training batches and single-frame inference. Input dims must be
multiples of 2**depth; callers pad (see `pad_to_stride`).
"""

from __future__ import annotations

import torch
from torch import nn


def _block(c_in: int, c_out: int) -> nn.Sequential:
    groups = min(8, c_out)
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1),
        nn.GroupNorm(groups, c_out),
        nn.ReLU(inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1),
        nn.GroupNorm(groups, c_out),
        nn.ReLU(inplace=True),
    )


class DensityNet(nn.Module):
    def __init__(self, base_channels: int = 16, depth: int = 2):
        super().__init__()
        if base_channels < 1 or depth < 1:
            raise ValueError("base_channels and depth must be >= 1")
        self.base_channels = base_channels
        self.depth = depth

        chans = [base_channels * 2**d for d in range(depth + 1)]
        self.enc = nn.ModuleList(
            _block(1 if d == 0 else chans[d - 1], chans[d]) for d in range(depth)
        )
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = _block(chans[depth - 1], chans[depth])
        self.up = nn.ModuleList(
            nn.ConvTranspose2d(chans[d + 1], chans[d], 2, stride=2)
            for d in reversed(range(depth))
        )
        self.dec = nn.ModuleList(
            _block(2 * chans[d], chans[d]) for d in reversed(range(depth))
        )
        self.head = nn.Conv2d(base_channels, 1, 1)

    @property
    def stride(self) -> int:
        return 2**self.depth

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(N, 1, H, W) normalized envelope -> (N, 1, H, W) log10 density."""
        if x.shape[-2] % self.stride or x.shape[-1] % self.stride:
            raise ValueError(
                f"input dims {tuple(x.shape[-2:])} not a multiple of {self.stride}"
            )
        skips = []
        for enc in self.enc:
            x = enc(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for up, dec, skip in zip(self.up, self.dec, reversed(skips)):
            x = dec(torch.cat([up(x), skip], dim=1))
        return self.head(x)


def pad_to_stride(x: torch.Tensor, stride: int) -> tuple[torch.Tensor, tuple[int, int]]:
    """Edge-pad trailing dims up to a stride multiple; returns pad amounts."""
    pad_r = (-x.shape[-2]) % stride
    pad_c = (-x.shape[-1]) % stride
    if pad_r or pad_c:
        x = nn.functional.pad(x, (0, pad_c, 0, pad_r), mode="replicate")
    return x, (pad_r, pad_c)


def unpad(x: torch.Tensor, pads: tuple[int, int]) -> torch.Tensor:
    pad_r, pad_c = pads
    if pad_r:
        x = x[..., :-pad_r, :]
    if pad_c:
        x = x[..., :, :-pad_c]
    return x
