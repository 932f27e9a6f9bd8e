import numpy as np
import pytest

from qushk import (
    EnvelopeFrame,
    PhantomSpec,
    PSFSpec,
    Region,
    estimate_xu,
    hk_sample,
    HKParams,
    simulate_frame,
)


@pytest.fixture(scope="session", autouse=True)
def _warm_solver():
    """Build the XU table and compile the hot path once, up front.

    Keeps the first test that touches the estimator from paying the
    table-build plus JIT cost inside its own timing.
    """
    estimate_xu(hk_sample(HKParams(0.0, 0.1, 5.0), 4096, 0))


@pytest.fixture
def uniform_frame():
    """Factory for a single-region speckle frame and its density truth."""

    def make(density=6.0, sigma=3.0, canvas=(512, 256), skip=(0, 0), seed=0,
             fc_norm=0.25):
        psf = PSFSpec(sigma_a=sigma, sigma_l=sigma, fc_norm=fc_norm)
        phantom = PhantomSpec(canvas=canvas,
                              regions=(Region("full", density, 2.0),))
        return simulate_frame(phantom, psf, skip=skip, seed=seed)

    return make


@pytest.fixture
def plain_frame():
    """Factory wrapping a raw array as an EnvelopeFrame."""

    def make(data, spacing=(1.0, 1.0)):
        return EnvelopeFrame(np.asarray(data, dtype=np.float64),
                             spacing=spacing)

    return make
