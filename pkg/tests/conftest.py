import warnings

import numpy as np
import pytest

from euler2d.fields import disc_patch
from euler2d.kernels import KernelSpec
from euler2d.solver import SimConfig, run

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(scope="session")
def rankine_small():
    """2500-particle unit vortex patch, shared across cheap tests."""
    return disc_patch(1.0, 1.0, 2500)


@pytest.fixture(scope="session")
def rankine_traj_small(rankine_small):
    cfg = SimConfig(KernelSpec.biot_savart_plane(), t_final=0.5, n_steps=8, substeps=2)
    return run(rankine_small, cfg)


@pytest.fixture(scope="session")
def rankine_big():
    """The 10^4-particle patch the acceptance criteria pin."""
    return disc_patch(1.0, 1.0, 10000)


@pytest.fixture(scope="session")
def rankine_traj_big(rankine_big):
    cfg = SimConfig(KernelSpec.biot_savart_plane(), t_final=1.0, n_steps=32, substeps=4)
    return run(rankine_big, cfg)


def speeds(vectors: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(vectors * vectors, axis=-1))
