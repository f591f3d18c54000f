import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from stereogt import geometry


def random_rotation(rng, scale: float = 1.0) -> np.ndarray:
    """Uniformly scaled random rotation matrix."""
    return Rotation.from_rotvec(rng.normal(0.0, scale, 3)).as_matrix()


def random_rig(rng, rot_scale: float = 0.5, t_scale: float = 50.0) -> geometry.RigTransform:
    return geometry.RigTransform(
        R=random_rotation(rng, rot_scale), t=rng.normal(0.0, t_scale, 3)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
