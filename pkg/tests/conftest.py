import numpy as np
import pytest

import twaveshape as tw
from twaveshape.synthgen import make_shape_curve


@pytest.fixture(scope="session")
def cosine_curve():
    """The default raised-cosine true reference shape."""
    return make_shape_curve(tw.SynthSpec())


@pytest.fixture(scope="session")
def centered_axis():
    """Centered-frame time axis matching a (100, 500) ms window at 250 Hz."""
    return np.arange(-200.0, 200.01, 4.0)
