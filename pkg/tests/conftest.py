import numpy as np
import pytest

from app.core.image import Image, Mask
from app.synth.demo import write_demo_assets

DEMO_SIZE = (48, 64)


class RecordingRestorer:
    """Remembers every input it is handed, then defers to `inner` (or echoes)."""

    name = "recording"

    def __init__(self, inner=None):
        self.inner = inner
        self.calls: list[tuple[Image, Mask]] = []

    def restore(self, image: Image, mask: Mask) -> Image:
        self.calls.append((image, mask))
        if self.inner is None:
            return image
        return self.inner.restore(image, mask)


class InvertingRestorer:
    """Writes 1 - x everywhere, unmasked pixels included."""

    name = "inverting"

    def restore(self, image: Image, mask: Mask) -> Image:
        return Image(1.0 - image.pixels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng):
    def make(height=24, width=32):
        return Image(rng.random((height, width, 3)))

    return make


@pytest.fixture
def random_mask(rng):
    def make(height=24, width=32, fraction=0.2):
        return Mask(rng.random((height, width)) < fraction)

    return make


@pytest.fixture
def recording_restorer():
    return RecordingRestorer


@pytest.fixture
def inverting_restorer():
    return InvertingRestorer()


@pytest.fixture
def demo_assets(tmp_path):
    """(backgrounds_dir, persons_dir) holding 3 procedural backgrounds and 2 persons."""
    return write_demo_assets(tmp_path / "assets", n_backgrounds=3, n_persons=2, size=DEMO_SIZE, seed=7)
