import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "ci", deadline=None, max_examples=50, derandomize=True
)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_sample():
    """One 48x48 two-region image with annotations and ground truth."""
    from scribbleseg.synthetic import annotation_scribbles, two_region_image

    img, gt = two_region_image(np.random.default_rng(11), 48, 48)
    return img, gt, annotation_scribbles(gt)


@pytest.fixture(scope="session")
def fast_params():
    """Cheap segmenter settings for small test images."""
    from scribbleseg.features import AffinityConfig
    from scribbleseg.segmenter import SegmenterParams

    return SegmenterParams(
        m=40,
        affinity=AffinityConfig(k1=8, k2=8, scales=(0.5, 2.0)),
        bins=30,
    )
