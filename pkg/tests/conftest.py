import numpy as np
import pytest

from fusiscan.architectures import build_inception_v3, build_resnet152, build_tiny
from fusiscan.imageio import ClassLabel, LabeledImage, write_ppm
from fusiscan.tensor import Rng


def synthetic_color_images(n_per_class=20, size=32, seed=11, noise=30.0):
    """Class-colored noise images: class k is bright in channel k.

    Linearly separable by channel means, which a frozen random backbone
    preserves well enough for a dense head to fit exactly.
    """
    rng = Rng(seed)
    images = []
    for code, label in enumerate(ClassLabel):
        for i in range(n_per_class):
            px = np.full((size, size, 3), 60.0, dtype=np.float32)
            px[:, :, code] += 140.0
            px += rng.normal_array((size, size, 3), 0.0, noise)
            images.append(
                LabeledImage(
                    np.clip(px, 0, 255).astype(np.uint8),
                    label,
                    source_path=f"synthetic/{label.dir_name}/img{i:03d}.ppm",
                )
            )
    return images


def write_class_tree(root, n_per_class=2, size=8, seed=3):
    """Materialize a canonical three-directory dataset of small PPM files."""
    images = synthetic_color_images(n_per_class, size=size, seed=seed)
    for img in images:
        path = root / img.label.dir_name / f"img{img.source_path[-7:-4]}.ppm"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(write_ppm(img.pixels))
    return root


@pytest.fixture(scope="session")
def tiny_residual():
    return build_tiny("tiny-residual", 3, 32, seed=3)


@pytest.fixture(scope="session")
def tiny_inception():
    return build_tiny("tiny-inception", 3, 32, seed=4)


@pytest.fixture(scope="session")
def resnet152_full():
    return build_resnet152(3, 224, seed=1)


@pytest.fixture(scope="session")
def inception_v3_full():
    return build_inception_v3(3, 299, seed=2)


@pytest.fixture(scope="session")
def color_images():
    return synthetic_color_images()
