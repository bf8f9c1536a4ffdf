"""fusiscan: banana leaf disease diagnosis.

A self-contained stack: float32 tensor core with a portable seeded RNG,
layer kernels with an im2col convolution fast path, residual and inception
model builders, a deterministic augmentation and 80/15/5 split pipeline,
frozen-backbone transfer training, a CRC-checked binary model format, and an
offline HTTP inference service with a 70% confidence gate.
"""

from .tensor import Rng, ShapeError, Tensor, argmax, matmul, tensor_from, tensor_new
from .imageio import ClassLabel, LabeledImage
from .graph import ModelSpec, count_parameters, estimate_memory_bytes, forward
from .architectures import build_inception_v3, build_resnet152, build_tiny
from .modelfile import Diagnosis, classify, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "Rng",
    "ShapeError",
    "Tensor",
    "argmax",
    "matmul",
    "tensor_from",
    "tensor_new",
    "ClassLabel",
    "LabeledImage",
    "ModelSpec",
    "count_parameters",
    "estimate_memory_bytes",
    "forward",
    "build_inception_v3",
    "build_resnet152",
    "build_tiny",
    "Diagnosis",
    "classify",
    "load_model",
    "save_model",
    "__version__",
]
