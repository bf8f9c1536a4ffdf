"""Model builders: ResNet-152, Inception-v3 and reduced desk-scale presets.

Both full networks follow their canonical configurations (bottleneck schedule
(3, 8, 36, 3) for the residual net; stem + 3xA / reduction / 4x factorized-7
/ reduction / 2x expanded blocks for the inception net, auxiliary head
omitted).  Every convolution is conv -> batchnorm -> relu without bias.
Weights are He-normal initialized from a seeded RNG; pre-trained backbones
can be loaded from a saved model file instead.
"""

from __future__ import annotations

from .graph import GraphBuilder, ModelSpec
from .imageio import ClassLabel
from .tensor import Rng, ShapeError

DEFAULT_LABELS = [label.dir_name for label in ClassLabel]

TINY_PRESETS = ("tiny-residual", "tiny-inception")
ARCH_NAMES = ("resnet152", "inceptionv3") + TINY_PRESETS


def _class_labels(num_classes: int) -> list[str]:
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if num_classes == len(DEFAULT_LABELS):
        return list(DEFAULT_LABELS)
    return [f"class_{i}" for i in range(num_classes)]


def _bottleneck(g: GraphBuilder, prefix: str, src: str, in_c: int, mid_c: int, stride: int) -> tuple[str, int]:
    """1x1 reduce -> 3x3 (stride here, the v1.5 variant) -> 1x1 expand, plus shortcut."""
    out_c = 4 * mid_c
    x = g.conv(f"{prefix}.conv1", src, in_c, mid_c, 1)
    x = g.batchnorm(f"{prefix}.bn1", x, mid_c)
    x = g.relu(f"{prefix}.relu1", x)
    x = g.conv(f"{prefix}.conv2", x, mid_c, mid_c, 3, stride=stride, padding=1)
    x = g.batchnorm(f"{prefix}.bn2", x, mid_c)
    x = g.relu(f"{prefix}.relu2", x)
    x = g.conv(f"{prefix}.conv3", x, mid_c, out_c, 1)
    x = g.batchnorm(f"{prefix}.bn3", x, out_c)
    if stride != 1 or in_c != out_c:
        s = g.conv(f"{prefix}.proj_conv", src, in_c, out_c, 1, stride=stride)
        s = g.batchnorm(f"{prefix}.proj_bn", s, out_c)
    else:
        s = src
    x = g.add(f"{prefix}.add", [x, s])
    x = g.relu(f"{prefix}.relu_out", x)
    return x, out_c


RESNET152_SCHEDULE = ((64, 3, 1), (128, 8, 2), (256, 36, 2), (512, 3, 2))


def build_resnet152(num_classes: int = 3, input_size: int = 224, seed: int = 0) -> ModelSpec:
    """152-layer residual network: 7x7 stem, (3, 8, 36, 3) bottleneck stages, dense head."""
    labels = _class_labels(num_classes)
    if input_size < 32:
        raise ShapeError(f"input size {input_size} too small for the downsampling chain")
    g = GraphBuilder(Rng(seed))
    x = g.conv("stem.conv", "input", 3, 64, 7, stride=2, padding=3)
    x = g.batchnorm("stem.bn", x, 64)
    x = g.relu("stem.relu", x)
    x = g.maxpool("stem.pool", x, 3, 2, padding=1)
    in_c = 64
    for si, (mid_c, blocks, first_stride) in enumerate(RESNET152_SCHEDULE, start=1):
        for bi in range(blocks):
            stride = first_stride if bi == 0 else 1
            x, in_c = _bottleneck(g, f"stage{si}.block{bi}", x, in_c, mid_c, stride)
    x = g.global_avgpool("head.gap", x)
    x = g.dense("head.fc", x, in_c, num_classes)
    g.softmax("head.softmax", x)
    return ModelSpec(g.nodes, (3, input_size, input_size), labels, "resnet152")


def _inception_a(g: GraphBuilder, p: str, src: str, in_c: int, pool_c: int) -> tuple[str, int]:
    b1 = g.conv_bn_relu(f"{p}.b1x1", src, in_c, 64, 1)
    b2 = g.conv_bn_relu(f"{p}.b5x5_1", src, in_c, 48, 1)
    b2 = g.conv_bn_relu(f"{p}.b5x5_2", b2, 48, 64, 5, padding=2)
    b3 = g.conv_bn_relu(f"{p}.b3x3dbl_1", src, in_c, 64, 1)
    b3 = g.conv_bn_relu(f"{p}.b3x3dbl_2", b3, 64, 96, 3, padding=1)
    b3 = g.conv_bn_relu(f"{p}.b3x3dbl_3", b3, 96, 96, 3, padding=1)
    b4 = g.avgpool(f"{p}.pool", src, 3, 1, padding=1)
    b4 = g.conv_bn_relu(f"{p}.bpool", b4, in_c, pool_c, 1)
    out = g.concat(f"{p}.concat", [b1, b2, b3, b4])
    return out, 64 + 64 + 96 + pool_c


def _reduction_a(g: GraphBuilder, p: str, src: str, in_c: int) -> tuple[str, int]:
    b1 = g.conv_bn_relu(f"{p}.b3x3", src, in_c, 384, 3, stride=2)
    b2 = g.conv_bn_relu(f"{p}.b3x3dbl_1", src, in_c, 64, 1)
    b2 = g.conv_bn_relu(f"{p}.b3x3dbl_2", b2, 64, 96, 3, padding=1)
    b2 = g.conv_bn_relu(f"{p}.b3x3dbl_3", b2, 96, 96, 3, stride=2)
    b3 = g.maxpool(f"{p}.pool", src, 3, 2)
    out = g.concat(f"{p}.concat", [b1, b2, b3])
    return out, 384 + 96 + in_c


def _inception_b(g: GraphBuilder, p: str, src: str, in_c: int, c7: int) -> tuple[str, int]:
    """Factorized 7x7 block: 1x7 and 7x1 convolutions in sequence."""
    b1 = g.conv_bn_relu(f"{p}.b1x1", src, in_c, 192, 1)
    b2 = g.conv_bn_relu(f"{p}.b7_1", src, in_c, c7, 1)
    b2 = g.conv_bn_relu(f"{p}.b7_2", b2, c7, c7, (1, 7), padding=(0, 3))
    b2 = g.conv_bn_relu(f"{p}.b7_3", b2, c7, 192, (7, 1), padding=(3, 0))
    b3 = g.conv_bn_relu(f"{p}.b7dbl_1", src, in_c, c7, 1)
    b3 = g.conv_bn_relu(f"{p}.b7dbl_2", b3, c7, c7, (7, 1), padding=(3, 0))
    b3 = g.conv_bn_relu(f"{p}.b7dbl_3", b3, c7, c7, (1, 7), padding=(0, 3))
    b3 = g.conv_bn_relu(f"{p}.b7dbl_4", b3, c7, c7, (7, 1), padding=(3, 0))
    b3 = g.conv_bn_relu(f"{p}.b7dbl_5", b3, c7, 192, (1, 7), padding=(0, 3))
    b4 = g.avgpool(f"{p}.pool", src, 3, 1, padding=1)
    b4 = g.conv_bn_relu(f"{p}.bpool", b4, in_c, 192, 1)
    out = g.concat(f"{p}.concat", [b1, b2, b3, b4])
    return out, 192 * 4


def _reduction_b(g: GraphBuilder, p: str, src: str, in_c: int) -> tuple[str, int]:
    b1 = g.conv_bn_relu(f"{p}.b3x3_1", src, in_c, 192, 1)
    b1 = g.conv_bn_relu(f"{p}.b3x3_2", b1, 192, 320, 3, stride=2)
    b2 = g.conv_bn_relu(f"{p}.b7x7_1", src, in_c, 192, 1)
    b2 = g.conv_bn_relu(f"{p}.b7x7_2", b2, 192, 192, (1, 7), padding=(0, 3))
    b2 = g.conv_bn_relu(f"{p}.b7x7_3", b2, 192, 192, (7, 1), padding=(3, 0))
    b2 = g.conv_bn_relu(f"{p}.b7x7_4", b2, 192, 192, 3, stride=2)
    b3 = g.maxpool(f"{p}.pool", src, 3, 2)
    out = g.concat(f"{p}.concat", [b1, b2, b3])
    return out, 320 + 192 + in_c


def _inception_c(g: GraphBuilder, p: str, src: str, in_c: int) -> tuple[str, int]:
    """Expanded block whose 3x3 branches fan out into parallel 1x3 / 3x1 convs."""
    b1 = g.conv_bn_relu(f"{p}.b1x1", src, in_c, 320, 1)
    b2 = g.conv_bn_relu(f"{p}.b3x3_1", src, in_c, 384, 1)
    b2a = g.conv_bn_relu(f"{p}.b3x3_2a", b2, 384, 384, (1, 3), padding=(0, 1))
    b2b = g.conv_bn_relu(f"{p}.b3x3_2b", b2, 384, 384, (3, 1), padding=(1, 0))
    b2 = g.concat(f"{p}.b3x3_cat", [b2a, b2b])
    b3 = g.conv_bn_relu(f"{p}.b3x3dbl_1", src, in_c, 448, 1)
    b3 = g.conv_bn_relu(f"{p}.b3x3dbl_2", b3, 448, 384, 3, padding=1)
    b3a = g.conv_bn_relu(f"{p}.b3x3dbl_3a", b3, 384, 384, (1, 3), padding=(0, 1))
    b3b = g.conv_bn_relu(f"{p}.b3x3dbl_3b", b3, 384, 384, (3, 1), padding=(1, 0))
    b3 = g.concat(f"{p}.b3x3dbl_cat", [b3a, b3b])
    b4 = g.avgpool(f"{p}.pool", src, 3, 1, padding=1)
    b4 = g.conv_bn_relu(f"{p}.bpool", b4, in_c, 192, 1)
    out = g.concat(f"{p}.concat", [b1, b2, b3, b4])
    return out, 320 + 768 + 768 + 192


def build_inception_v3(num_classes: int = 3, input_size: int = 299, seed: int = 0) -> ModelSpec:
    """Inception-v3 without the auxiliary classifier head."""
    labels = _class_labels(num_classes)
    g = GraphBuilder(Rng(seed))
    x = g.conv_bn_relu("stem.conv1", "input", 3, 32, 3, stride=2)
    x = g.conv_bn_relu("stem.conv2", x, 32, 32, 3)
    x = g.conv_bn_relu("stem.conv3", x, 32, 64, 3, padding=1)
    x = g.maxpool("stem.pool1", x, 3, 2)
    x = g.conv_bn_relu("stem.conv4", x, 64, 80, 1)
    x = g.conv_bn_relu("stem.conv5", x, 80, 192, 3)
    x = g.maxpool("stem.pool2", x, 3, 2)
    c = 192
    for i, pool_c in enumerate((32, 64, 64)):
        x, c = _inception_a(g, f"mixed_a{i}", x, c, pool_c)
    x, c = _reduction_a(g, "reduction_a", x, c)
    for i, c7 in enumerate((128, 160, 160, 192)):
        x, c = _inception_b(g, f"mixed_b{i}", x, c, c7)
    x, c = _reduction_b(g, "reduction_b", x, c)
    for i in range(2):
        x, c = _inception_c(g, f"mixed_c{i}", x, c)
    x = g.global_avgpool("head.gap", x)
    x = g.dense("head.fc", x, c, num_classes)
    g.softmax("head.softmax", x)
    return ModelSpec(g.nodes, (3, input_size, input_size), labels, "inceptionv3")


def _build_tiny_residual(g: GraphBuilder) -> tuple[str, int]:
    x = g.conv("stem.conv", "input", 3, 16, 3, padding=1)
    x = g.batchnorm("stem.bn", x, 16)
    x = g.relu("stem.relu", x)
    x, c = _bottleneck(g, "block0", x, 16, 8, 1)
    x, c = _bottleneck(g, "block1", x, c, 8, 2)
    return x, c


def _build_tiny_inception(g: GraphBuilder) -> tuple[str, int]:
    x = g.conv("stem.conv", "input", 3, 16, 3, padding=1)
    x = g.batchnorm("stem.bn", x, 16)
    x = g.relu("stem.relu", x)
    c = 16
    for i in range(2):
        p = f"mixed{i}"
        b1 = g.conv_bn_relu(f"{p}.b1x1", x, c, 8, 1)
        b2 = g.conv_bn_relu(f"{p}.b5x5_1", x, c, 4, 1)
        b2 = g.conv_bn_relu(f"{p}.b5x5_2", b2, 4, 8, 5, padding=2)
        b3 = g.conv_bn_relu(f"{p}.b3x3_1", x, c, 4, 1)
        b3 = g.conv_bn_relu(f"{p}.b3x3_2", b3, 4, 8, 3, padding=1)
        b4 = g.avgpool(f"{p}.pool", x, 3, 1, padding=1)
        b4 = g.conv_bn_relu(f"{p}.bpool", b4, c, 8, 1)
        x = g.concat(f"{p}.concat", [b1, b2, b3, b4])
        c = 32
    return x, c


def build_tiny(preset: str, num_classes: int = 3, input_size: int = 32, seed: int = 0) -> ModelSpec:
    """Desk-scale stand-ins exercising the same block types as the full networks."""
    labels = _class_labels(num_classes)
    g = GraphBuilder(Rng(seed))
    if preset == "tiny-residual":
        x, c = _build_tiny_residual(g)
    elif preset == "tiny-inception":
        x, c = _build_tiny_inception(g)
    else:
        raise ValueError(f"unknown tiny preset {preset!r}; choose from {TINY_PRESETS}")
    x = g.global_avgpool("head.gap", x)
    x = g.dense("head.fc", x, c, num_classes)
    g.softmax("head.softmax", x)
    return ModelSpec(g.nodes, (3, input_size, input_size), labels, preset)


def build_architecture(name: str, num_classes: int = 3, input_size: int | None = None, seed: int = 0) -> ModelSpec:
    """Build any named architecture at its default input size unless overridden."""
    if name == "resnet152":
        return build_resnet152(num_classes, input_size or 224, seed)
    if name == "inceptionv3":
        return build_inception_v3(num_classes, input_size or 299, seed)
    if name in TINY_PRESETS:
        return build_tiny(name, num_classes, input_size or 32, seed)
    raise ValueError(f"unknown architecture {name!r}; choose from {ARCH_NAMES}")
