"""Transfer training on a synthetic corpus, then packaging the model artifact.

The backbone stays frozen (batch-norm in inference mode, weights untouched);
only the dense head trains.  The trained model is serialized to the binary
deployment format and read back bit-for-bit before classifying an image.
A real run would point the same pipeline at a directory of labeled leaf
photos via the CLI:  fusiscan train --arch inceptionv3 --data <dir> ...
"""

import tempfile
from pathlib import Path

import numpy as np

from fusiscan.architectures import build_tiny
from fusiscan.dataset import SplitRatios, load_split_images
from fusiscan.augment import AugmentationConfig
from fusiscan.imageio import ClassLabel, LabeledImage
from fusiscan.modelfile import classify, load_model, model_info, save_model
from fusiscan.tensor import Rng
from fusiscan.training import TrainingConfig, transfer_train


def synthetic_corpus(n_per_class=20, size=32, seed=11):
    rng = Rng(seed)
    images = []
    for code, label in enumerate(ClassLabel):
        for i in range(n_per_class):
            px = np.full((size, size, 3), 60.0, dtype=np.float32)
            px[:, :, code] += 140.0
            px += rng.normal_array((size, size, 3), 0.0, 30.0)
            images.append(LabeledImage(np.clip(px, 0, 255).astype(np.uint8), label,
                                       source_path=f"corpus/{label.dir_name}/{i:03d}.png"))
    return images


corpus = synthetic_corpus()
print(f"corpus: {len(corpus)} images, 3 classes")

manifest, splits = load_split_images(
    corpus, SplitRatios(), seed=7, cfg=AugmentationConfig(per_image_variants=2)
)
print(f"split sizes (sources): {manifest.split_sizes()}; "
      f"train grows to {len(splits['train'])} with augmentation")

model = build_tiny("tiny-residual", 3, 32, seed=3)
cfg = TrainingConfig(epochs=20, batch_size=16, learning_rate=0.05, momentum=0.9, seed=17)
report = transfer_train(model, splits, cfg)
print("\n" + report.to_table())

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "scanner.fusi"
    save_model(model, path)
    info = model_info(path)
    print(f"\nartifact: {info['fileSizeBytes']:,} bytes, "
          f"{info['parameterCount']:,} parameters, labels {info['classLabels']}")

    loaded = load_model(path)
    probe = corpus[5]
    diagnosis = classify(loaded, probe.pixels)
    print(f"\nclassify a {probe.label.display_name} training image:")
    print(f"  -> {diagnosis.label.display_name} at {diagnosis.confidence:.1%} confidence")
    if diagnosis.recommendation:
        print(f"  -> {diagnosis.recommendation}")
    else:
        print("  -> confident diagnosis, no retake needed")
