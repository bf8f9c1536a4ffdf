import json

import numpy as np
import pytest

from fusiscan.architectures import build_tiny
from fusiscan.cli import main
from fusiscan.dataset import DatasetManifest
from fusiscan.imageio import write_ppm
from fusiscan.modelfile import save_model

from conftest import synthetic_color_images, write_class_tree


@pytest.fixture()
def dataset_20(tmp_path):
    """20 images spread over the three class directories."""
    images = synthetic_color_images(7, size=16, seed=8)[:20]
    for i, img in enumerate(images):
        path = tmp_path / "data" / img.label.dir_name / f"img{i:03d}.ppm"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(write_ppm(img.pixels))
    return tmp_path / "data"


@pytest.fixture(scope="module")
def saved_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("climodel") / "tiny.fusi"
    save_model(build_tiny("tiny-residual", 3, 32, seed=5), path)
    return path


class TestUsage:
    def test_unknown_flag_exits_1(self, capsys):
        assert main(["split", "--bogus"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_command_exits_1(self):
        assert main(["frobnicate"]) == 1

    def test_missing_required_exits_1(self):
        assert main(["classify"]) == 1


class TestSplitCommand:
    def test_twenty_files_default_ratios(self, dataset_20, tmp_path, capsys):
        manifest_path = tmp_path / "manifest.json"
        code = main([
            "split", "--data", str(dataset_20), "--seed", "4",
            "--manifest", str(manifest_path),
        ])
        assert code == 0
        manifest = DatasetManifest.from_json(manifest_path.read_text())
        assert manifest.split_sizes() == (16, 3, 1)
        assert "train=16 validation=3 test=1" in capsys.readouterr().out

    def test_custom_ratios(self, dataset_20, tmp_path):
        manifest_path = tmp_path / "m.json"
        code = main([
            "split", "--data", str(dataset_20), "--ratios", "0.5,0.25,0.25",
            "--seed", "1", "--manifest", str(manifest_path),
        ])
        assert code == 0
        assert DatasetManifest.from_json(manifest_path.read_text()).split_sizes() == (10, 5, 5)

    def test_bad_ratios_exit_1(self, dataset_20, tmp_path):
        assert main([
            "split", "--data", str(dataset_20), "--ratios", "0.5,0.5",
            "--manifest", str(tmp_path / "m.json"),
        ]) == 1

    def test_missing_layout_exits_2(self, tmp_path):
        (tmp_path / "empty").mkdir()
        assert main([
            "split", "--data", str(tmp_path / "empty"), "--manifest", str(tmp_path / "m.json"),
        ]) == 2


class TestClassifyCommand:
    def test_json_output_matches_response_schema(self, saved_model, tmp_path, capsys):
        img_path = tmp_path / "leaf.ppm"
        img_path.write_bytes(write_ppm(np.full((32, 32, 3), 100, dtype=np.uint8)))
        code = main([
            "classify", "--model", str(saved_model), "--image", str(img_path), "--json",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert set(doc) == {"label", "confidence", "per_class", "recommendation", "model", "latency_ms"}

    def test_human_output_mentions_display_name(self, saved_model, tmp_path, capsys):
        img_path = tmp_path / "leaf.ppm"
        img_path.write_bytes(write_ppm(np.full((32, 32, 3), 100, dtype=np.uint8)))
        assert main(["classify", "--model", str(saved_model), "--image", str(img_path)]) == 0
        out = capsys.readouterr().out
        assert "confidence:" in out

    def test_env_fallback_for_model(self, saved_model, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("FUSI_MODEL", str(saved_model))
        img_path = tmp_path / "leaf.ppm"
        img_path.write_bytes(write_ppm(np.full((32, 32, 3), 100, dtype=np.uint8)))
        assert main(["classify", "--image", str(img_path)]) == 0

    def test_missing_model_is_usage_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("FUSI_MODEL", raising=False)
        img_path = tmp_path / "leaf.ppm"
        img_path.write_bytes(write_ppm(np.full((8, 8, 3), 1, dtype=np.uint8)))
        assert main(["classify", "--image", str(img_path)]) == 1

    def test_corrupt_model_exits_2(self, tmp_path):
        bad = tmp_path / "bad.fusi"
        bad.write_bytes(b"FUSIgarbage")
        img_path = tmp_path / "leaf.ppm"
        img_path.write_bytes(write_ppm(np.full((8, 8, 3), 1, dtype=np.uint8)))
        assert main(["classify", "--model", str(bad), "--image", str(img_path)]) == 2


class TestInspectCommand:
    def test_dump_lines_and_summary(self, saved_model, capsys):
        assert main(["inspect-model", "--model", str(saved_model)]) == 0
        out = capsys.readouterr().out
        assert "head.fc  dense" in out
        assert "total parameters:" in out
        assert "weighted layers (main path):" in out


class TestAugmentCommand:
    def test_expands_to_out_dir(self, dataset_20, tmp_path, capsys):
        out_dir = tmp_path / "expanded"
        code = main([
            "augment", "--data", str(dataset_20), "--out", str(out_dir),
            "--seed", "3", "--variants", "2",
        ])
        assert code == 0
        pngs = list(out_dir.rglob("*.png"))
        assert len(pngs) == 20 * 3  # original + 2 variants each
        assert "20 sources -> 60 images" in capsys.readouterr().out


class TestTrainCommand:
    def test_train_tiny_end_to_end(self, dataset_20, tmp_path, capsys):
        model_path = tmp_path / "trained.fusi"
        report_path = tmp_path / "report.json"
        code = main([
            "train", "--arch", "tiny-residual", "--data", str(dataset_20),
            "--epochs", "2", "--seed", "1", "--out", str(model_path),
            "--report", str(report_path), "--variants", "1", "--batch-size", "8",
        ])
        assert code == 0
        assert model_path.exists()
        doc = json.loads(report_path.read_text())
        assert doc["architectureName"] == "tiny-residual"
        assert len(doc["perEpoch"]) == 2
        out = capsys.readouterr().out
        assert "Validation accuracy" in out

    def test_paper_faithful_flag(self, dataset_20, tmp_path):
        model_path = tmp_path / "pf.fusi"
        code = main([
            "train", "--arch", "tiny-residual", "--data", str(dataset_20),
            "--epochs", "1", "--seed", "1", "--out", str(model_path),
            "--variants", "1", "--paper-faithful", "--batch-size", "8",
        ])
        assert code == 0
        assert model_path.exists()
