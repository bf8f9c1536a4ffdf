import base64
import io
import json
import threading

import numpy as np
import pytest
import requests
from PIL import Image

from fusiscan.architectures import build_tiny
from fusiscan.modelfile import save_model
from fusiscan.service import MAX_BODY_BYTES, make_server, start_background
from fusiscan.tensor import Rng


@pytest.fixture(scope="module")
def server_base(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "model.fusi"
    save_model(build_tiny("tiny-residual", 3, 32, seed=5), path)
    server = make_server(path, "127.0.0.1", 0, cors_origin="http://localhost:5173")
    port = server.server_address[1]
    start_background(server)
    yield f"http://127.0.0.1:{port}"
    server.shutdown()
    server.server_close()


def png_bytes(value=90, size=40):
    buf = io.BytesIO()
    Image.fromarray(np.full((size, size, 3), value, dtype=np.uint8)).save(buf, "PNG")
    return buf.getvalue()


class TestHealthAndInfo:
    def test_health(self, server_base):
        r = requests.get(server_base + "/v1/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "model": "tiny-residual"}

    def test_model_info(self, server_base):
        r = requests.get(server_base + "/v1/model-info")
        assert r.status_code == 200
        doc = r.json()
        assert doc["architectureName"] == "tiny-residual"
        assert doc["classLabels"] == ["black_sigatoka", "fusarium_wilt_race1", "healthy"]

    def test_unknown_route(self, server_base):
        r = requests.get(server_base + "/v1/nope")
        assert r.status_code == 404
        assert set(r.json()) == {"code", "message"}

    def test_cors_header_present(self, server_base):
        r = requests.get(server_base + "/v1/health")
        assert r.headers["Access-Control-Allow-Origin"] == "http://localhost:5173"


class TestClassifyEndpoint:
    def test_multipart_image(self, server_base):
        r = requests.post(
            server_base + "/v1/classify",
            files={"image": ("leaf.png", png_bytes(), "image/png")},
        )
        assert r.status_code == 200
        doc = r.json()
        assert set(doc) == {"label", "confidence", "per_class", "recommendation", "model", "latency_ms"}
        assert doc["model"] == "tiny-residual"
        assert list(doc["per_class"]) == ["black_sigatoka", "fusarium_wilt_race1", "healthy"]
        assert sum(doc["per_class"].values()) == pytest.approx(1.0, abs=1e-6)

    def test_json_base64_image(self, server_base):
        payload = {"image_b64": base64.b64encode(png_bytes()).decode()}
        r = requests.post(server_base + "/v1/classify", json=payload)
        assert r.status_code == 200

    def test_multipart_and_json_agree(self, server_base):
        png = png_bytes(130)
        a = requests.post(
            server_base + "/v1/classify", files={"image": ("x.png", png, "image/png")}
        ).json()
        b = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(png).decode()},
        ).json()
        assert a["label"] == b["label"]
        assert a["per_class"] == b["per_class"]

    def test_stateless_identical_responses(self, server_base):
        png = png_bytes(77)
        results = [
            requests.post(
                server_base + "/v1/classify", files={"image": ("x.png", png, "image/png")}
            ).json()
            for _ in range(2)
        ]
        for doc in results:
            doc.pop("latency_ms")
        assert results[0] == results[1]

    def test_threshold_override(self, server_base):
        png = png_bytes()
        strict = requests.post(
            server_base + "/v1/classify",
            files={"image": ("x.png", png, "image/png"), "threshold": (None, "1.0")},
        ).json()
        assert strict["recommendation"] is not None
        lax = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(png).decode(), "threshold": 0.0},
        ).json()
        assert lax["recommendation"] is None

    def test_boundary_threshold_inclusive(self, server_base):
        png = png_bytes(101)
        measured = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(png).decode(), "threshold": 0.0},
        ).json()["confidence"]
        at = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(png).decode(), "threshold": measured},
        ).json()
        assert at["recommendation"] is None


class TestRejections:
    def test_oversized_body_413(self, server_base):
        r = requests.post(
            server_base + "/v1/classify",
            data=b"x" * (MAX_BODY_BYTES + 1),
            headers={"Content-Type": "application/json"},
        )
        assert r.status_code == 413

    def test_undecodable_image_422(self, server_base):
        r = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(b"not an image at all").decode()},
        )
        assert r.status_code == 422
        assert r.json()["code"] == "undecodable_image"

    def test_missing_image_field_400(self, server_base):
        r = requests.post(server_base + "/v1/classify", json={"threshold": 0.5})
        assert r.status_code == 400

    def test_bad_base64_400(self, server_base):
        r = requests.post(server_base + "/v1/classify", json={"image_b64": "@@@not-base64@@@"})
        assert r.status_code == 400

    def test_bad_threshold_400(self, server_base):
        r = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(png_bytes()).decode(), "threshold": 3.0},
        )
        assert r.status_code == 400

    def test_wrong_content_type_400(self, server_base):
        r = requests.post(
            server_base + "/v1/classify", data=b"junk", headers={"Content-Type": "text/plain"}
        )
        assert r.status_code == 400

    def test_ppm_rejected_on_the_wire(self, server_base):
        from fusiscan.imageio import write_ppm

        ppm = write_ppm(np.full((8, 8, 3), 90, dtype=np.uint8))
        r = requests.post(
            server_base + "/v1/classify",
            json={"image_b64": base64.b64encode(ppm).decode()},
        )
        assert r.status_code == 422

    def test_fuzz_never_crashes(self, server_base):
        rng = Rng(123)
        session = requests.Session()
        content_types = [
            "application/json",
            "multipart/form-data; boundary=zzz",
            "multipart/form-data",
            "application/octet-stream",
            "",
        ]
        for i in range(100):
            n = rng.below(400)
            body = bytes(bytearray(int(b) & 0xFF for b in rng.next_u64_block(n)))
            ct = content_types[rng.below(len(content_types))]
            r = session.post(
                server_base + "/v1/classify", data=body, headers={"Content-Type": ct}
            )
            assert r.status_code in (400, 413, 422)
        # service still healthy afterwards
        assert session.get(server_base + "/v1/health").status_code == 200


class TestConcurrency:
    def test_health_responds_during_classifications(self, server_base):
        png = png_bytes(55, size=500)  # bigger image: longer classify
        errors = []

        def classify_many():
            try:
                for _ in range(3):
                    requests.post(
                        server_base + "/v1/classify",
                        files={"image": ("x.png", png, "image/png")},
                    )
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        workers = [threading.Thread(target=classify_many) for _ in range(3)]
        for w in workers:
            w.start()
        for _ in range(10):
            assert requests.get(server_base + "/v1/health", timeout=5).status_code == 200
        for w in workers:
            w.join()
        assert not errors


class TestStartupFailures:
    def test_unreadable_model_fails_before_bind(self, tmp_path):
        with pytest.raises(Exception):
            make_server(tmp_path / "missing.fusi", "127.0.0.1", 0)


class TestCliServiceParity:
    def test_cli_and_service_classify_agree(self, server_base, tmp_path, capsys):
        """The CLI and the HTTP endpoint share one classify path bit for bit."""
        import json as json_mod

        from fusiscan.cli import main
        from fusiscan.imageio import write_image

        px = np.clip(Rng(31).normal_array((48, 48, 3), 128, 40), 0, 255).astype(np.uint8)
        img_path = tmp_path / "probe.png"
        write_image(img_path, px)

        served = requests.post(
            server_base + "/v1/classify",
            files={"image": ("probe.png", img_path.read_bytes(), "image/png")},
        ).json()

        model_path = requests.get(server_base + "/v1/model-info")  # model identity check
        assert model_path.json()["architectureName"] == served["model"]

        # the service fixture's model file lives next to the server; rebuild the
        # identical model for the CLI side
        from fusiscan.architectures import build_tiny
        from fusiscan.modelfile import save_model

        cli_model = tmp_path / "same.fusi"
        save_model(build_tiny("tiny-residual", 3, 32, seed=5), cli_model)
        assert main([
            "classify", "--model", str(cli_model), "--image", str(img_path), "--json",
        ]) == 0
        cli_doc = json_mod.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert cli_doc["label"] == served["label"]
        assert cli_doc["confidence"] == served["confidence"]
        assert cli_doc["per_class"] == served["per_class"]


class TestServedOverfitModel:
    def test_training_image_classifies_to_its_label_with_high_confidence(self, tmp_path):
        """A served overfit model returns the training label above the 70% gate."""
        import io as io_mod

        from conftest import synthetic_color_images
        from fusiscan.architectures import build_tiny
        from fusiscan.modelfile import save_model
        from fusiscan.training import TrainingConfig, transfer_train

        images = synthetic_color_images(20, size=32, seed=11)
        model = build_tiny("tiny-residual", 3, 32, seed=3)
        cfg = TrainingConfig(epochs=30, batch_size=16, learning_rate=0.05, seed=17)
        transfer_train(model, {"train": images, "validation": images[:6], "test": []}, cfg)
        path = tmp_path / "overfit.fusi"
        save_model(model, path)

        server = make_server(path, "127.0.0.1", 0)
        base = f"http://127.0.0.1:{server.server_address[1]}"
        start_background(server)
        try:
            probe = images[0]  # a training image
            buf = io_mod.BytesIO()
            Image.fromarray(probe.pixels).save(buf, "PNG")
            doc = requests.post(
                base + "/v1/classify",
                files={"image": ("leaf.png", buf.getvalue(), "image/png")},
            ).json()
            assert doc["label"] == probe.label.dir_name
            assert doc["confidence"] > 0.70
            assert doc["recommendation"] is None
        finally:
            server.shutdown()
            server.server_close()
