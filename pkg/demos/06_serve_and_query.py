"""The offline inference service, exercised the way the web client uses it.

Starts the HTTP service on an ephemeral port with a freshly trained tiny
model, then walks through the endpoints: health, model-info, multipart and
base64 classification, the per-request threshold override, and the oversize
rejection.  The process serves everything locally and opens no outbound
connections.
"""

import base64
import io
import json
import tempfile
from pathlib import Path

import numpy as np
import requests
from PIL import Image

from fusiscan.architectures import build_tiny
from fusiscan.modelfile import save_model
from fusiscan.service import MAX_BODY_BYTES, make_server, start_background
from fusiscan.tensor import Rng

with tempfile.TemporaryDirectory() as tmp:
    model_path = Path(tmp) / "scanner.fusi"
    save_model(build_tiny("tiny-residual", 3, 32, seed=5), model_path)

    server = make_server(model_path, "127.0.0.1", 0, cors_origin="*")
    port = server.server_address[1]
    start_background(server)
    base = f"http://127.0.0.1:{port}"
    print(f"service listening on {base} (CLI equivalent: fusiscan serve --model ... --port {port})")

    print("\nGET /v1/health")
    print(" ", requests.get(base + "/v1/health").json())

    print("GET /v1/model-info")
    print(" ", requests.get(base + "/v1/model-info").json())

    rng = Rng(8)
    px = np.clip(rng.normal_array((64, 64, 3), 128, 40), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(px).save(buf, "PNG")
    png = buf.getvalue()

    print("\nPOST /v1/classify (multipart)")
    doc = requests.post(base + "/v1/classify",
                        files={"image": ("leaf.png", png, "image/png")}).json()
    print(" ", json.dumps(doc, indent=2))

    print("POST /v1/classify (JSON base64, threshold=0.0)")
    doc = requests.post(base + "/v1/classify",
                        json={"image_b64": base64.b64encode(png).decode(),
                              "threshold": 0.0}).json()
    print(f"  label={doc['label']} confidence={doc['confidence']:.3f} "
          f"recommendation={doc['recommendation']}")

    print("\noversize upload is refused before the body is read:")
    r = requests.post(base + "/v1/classify", data=b"x" * (MAX_BODY_BYTES + 1),
                      headers={"Content-Type": "application/json"})
    print(f"  {r.status_code} {r.json()}")

    server.shutdown()
    server.server_close()
    print("\nservice stopped")
