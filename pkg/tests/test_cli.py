import hashlib
import json
import os
import signal
import socket
import subprocess
import sys
import time

import numpy as np
import requests

from sizetryon import imgio, pipeline
from sizetryon.cli import main
from sizetryon.domain import GarmentLength, GarmentMetadata, GarmentType
from sizetryon.pipeline import PipelineConfig

from conftest import CATALOG_PATH, FIXTURES


def fixture_args(name="person_a"):
    path = FIXTURES / name
    return path, [
        "--labels", str(path / "labels.png"),
        "--labels-table", str(path / "labels.json"),
    ]


def test_mask_oversize_report(tmp_path):
    _, labels = fixture_args()
    out = tmp_path / "mask.png"
    rc = main(["mask", *labels, "--type", "top", "--length", "short",
               "--true-size", "S", "--size", "L", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.with_suffix(".json").read_text())
    assert report["delta"] == 2
    assert report["mode"] == "dilate"
    assert report["iterations"] == 10
    assert report["impractical"] is False
    assert imgio.load_mask(out).any()


def test_mask_equal_sizes_matches_regular_fit(tmp_path, person_a):
    _, labels = fixture_args()
    out = tmp_path / "mask.png"
    rc = main(["mask", *labels, "--type", "pants", "--length", "long",
               "--true-size", "M", "--size", "M", "--out", str(out)])
    assert rc == 0
    meta = GarmentMetadata(GarmentType.PANTS, GarmentLength.LONG)
    regular = pipeline.regular_fit_mask(person_a.labels, meta, PipelineConfig())
    assert out.read_bytes() == imgio.mask_to_png(regular)


def test_mask_impractical_extreme(tmp_path):
    _, labels = fixture_args()
    out = tmp_path / "mask.png"
    rc = main(["mask", *labels, "--type", "top", "--length", "short",
               "--true-size", "XXL", "--size", "XXS", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.with_suffix(".json").read_text())
    assert report["impractical"] is True
    assert report["area"] == 0 and report["bbox"] is None
    assert not imgio.load_mask(out).any()


def test_mask_corrupt_labels_table_exits_nonzero(tmp_path, capsys):
    path, _ = fixture_args()
    bad = tmp_path / "labels.json"
    bad.write_text("{not json")
    rc = main(["mask", "--labels", str(path / "labels.png"), "--labels-table", str(bad),
               "--type", "top", "--length", "short",
               "--true-size", "S", "--size", "M", "--out", str(tmp_path / "m.png")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_remove_command(tmp_path, person_a):
    path, labels = fixture_args()
    out = tmp_path / "removed.png"
    mask_out = tmp_path / "refined.png"
    rc = main(["remove", *labels, "--image", str(path / "image.png"),
               "--truth-mask", str(path / "truth_garment_mask.png"),
               "--type", "top", "--length", "short", "--seed", "3",
               "--out", str(out), "--mask-out", str(mask_out)])
    assert rc == 0
    removed = imgio.load_image(out)
    refined = imgio.load_mask(mask_out)
    assert np.array_equal(removed[~refined], person_a.image[~refined])
    assert ((removed != person_a.image).any(axis=2) <= person_a.truth).all()


def test_tryon_deterministic_and_debug(tmp_path):
    path, labels = fixture_args()
    hashes = []
    for i in range(2):
        out = tmp_path / f"result{i}.png"
        rc = main(["tryon", *labels, "--image", str(path / "image.png"),
                   "--truth-mask", str(path / "truth_garment_mask.png"),
                   "--garment-image", str(CATALOG_PATH.parent / "tee-red.png"),
                   "--type", "top", "--length", "short",
                   "--true-size", "S", "--size", "L", "--seed", "11",
                   "--out", str(out)])
        assert rc == 0
        hashes.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert hashes[0] == hashes[1]

    out = tmp_path / "debug_run.png"
    rc = main(["tryon", *labels, "--image", str(path / "image.png"),
               "--garment-image", str(CATALOG_PATH.parent / "tee-red.png"),
               "--type", "top", "--length", "short",
               "--true-size", "S", "--size", "L", "--seed", "11",
               "--out", str(out), "--debug", "--debug-dir", str(tmp_path / "debug")])
    assert rc == 0
    artifacts = sorted(p.name for p in (tmp_path / "debug").glob("*.png"))
    assert len(artifacts) == 6
    assert artifacts == ["adjusted_mask.png", "edge_guidance.png", "refined_mask.png",
                         "regular_fit_mask.png", "removed.png", "rough_mask.png"]


def test_tryon_missing_input_exits_nonzero(tmp_path, capsys):
    path, labels = fixture_args()
    rc = main(["tryon", *labels, "--image", str(path / "image.png"),
               "--garment-image", str(tmp_path / "ghost.png"),
               "--type", "top", "--length", "short",
               "--true-size", "S", "--size", "L", "--out", str(tmp_path / "r.png")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# -- serve -----------------------------------------------------------------------


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def serve_process(tmp_path, port, catalog=CATALOG_PATH, delay="0.5"):
    env = dict(os.environ, SICO_MOCK_DELAY_S=delay, PYTHONUNBUFFERED="1")
    return subprocess.Popen(
        [sys.executable, "-m", "sizetryon", "serve",
         "--port", str(port), "--catalog", str(catalog),
         "--data-dir", str(tmp_path / "data"), "--fixtures", str(FIXTURES),
         "--canvas-w", "120", "--canvas-h", "160", "--workers", "1"],
        env=env, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
    )


def wait_ready(port, timeout=20.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            resp = requests.get(f"http://127.0.0.1:{port}/api/garments", timeout=1)
            if resp.status_code == 200:
                return resp.json()
        except requests.ConnectionError:
            time.sleep(0.1)
    raise TimeoutError("server did not come up")


def test_serve_duplicate_catalog_refuses_to_start(tmp_path):
    source = json.loads(CATALOG_PATH.read_text())
    dup = tmp_path / "catalog.json"
    dup.write_text(json.dumps(source + [source[0]]))
    for entry in source:
        (tmp_path / entry["image"]).write_bytes(
            (CATALOG_PATH.parent / entry["image"]).read_bytes())
    proc = serve_process(tmp_path, free_port(), catalog=dup)
    out, _ = proc.communicate(timeout=30)
    assert proc.returncode == 1
    assert b"duplicate garment id" in out


def test_serve_sigterm_drains_running_job(tmp_path):
    port = free_port()
    proc = serve_process(tmp_path, port)
    try:
        garments = wait_ready(port)
        assert len(garments) == 6

        png = (FIXTURES / "person_a" / "image.png").read_bytes()
        resp = requests.post(
            f"http://127.0.0.1:{port}/api/sessions",
            files={"image": ("p.png", png, "image/png")},
            data={"true_top_size": "S", "true_bottom_size": "M"},
            timeout=10,
        )
        assert resp.status_code == 201
        sid = resp.json()["session_id"]
        resp = requests.post(f"http://127.0.0.1:{port}/api/sessions/{sid}/tryon",
                             json={"garment_id": "tee-red", "size": "M"}, timeout=5)
        assert resp.status_code == 202
        job_id = resp.json()["job_id"]

        deadline = time.monotonic() + 10
        while requests.get(f"http://127.0.0.1:{port}/api/jobs/{job_id}",
                           timeout=2).json()["status"] == "queued":
            assert time.monotonic() < deadline
            time.sleep(0.05)

        proc.send_signal(signal.SIGTERM)
        proc.wait(timeout=30)
        # uvicorn re-raises the signal after a graceful shutdown; both forms are clean
        assert proc.returncode in (0, -signal.SIGTERM)
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()

    state = json.loads((tmp_path / "data" / "state.json").read_text())
    job = next(j for j in state["jobs"] if j["job_id"] == job_id)
    assert job["status"] in ("done", "failed")
    if job["status"] == "failed":
        assert "shutdown" in job["error"]
