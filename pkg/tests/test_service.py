import base64
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sparseglu.container import save_container
from sparseglu.ffn import Activation
from sparseglu.model import ModelManifest, TinyLM, generate_weights
from sparseglu.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def small_model_payload():
    m = ModelManifest(1, 8, 16, 2, 256, Activation.SILU, 1e-6, 32)
    blob = save_container(generate_weights(m, 0))
    return m, blob


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_sparsify_top_p(client):
    r = client.post(
        "/sparsify", json={"values": [3, -1, 0.5, 0.5], "rule": {"kind": "top_p", "p": 0.6}}
    )
    assert r.status_code == 200
    body = r.json()
    assert body["kept_indices"] == [0]
    assert body["induced_sparsity"] == 0.75


def test_sparsify_invalid_rule(client):
    r = client.post("/sparsify", json={"values": [1.0], "rule": {"kind": "top_p", "p": 2.0}})
    assert r.status_code == 422


def test_flops(client):
    r = client.post(
        "/flops",
        json={"h": 4, "d": 8, "site": "intermediate", "mode": "value_based", "sparsity": 1.0},
    )
    body = r.json()
    assert body["macs"] == 64.0 and body["dense_macs"] == 96.0
    assert body["saving"] == pytest.approx(1 / 3)


def test_flops_invalid_mode_site(client):
    r = client.post(
        "/flops", json={"h": 4, "d": 8, "site": "gate", "mode": "oracle_predictor", "sparsity": 0.5}
    )
    assert r.status_code == 422


def test_forward_matches_local(client, small_model_payload):
    manifest, blob = small_model_payload
    tokens = list(range(16))
    r = client.post(
        "/forward",
        json={
            "container_b64": base64.b64encode(blob).decode(),
            "manifest": json.loads(manifest.to_json()),
            "tokens": tokens,
        },
    )
    assert r.status_code == 200
    got = np.array(r.json()["logits"])
    from sparseglu.container import load_container

    local = TinyLM(manifest, load_container(blob)).forward_logits(tokens)
    assert np.allclose(got, local.astype(np.float64), rtol=0, atol=0)


def test_forward_sparsified_reports_sparsity(client, small_model_payload):
    manifest, blob = small_model_payload
    r = client.post(
        "/forward",
        json={
            "container_b64": base64.b64encode(blob).decode(),
            "manifest": json.loads(manifest.to_json()),
            "tokens": list(range(8)),
            "site": "intermediate",
            "rule": {"kind": "top_p", "p": 0.5},
        },
    )
    assert r.status_code == 200
    assert r.json()["avg_induced_sparsity"] > 0


def test_forward_bad_base64(client, small_model_payload):
    manifest, _ = small_model_payload
    r = client.post(
        "/forward",
        json={"container_b64": "!!!", "manifest": json.loads(manifest.to_json()), "tokens": [0]},
    )
    assert r.status_code == 422


def test_stats_critical(client):
    points = [
        {"p": 0.5, "induced_sparsity": 0.2, "raw_metric": 1.0, "normalized_metric": 1.0},
        {"p": 0.7, "induced_sparsity": 0.4, "raw_metric": 0.995, "normalized_metric": 0.995},
        {"p": 0.9, "induced_sparsity": 0.6, "raw_metric": 0.97, "normalized_metric": 0.97},
    ]
    r = client.post("/stats/critical", json={"points": points, "retention": 0.99})
    assert r.json()["value"] == 0.4


def test_stats_kde(client):
    r = client.post("/stats/kde", json={"values": [1, 2, 3, 4, 5], "grid_points": 512})
    body = r.json()
    assert body["bandwidth"] == pytest.approx(0.9735846228506357, abs=1e-9)
    grid, density = np.array(body["grid"]), np.array(body["density"])
    assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-3)


def test_stats_trend(client):
    r = client.post(
        "/stats/trend",
        json={
            "parameter_counts": [1e9, 4e9, 12e9, 27e9],
            "critical_sparsities": [50.22, 58.56, 69.46, 74.12],
        },
    )
    assert r.json()["slope"] > 0
