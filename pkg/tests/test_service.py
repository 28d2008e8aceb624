import numpy as np
import pytest
from fastapi.testclient import TestClient

from affine_kit import AffineModel, Canonical, __version__, sym_to_flat
from affine_kit.service import create_app

TRANSFORM_HALF = 0.42888194248035344


@pytest.fixture(scope="module")
def client():
    app = create_app()
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


def _u(*zs):
    return [{"re": float(np.real(z)), "im": float(np.imag(z))} for z in zs]


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_validate_endpoint(client, chain2):
    r = client.post("/model/validate", json={"model": chain2.to_dict()})
    assert r.status_code == 200
    assert r.json()["passed"] is True


def test_validate_reports_failures(client, brownian):
    doc = brownian.to_dict()
    doc["a"] = [[-1.0]]
    r = client.post("/model/validate", json={"model": doc})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is False
    assert any(not c["passed"] for c in body["checks"])


def test_transform_endpoint(client, wishart1):
    r = client.post("/transform", json={
        "model": wishart1.to_dict(), "x": [1.0], "t": 0.5, "u": _u(-1.0)})
    assert r.status_code == 200
    body = r.json()
    assert abs(body["value"]["re"] - TRANSFORM_HALF) < 1e-9
    assert abs(body["value"]["im"]) < 1e-12
    assert body["killed"] is False


def test_transform_killed(client, wishart1):
    with pytest.warns(UserWarning, match="outside U"):
        r = client.post("/transform", json={
            "model": wishart1.to_dict(), "x": [1.0], "t": 1.0, "u": _u(2.0)})
    assert r.status_code == 200
    body = r.json()
    assert body["killed"] is True
    assert body["value"] == {"re": 0.0, "im": 0.0}


def test_transform_left_u_is_422(client):
    rotation = AffineModel(space=Canonical(m=2, n=2), B=[[0.0, -1.0], [1.0, 0.0]])
    r = client.post("/transform", json={
        "model": rotation.to_dict(), "x": [1.0, 1.0], "t": 1.0,
        "u": _u(-1.0, -1e-3)})
    assert r.status_code == 422
    body = r.json()
    assert "t_star" in body and body["t_star"] > 0.0


def test_riccati_endpoint(client, brownian):
    r = client.post("/riccati", json={
        "model": brownian.to_dict(), "u": _u(1j), "horizon": 1.0})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "complete"
    assert body["t_star"] is None
    head = body["grid"][0]
    assert head["t"] == 0.0
    assert head["phi"] == {"re": 0.0, "im": 0.0}
    assert head["psi"] == [{"re": 0.0, "im": 1.0}]
    assert abs(body["grid"][-1]["phi"]["re"] - (-0.5)) < 1e-8


def test_riccati_blow_up_reports_t_star(client, wishart1):
    with pytest.warns(UserWarning, match="outside U"):
        r = client.post("/riccati", json={
            "model": wishart1.to_dict(), "u": _u(1.0), "horizon": 1.0})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "blow_up"
    assert abs(body["t_star"] - 0.5) < 1e-6


def test_simulate_endpoint(client, chain2):
    req = {"model": chain2.to_dict(), "x0": [0.0], "horizon": 1.0, "dt": 0.01,
           "n_paths": 500, "seed": 7, "scheme": "gillespie_exact",
           "record_every": 20}
    r1 = client.post("/simulate", json=req)
    r2 = client.post("/simulate", json=req)
    assert r1.status_code == 200
    assert r1.json() == r2.json()
    body = r1.json()
    assert body["times"][-1] == 1.0
    assert abs(body["mean"][-1][0] - 2.0 * (1.0 - np.exp(-1.0))) < 0.1


def test_simulate_cell_guard(client, brownian):
    r = client.post("/simulate", json={
        "model": brownian.to_dict(), "x0": [0.0], "horizon": 1.0, "dt": 1e-3,
        "n_paths": 1_000_000, "seed": 0})
    assert r.status_code == 400
    assert "record" in r.json()["detail"]


def test_oracle_endpoint_default_u(client):
    r = client.post("/oracle", json={"name": "chain_k2", "t": 1.0, "x": [0.0]})
    assert r.status_code == 200
    body = r.json()
    assert abs(body["value"]["re"] - body["ctmc_value"]["re"]) < 1e-12
    assert abs(body["value"]["re"] - 0.36050849836372917) < 1e-12


def test_oracle_endpoint_wishart2d(client):
    u = sym_to_flat(-np.eye(2))
    x = sym_to_flat(np.diag([1.0, 0.0]))
    r = client.post("/oracle", json={"name": "wishart2d", "t": 0.25,
                                     "u": _u(*u), "x": list(x)})
    assert r.status_code == 200
    assert abs(r.json()["value"]["re"] - 0.3422780793550613) < 1e-12


def test_oracle_unknown_name_is_400(client):
    r = client.post("/oracle", json={"name": "heston"})
    assert r.status_code == 400


def test_verify_endpoint(client):
    r = client.post("/verify", json={"suite": "mc", "seed": 42, "n_paths": 200})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    assert set(body["reports"]) == {"mc_transform", "martingale"}


def test_bad_model_is_400(client):
    r = client.post("/transform", json={
        "model": {"space": {"kind": "Torus"}}, "x": [0.0], "t": 1.0, "u": _u(1j)})
    assert r.status_code == 400
    assert "detail" in r.json()


def test_malformed_body_is_422(client, brownian):
    r = client.post("/transform", json={"model": brownian.to_dict(), "x": [0.0]})
    assert r.status_code == 422


def test_request_bounds(client, brownian):
    r = client.post("/simulate", json={
        "model": brownian.to_dict(), "x0": [0.0], "horizon": 1.0,
        "n_paths": 2_000_000, "seed": 0})
    assert r.status_code == 422  # above the schema cap
    r = client.post("/transform", json={
        "model": brownian.to_dict(), "x": [0.0], "t": -1.0, "u": _u(1j)})
    assert r.status_code == 422
