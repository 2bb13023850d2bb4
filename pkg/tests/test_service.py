"""Tests for the HTTP service endpoints over an in-process transport."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dlet.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


CACHE_BODY = {"lambda": 0.0, "sigma": 1.0, "order": 4, "tau_max": 1.0,
              "tau_min": 0.0625, "dx": 1.0 / 128.0, "n_substeps": 32}


def _build_cache(client) -> str:
    resp = client.post("/cache", json=CACHE_BODY)
    assert resp.status_code == 200
    return resp.json()["cache_id"]


def _decompose(client, preset="gaussian_bump", levels=3) -> dict:
    resp = client.post("/decompose", json={"preset": preset, "order": 4,
                                           "levels": levels, "period": 8})
    assert resp.status_code == 200
    return resp.json()


class TestHealthAndBasis:

    def test_health(self, client):
        doc = client.get("/health").json()
        assert doc["status"] == "ok"

    def test_basis_tables_and_residuals(self, client):
        resp = client.post("/basis", json={"order": 4, "resolution": 8})
        doc = resp.json()
        assert doc["filter_report"]["moment_residual"] < 1e-10
        assert len(doc["father"]["x"]) == 7 * 2 ** 8 + 1
        total = np.sum(doc["father"]["values"]) * 2.0 ** -8
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_basis_order_bounds(self, client):
        assert client.post("/basis", json={"order": 0}).status_code == 422


class TestDecompose:

    def test_constant_input_has_zero_betas(self, client):
        doc = _decompose(client, "linear_payoff(0, 1)")
        beta_values = [v for _, _, v in doc["expansion"]["beta"]]
        assert np.max(np.abs(beta_values)) < 1e-10
        assert doc["round_trip_error"] < 1e-10

    def test_kink_concentrates_betas(self, client):
        doc = _decompose(client, "call_payoff(4.0)")
        top = max(doc["expansion"]["beta"],
                  key=lambda row: abs(row[2]))
        i, k, _ = top
        # strongest detail coefficient sits on the kink at x = 4
        assert abs(k / 2 ** i - 4.0) < 4.0 / 2 ** i

    def test_round_trip_error_small(self, client):
        doc = _decompose(client)
        assert doc["round_trip_error"] < 1e-10

    def test_bad_preset_rejected(self, client):
        resp = client.post("/decompose", json={"preset": "nope"})
        assert resp.status_code == 400
        assert "unknown preset" in resp.json()["error"]


class TestSolve:

    def test_constant_preserved(self, client):
        resp = client.post("/solve", json={
            "lambda": 0.0, "sigma": 1.0, "preset": "linear_payoff(0, 2)",
            "x_lo": -4.0, "x_hi": 4.0, "horizon": 0.5, "nx": 65,
            "nt": 16})
        rows = np.array(resp.json()["rows"])
        np.testing.assert_allclose(rows, 2.0, rtol=0.0, atol=1e-12)

    def test_discounting_applied(self, client):
        body = {"lambda": 0.0, "sigma": 1.0,
                "preset": "linear_payoff(0, 1)", "x_lo": -4.0,
                "x_hi": 4.0, "horizon": 1.0, "nx": 65, "nt": 16,
                "r": 0.05, "taus": [1.0]}
        resp = client.post("/solve", json=body)
        rows = np.array(resp.json()["rows"])
        np.testing.assert_allclose(rows, np.exp(-0.05), rtol=1e-12)

    def test_lam_alias_accepted(self, client):
        body = {"lam": 0.0, "sigma": 1.0, "preset": "linear_payoff(0, 1)",
                "x_lo": 0.0, "x_hi": 1.0, "horizon": 0.1, "nx": 17,
                "nt": 4}
        assert client.post("/solve", json=body).status_code == 200


class TestCacheRegistry:

    def test_build_reports_meta(self, client):
        resp = client.post("/cache", json=CACHE_BODY)
        doc = resp.json()
        assert doc["mode"] == "fast"
        assert doc["tau_max"] == 1.0
        assert doc["n_snapshots"] >= 2

    def test_build_is_idempotent(self, client):
        a = client.post("/cache", json=CACHE_BODY).json()["cache_id"]
        b = client.post("/cache", json=CACHE_BODY).json()["cache_id"]
        assert a == b

    def test_export_import_round_trip(self, client):
        cache_id = _build_cache(client)
        blob = client.get(f"/cache/{cache_id}/export").content
        imported = client.post("/cache/import", content=blob).json()
        assert imported["tau_max"] == 1.0
        meta = client.get(f"/cache/{imported['cache_id']}").json()
        assert meta["mode"] == "fast"

    def test_unknown_cache_rejected(self, client):
        assert client.get("/cache/deadbeef").status_code == 400
        resp = client.post("/cache/import", content=b"")
        assert resp.status_code == 400


class TestReconstructVarianceCovariance:

    def test_terminal_reconstruction_matches_preset(self, client):
        # The moment-matched prefilter converges at fourth order, so six
        # levels put the sampling gap well below the tolerance.
        cache_id = _build_cache(client)
        doc = _decompose(client, levels=6)
        x = (np.arange(65) / 8.0).tolist()
        resp = client.post("/reconstruct", json={
            "cache_id": cache_id, "expansion": doc["expansion"],
            "tau": 0.0, "x": x})
        values = np.array(resp.json()["values"])
        bump = np.exp(-0.5 * ((np.array(x) - 4.0) / 0.6) ** 2)
        assert np.max(np.abs(values - bump)) < 1e-6

    def test_truncation_reports_terms(self, client):
        cache_id = _build_cache(client)
        sparse = {"order": 4, "levels": 0, "origin": 0.0,
                  "alpha": [[k, 1.0 if k in (0, 3) else 0.0]
                            for k in range(8)],
                  "beta": []}
        x = (np.arange(33) / 4.0).tolist()
        full = client.post("/reconstruct", json={
            "cache_id": cache_id, "expansion": sparse,
            "tau": 0.0625, "x": x}).json()
        trunc = client.post("/reconstruct", json={
            "cache_id": cache_id, "expansion": sparse,
            "tau": 0.0625, "x": x, "epsilon": 1e-6}).json()
        assert full["terms_used"] == 8
        assert trunc["terms_used"] == 2
        gap = np.max(np.abs(np.array(full["values"])
                            - np.array(trunc["values"])))
        assert gap < 1e-5

    def test_zero_gamma_variance_field(self, client):
        cache_id = _build_cache(client)
        doc = _decompose(client)
        resp = client.post("/variance", json={
            "cache_id": cache_id, "expansion": doc["expansion"],
            "taus": [0.0, 0.0625], "x": [3.0, 4.0, 5.0],
            "gamma": {"c": 0.0}})
        values = np.array(resp.json()["values"])
        assert values.shape == (2, 3)
        np.testing.assert_array_equal(values, 0.0)

    def test_covariance_diagonal_matches_variance(self, client):
        cache_id = _build_cache(client)
        doc = _decompose(client)
        var = client.post("/variance", json={
            "cache_id": cache_id, "expansion": doc["expansion"],
            "taus": [0.0625], "x": [4.0]}).json()["values"][0][0]
        cov = client.post("/covariance", json={
            "cache_id": cache_id, "expansion": doc["expansion"],
            "pairs": [[0.0625, 4.0, 0.0625, 4.0]]}).json()["rows"][0][4]
        assert cov == var

    def test_horizon_error_surfaces_as_400(self, client):
        cache_id = _build_cache(client)
        doc = _decompose(client)
        resp = client.post("/reconstruct", json={
            "cache_id": cache_id, "expansion": doc["expansion"],
            "tau": 9.0, "x": [4.0]})
        assert resp.status_code == 400
        assert "rebuild with tau_max" in resp.json()["error"]


class TestValidateEndpoint:

    def test_translation_suite(self, client):
        resp = client.post("/validate", json={"suite": "translation"})
        doc = resp.json()
        assert doc["status"] == "pass"

    def test_unknown_suite(self, client):
        resp = client.post("/validate", json={"suite": "nope"})
        assert resp.status_code == 400
