import dataclasses
import json

import pytest
from fastapi.testclient import TestClient

from ftr.pipeline import PipelineConfig, PipelineModels, load_queue, run_batch
from ftr.service import create_app

HIGH_TAU = 1.0 - 1e-9


@pytest.fixture(scope="module")
def served(tmp_path_factory, clean_corpus, model_dir, char_detector,
           chinese_classifier):
    out = tmp_path_factory.mktemp("served")
    config = PipelineConfig(detector="oracle", tau=HIGH_TAU,
                            model_path=str(model_dir / "detector.json"),
                            chinese_model_path=str(model_dir / "chinese.json"))
    models = PipelineModels(char_detector=char_detector, chinese=chinese_classifier)
    run_batch(clean_corpus, config, out, models=models)
    return out, TestClient(create_app(out)), clean_corpus


def truth_label(corpus, item):
    with open(corpus / "tickets" / f"{item['ticket_id']}.json", encoding="utf-8") as f:
        truth = json.load(f)
    region = next(r for r in truth["regions"] if r["id"] == item["region_id"])
    return region["text"][item["char_index"]]


class TestHealth:
    def test_ok(self, served):
        _, client, _ = served
        r = client.get("/api/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}


class TestQueue:
    def test_list_sorted(self, served):
        _, client, _ = served
        items = client.get("/api/queue").json()
        assert items
        ids = [it["id"] for it in items]
        assert ids == sorted(ids)

    def test_status_filter(self, served):
        _, client, _ = served
        pending = client.get("/api/queue", params={"status": "pending"}).json()
        assert all(it["status"] == "pending" for it in pending)
        corrected = client.get("/api/queue", params={"status": "corrected"}).json()
        assert all(it["status"] == "corrected" for it in corrected)

    def test_bad_status(self, served):
        _, client, _ = served
        assert client.get("/api/queue", params={"status": "bogus"}).status_code == 400


class TestCorrect:
    def test_correction_flow(self, served):
        out, client, corpus = served
        items = client.get("/api/queue", params={"status": "pending"}).json()
        item = items[0]
        label = truth_label(corpus, item)
        r = client.post(f"/api/queue/{item['id']}", json={"label": label})
        assert r.status_code == 200
        body = r.json()
        assert body["item_id"] == item["id"]
        assert body["ticket_id"] == item["ticket_id"]
        region = next(rg for rg in body["result"]["regions"]
                      if rg["id"] == item["region_id"])
        assert region["chars"][item["char_index"]]["char"] == label
        # idempotent repeat
        assert client.post(f"/api/queue/{item['id']}",
                           json={"label": label}).status_code == 200
        # conflicting label
        r = client.post(f"/api/queue/{item['id']}", json={"label": label + "x"})
        assert r.status_code == 409
        # durably recorded
        assert load_queue(out)[item["id"]].status == "corrected"

    def test_unknown_item(self, served):
        _, client, _ = served
        r = client.post("/api/queue/no.such.item", json={"label": "x"})
        assert r.status_code == 404

    def test_empty_label(self, served):
        _, client, _ = served
        items = client.get("/api/queue").json()
        r = client.post(f"/api/queue/{items[0]['id']}", json={"label": ""})
        assert r.status_code == 400


class TestTickets:
    def test_fetch(self, served):
        _, client, _ = served
        r = client.get("/api/tickets/t00000")
        assert r.status_code == 200
        assert r.json()["id"] == "t00000"

    def test_unknown(self, served):
        _, client, _ = served
        assert client.get("/api/tickets/nope").status_code == 404


class TestCrops:
    def test_png(self, served):
        _, client, _ = served
        item = client.get("/api/queue").json()[0]
        r = client.get(f"/api/crops/{item['id']}")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown(self, served):
        _, client, _ = served
        assert client.get("/api/crops/nope").status_code == 404
