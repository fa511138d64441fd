import json

import pytest
from fastapi.testclient import TestClient

from capfuse.corpus import ImageEntry
from capfuse.rng import SplitMix64
from capfuse.study import StudyService, VoteStore
from capfuse.study_service import create_app

from conftest import FIXTURE, IMAGE_IDS, MODELS, corpus_entries


def build_client(tmp_path, quota=3, entries=None, asset_root=None):
    store = VoteStore(str(tmp_path / "votes.log"), quota=quota)
    options = {
        image_id: dict(FIXTURE[image_id]["captions"]) for image_id in IMAGE_IDS
    }
    service = StudyService(
        entries if entries is not None else corpus_entries(),
        options,
        store,
        SplitMix64(11),
    )
    app = create_app(service, asset_root=asset_root)
    return TestClient(app), service


def get_task(client, worker="w1", worker_class="generic"):
    return client.get(
        "/api/task", params={"worker": worker, "class": worker_class}
    )


class TestHealth:
    def test_health(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = client.get("/api/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "images": len(IMAGE_IDS)}


class TestTask:
    def test_issues_blinded_ballot(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = get_task(client)
        assert response.status_code == 200
        ballot = response.json()
        assert ballot["image_id"] == IMAGE_IDS[0]
        assert len(ballot["options"]) == len(MODELS)
        for model in MODELS:
            assert model not in response.text
        keys = [o["option_key"] for o in ballot["options"]]
        assert len(set(keys)) == len(keys)

    def test_bad_class_is_400(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = get_task(client, worker_class="banana")
        assert response.status_code == 400

    def test_empty_worker_is_400(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = get_task(client, worker="")
        assert response.status_code == 400

    def test_exhaustion_is_204(self, tmp_path):
        client, _ = build_client(tmp_path, quota=1)
        for _ in IMAGE_IDS:
            ballot = get_task(client).json()
            client.post("/api/vote", json={
                "ballot_id": ballot["ballot_id"],
                "choice": ballot["options"][0]["option_key"],
            })
        response = get_task(client, worker="w2")
        assert response.status_code == 204
        assert response.content == b""


class TestVote:
    def test_vote_then_next_image(self, tmp_path):
        client, service = build_client(tmp_path)
        ballot = get_task(client).json()
        response = client.post("/api/vote", json={
            "ballot_id": ballot["ballot_id"],
            "choice": ballot["options"][0]["option_key"],
        })
        assert response.status_code == 200
        assert response.json() == {"status": "recorded"}
        assert get_task(client).json()["image_id"] == IMAGE_IDS[1]
        # The log row resolves the model server-side.
        record = service.store.records[-1]
        assert record["model_id"] in MODELS
        assert record["image_id"] == ballot["image_id"]

    def test_double_vote_is_409(self, tmp_path):
        client, _ = build_client(tmp_path)
        ballot = get_task(client).json()
        body = {
            "ballot_id": ballot["ballot_id"],
            "choice": ballot["options"][0]["option_key"],
        }
        assert client.post("/api/vote", json=body).status_code == 200
        assert client.post("/api/vote", json=body).status_code == 409

    def test_unknown_ballot_is_410(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = client.post("/api/vote", json={
            "ballot_id": "ballot-feedfeedfeedfeed", "choice": "k",
        })
        assert response.status_code == 410

    def test_ballot_issued_before_restart_is_410(self, tmp_path):
        client, service = build_client(tmp_path)
        ballot = get_task(client).json()

        revived_store = VoteStore(str(tmp_path / "votes.log"))
        revived = StudyService(
            corpus_entries(), service.options_by_image, revived_store, SplitMix64(12),
        )
        client2 = TestClient(create_app(revived))
        response = client2.post("/api/vote", json={
            "ballot_id": ballot["ballot_id"],
            "choice": ballot["options"][0]["option_key"],
        })
        assert response.status_code == 410

    def test_bad_choice_is_400(self, tmp_path):
        client, _ = build_client(tmp_path)
        ballot = get_task(client).json()
        response = client.post("/api/vote", json={
            "ballot_id": ballot["ballot_id"], "choice": "not-a-key",
        })
        assert response.status_code == 400

    def test_missing_fields_rejected(self, tmp_path):
        client, _ = build_client(tmp_path)
        response = client.post("/api/vote", json={"ballot_id": "x"})
        assert response.status_code == 422

    def test_quota_exhausted_is_409(self, tmp_path):
        client, _ = build_client(tmp_path, quota=1)
        first = get_task(client, worker="w1").json()
        second = get_task(client, worker="w2").json()
        assert second["image_id"] == first["image_id"]
        assert client.post("/api/vote", json={
            "ballot_id": first["ballot_id"],
            "choice": first["options"][0]["option_key"],
        }).status_code == 200
        response = client.post("/api/vote", json={
            "ballot_id": second["ballot_id"],
            "choice": second["options"][0]["option_key"],
        })
        assert response.status_code == 409


class TestResults:
    def test_results_stay_blinded(self, tmp_path):
        client, _ = build_client(tmp_path)
        for worker in ("w1", "w2"):
            ballot = get_task(client, worker=worker).json()
            client.post("/api/vote", json={
                "ballot_id": ballot["ballot_id"],
                "choice": ballot["options"][0]["option_key"],
            })
        response = client.get("/api/results")
        assert response.status_code == 200
        for model in MODELS:
            assert model not in response.text
        data = response.json()
        assert data["votes_total"] == 2
        assert data["class_totals"]["generic"] == 2
        assert set(data["summary"]) == {
            f"model-{i + 1:02d}" for i in range(len(MODELS))
        }

    def test_no_model_names_in_any_endpoint(self, tmp_path):
        client, _ = build_client(tmp_path)
        bodies = [client.get("/api/health").text]
        task = get_task(client)
        bodies.append(task.text)
        ballot = task.json()
        bodies.append(client.post("/api/vote", json={
            "ballot_id": ballot["ballot_id"],
            "choice": ballot["options"][0]["option_key"],
        }).text)
        bodies.append(client.get("/api/results").text)
        blob = "\n".join(bodies)
        for model in MODELS:
            assert model not in blob


class TestAssets:
    def test_file_uri_served(self, tmp_path):
        image = tmp_path / "img-1.jpg"
        image.write_bytes(b"\xff\xd8fakejpeg")
        entries = [ImageEntry("img-1", "img-1.jpg", ["a dog", "the dog"])]
        client, _ = build_client(tmp_path, entries=entries, asset_root=str(tmp_path))
        response = client.get("/assets/img-1")
        assert response.status_code == 200
        assert response.content == b"\xff\xd8fakejpeg"

    def test_http_uri_redirects(self, tmp_path):
        entries = [
            ImageEntry("img-1", "https://example.test/img-1.jpg", ["a", "b"]),
        ]
        client, _ = build_client(tmp_path, entries=entries)
        response = client.get("/assets/img-1", follow_redirects=False)
        assert response.status_code in (302, 307)
        assert response.headers["location"] == "https://example.test/img-1.jpg"

    def test_unknown_image_404(self, tmp_path):
        client, _ = build_client(tmp_path)
        assert client.get("/assets/nope").status_code == 404

    def test_missing_file_404(self, tmp_path):
        entries = [ImageEntry("img-1", "gone.jpg", ["a", "b"])]
        client, _ = build_client(tmp_path, entries=entries, asset_root=str(tmp_path))
        assert client.get("/assets/img-1").status_code == 404
