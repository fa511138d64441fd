import json

import pytest
from hypothesis import given, strategies as st

from capfuse.corpus import (
    load_candidates,
    load_corpus,
    load_splits,
    make_splits,
    save_splits,
    write_jsonl,
)
from capfuse.errors import (
    DuplicateId,
    DuplicateImageId,
    DuplicateModelId,
    MalformedRecord,
    SizeMismatch,
)


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines))


class TestLoadCorpus:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, [
            json.dumps({"image_id": "a", "uri": "a.jpg", "ground_truths": ["x y"]}),
            "",
            json.dumps({"image_id": "b", "uri": "b.jpg", "ground_truths": ["u", "v"]}),
        ])
        entries = load_corpus(str(path))
        assert [e.image_id for e in entries] == ["a", "b"]
        assert entries[1].ground_truths == ["u", "v"]

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ['{"image_id": "a"', ])
        with pytest.raises(MalformedRecord) as err:
            load_corpus(str(path))
        assert err.value.line_no == 1

    @pytest.mark.parametrize("record", [
        {"uri": "a.jpg", "ground_truths": ["x"]},
        {"image_id": "", "uri": "a.jpg", "ground_truths": ["x"]},
        {"image_id": "a", "ground_truths": ["x"]},
        {"image_id": "a", "uri": "a.jpg"},
        {"image_id": "a", "uri": "a.jpg", "ground_truths": []},
        {"image_id": "a", "uri": "a.jpg", "ground_truths": ["x", "  "]},
        {"image_id": "a", "uri": "a.jpg", "ground_truths": "x"},
    ])
    def test_invalid_records(self, tmp_path, record):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, [json.dumps(record)])
        with pytest.raises(MalformedRecord):
            load_corpus(str(path))

    def test_non_object_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_lines(path, ["[1, 2]"])
        with pytest.raises(MalformedRecord):
            load_corpus(str(path))

    def test_duplicate_image_id(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        record = json.dumps({"image_id": "a", "uri": "a.jpg", "ground_truths": ["x"]})
        write_lines(path, [record, record])
        with pytest.raises(DuplicateImageId):
            load_corpus(str(path))


class TestLoadCandidates:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "cands.jsonl"
        write_lines(path, [json.dumps({
            "image_id": "a",
            "candidates": [
                {"model_id": "m1", "text": "one"},
                {"model_id": "m2", "text": "two"},
            ],
        })])
        sets = load_candidates(str(path))
        assert sets[0].image_id == "a"
        assert [c.model_id for c in sets[0].candidates] == ["m1", "m2"]

    def test_duplicate_model_within_image(self, tmp_path):
        path = tmp_path / "cands.jsonl"
        write_lines(path, [json.dumps({
            "image_id": "a",
            "candidates": [
                {"model_id": "m1", "text": "one"},
                {"model_id": "m1", "text": "again"},
            ],
        })])
        with pytest.raises(DuplicateModelId):
            load_candidates(str(path))

    def test_duplicate_image_across_lines(self, tmp_path):
        path = tmp_path / "cands.jsonl"
        record = json.dumps({
            "image_id": "a",
            "candidates": [{"model_id": "m1", "text": "one"}],
        })
        write_lines(path, [record, record])
        with pytest.raises(DuplicateImageId):
            load_candidates(str(path))

    @pytest.mark.parametrize("record", [
        {"image_id": "a", "candidates": []},
        {"image_id": "a", "candidates": [{"model_id": "m1"}]},
        {"image_id": "a", "candidates": [{"text": "one"}]},
        {"image_id": "a", "candidates": [{"model_id": "m1", "text": ""}]},
        {"image_id": "a"},
    ])
    def test_invalid_records(self, tmp_path, record):
        path = tmp_path / "cands.jsonl"
        write_lines(path, [json.dumps(record)])
        with pytest.raises(MalformedRecord):
            load_candidates(str(path))


class TestWriteJsonl:
    def test_write_and_count(self, tmp_path):
        path = tmp_path / "out.jsonl"
        n = write_jsonl(str(path), [{"a": 1}, {"b": 2}])
        assert n == 2
        lines = path.read_text().splitlines()
        assert json.loads(lines[0]) == {"a": 1}


class TestSplits:
    def test_sizes_and_disjointness(self):
        ids = [f"id{i}" for i in range(100)]
        splits = make_splits(ids, (70, 10, 20), seed=3)
        assert len(splits.train) == 70
        assert len(splits.val) == 10
        assert len(splits.test) == 20
        combined = splits.train + splits.val + splits.test
        assert sorted(combined) == sorted(ids)
        assert len(set(combined)) == 100

    def test_deterministic_per_seed(self):
        ids = [f"id{i}" for i in range(50)]
        a = make_splits(ids, (30, 10, 10), seed=9)
        b = make_splits(ids, (30, 10, 10), seed=9)
        assert a.to_dict() == b.to_dict()
        c = make_splits(ids, (30, 10, 10), seed=10)
        assert c.to_dict() != a.to_dict()

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DuplicateId):
            make_splits(["a", "a", "b"], (1, 1, 1), seed=0)

    @pytest.mark.parametrize("sizes", [(1, 1, 2), (4, 0, 0), (-1, 3, 1)])
    def test_size_mismatch(self, sizes):
        with pytest.raises(SizeMismatch):
            make_splits(["a", "b", "c"], sizes, seed=0)

    def test_shuffle_actually_moves_items(self):
        ids = [f"id{i}" for i in range(1000)]
        splits = make_splits(ids, (600, 200, 200), seed=1)
        assert splits.train != ids[:600]

    def test_save_load_roundtrip(self, tmp_path):
        splits = make_splits([f"id{i}" for i in range(10)], (6, 2, 2), seed=5)
        path = tmp_path / "splits.json"
        save_splits(str(path), splits)
        loaded = load_splits(str(path))
        assert loaded.to_dict() == splits.to_dict()

    @given(
        n=st.integers(min_value=0, max_value=60),
        seed=st.integers(min_value=0, max_value=2 ** 64 - 1),
        data=st.data(),
    )
    def test_partition_property(self, n, seed, data):
        ids = [f"id{i}" for i in range(n)]
        a = data.draw(st.integers(min_value=0, max_value=n))
        b = data.draw(st.integers(min_value=0, max_value=n - a))
        splits = make_splits(ids, (a, b, n - a - b), seed=seed)
        combined = splits.train + splits.val + splits.test
        assert sorted(combined) == sorted(ids)
        assert (len(splits.train), len(splits.val), len(splits.test)) == (a, b, n - a - b)
