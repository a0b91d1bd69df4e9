from __future__ import annotations

import json

import numpy as np

from depthfilter import __version__
from depthfilter.utils.state import RunManifest, atomic_write_text, dumps, read_json, sha256_file, write_json


def test_dumps_is_sorted_and_plain():
    text = dumps({"b": np.int64(2), "a": np.array([1.5, np.nan]), "c": (np.bool_(True),)})
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1.5, None], "b": 2, "c": [True]}
    assert text.index('"a"') < text.index('"b"')


def test_atomic_write_creates_parents(tmp_path):
    target = tmp_path / "deep" / "er" / "out.txt"
    atomic_write_text(target, "x\n")
    assert target.read_text(encoding="utf-8") == "x\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_json_round_trip(tmp_path):
    path = write_json(tmp_path / "r.json", {"k": [1, 2]})
    assert read_json(path) == {"k": [1, 2]}


def test_sha256_file(tmp_path):
    path = tmp_path / "abc.txt"
    path.write_bytes(b"abc")
    assert sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_manifest_written_beside_output(tmp_path):
    data = tmp_path / "in.csv"
    data.write_bytes(b"abc")
    out = tmp_path / "out.csv"
    man = RunManifest(command="filter", config={"beta": 0.99}, seed=3)
    man.add_inputs([data])
    man.finish()
    path = man.write_beside(out)
    assert path.name == "out.csv.manifest.json"
    doc = read_json(path)
    assert doc["tool_version"] == __version__
    assert doc["inputs"] == {str(data): sha256_file(data)}
    assert doc["seed"] == 3
    assert doc["finished_at"] is not None
