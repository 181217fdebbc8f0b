import os
from pathlib import Path

import pytest

import fgcard

TOY = Path(os.environ.get("FGCARD_TOY", Path(__file__).resolve().parents[1] / "data" / "toy"))
JOIN = "SELECT COUNT(*) FROM A a, B b WHERE a.id = b.aid"


@pytest.fixture(scope="module")
def toy():
    return fgcard.Database.load(TOY / "schema.json", TOY)


def test_singleton_bins_are_exact(toy):
    model = fgcard.train(toy, k=100, estimator="truescan")
    assert fgcard.estimate(model, JOIN)["estimate"] == 83
    assert toy.exact_cardinality(JOIN) == 83


def test_single_bin_bound(toy):
    model = fgcard.train(toy, k=1, estimator="truescan")
    report = fgcard.estimate(model, JOIN, explain=True)
    assert report["estimate"] == 96
    assert len(report["explain"]["factors"]) == 2


def test_bytes_and_file_round_trip(toy, tmp_path):
    model = fgcard.train(toy, k=4, estimator="sample", rate=0.5)
    blob = model.to_bytes()
    assert blob.startswith(b"FGCARD01")
    assert fgcard.Model.from_bytes(blob).to_bytes() == blob
    path = tmp_path / "toy.fgc"
    model.save(path)
    assert fgcard.Model.load(path).to_bytes() == blob
    assert fgcard.train(toy, k=4, estimator="sample", rate=0.5).to_bytes() == blob


def test_subplans_and_workload():
    db = fgcard.Database.chain(3, 300, 1.0, 2)
    model = fgcard.train(db, estimator="truescan")
    result = fgcard.subplans(model, "SELECT COUNT(*) FROM T0 x, T1 y, T2 z WHERE y.prev = x.id AND z.prev = y.id")
    assert len(result["reports"]) == 6
    assert not result["truncated"]
    for sql in db.workload(20, seed=3):
        assert fgcard.estimate(model, sql)["estimate"] >= db.exact_cardinality(sql)


def test_update_from_delta_dir(toy, tmp_path):
    model = fgcard.train(toy, k=100, estimator="truescan")
    (tmp_path / "A.csv").write_text("id,a1,_op\n1,0,delete\n5,2,insert\n")
    (tmp_path / "B.csv").write_text("aid,b1\n5,1\n")
    model.update(tmp_path)
    assert fgcard.estimate(model, JOIN)["estimate"] == 82


def test_errors_map_to_exceptions(toy, tmp_path):
    model = fgcard.train(toy, k=4, estimator="truescan")
    with pytest.raises(fgcard.ParseError):
        fgcard.estimate(model, "SELECT COUNT(* FROM A")
    with pytest.raises(fgcard.Error):
        fgcard.Model.from_bytes(b"junk")
    (tmp_path / "A.csv").write_text("id,a1,_op\n9,9,delete\n")
    with pytest.raises(fgcard.DataError):
        model.update(tmp_path)
