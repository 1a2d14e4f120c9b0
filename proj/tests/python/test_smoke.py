import json

import jsonschema
import pytest

import groupscope as gs


def validator(name):
    schemas = gs.response_schemas()
    schema = dict(schemas["endpoints"][name])
    schema["$defs"] = schemas["$defs"]
    return jsonschema.Draft202012Validator(schema)


def check(name, payload):
    errors = sorted(validator(name).iter_errors(payload), key=str)
    assert not errors, [e.message for e in errors]


@pytest.fixture(scope="module")
def planted():
    return gs.planted_corpus(n=200, seed=3).split(seed=7)


@pytest.fixture(scope="module")
def model(planted):
    return gs.train(planted, "Dominance", gs.Embeddings.synthetic(4), max_epochs=3, hidden_size=4, seed=7)


def test_dataset_round_trip(tmp_path):
    d = gs.explanation_corpus()
    assert len(d) == 120
    again = gs.Dataset.from_jsonl(d.to_jsonl())
    assert again.checksum == d.checksum
    path = str(tmp_path / "snap.json")
    d.save(path)
    assert gs.Dataset.load(path).checksum == d.checksum
    assert json.loads(d.summary_json())["n_instances"] == 120


def test_ingest_errors_map_to_python():
    with pytest.raises(gs.ValidationError, match="line 1"):
        gs.Dataset.from_jsonl('{"id": "1"}\n')
    assert issubclass(gs.ValidationError, gs.Error)


def test_training_and_cues(planted, model):
    emb = gs.Embeddings.synthetic(4)
    ev = gs.evaluate(model, planted, emb)
    assert 0.0 <= ev["metrics"]["accuracy"] <= 1.0
    cues = gs.mine_cues(model, planted, emb, top=5)
    assert len(cues) == 5
    for c in cues:
        check("GET /attributes/{a}/cues?format=jsonl (per line)", c)
    weights = [c["w_seq"] for c in cues]
    assert weights == sorted(weights, reverse=True)
    again = gs.Model.from_snapshot(model.snapshot())
    assert again.snapshot() == model.snapshot()
    with pytest.raises(gs.NotFoundError):
        gs.train(planted, "Arousal", emb)


def test_insights_and_explanations():
    d = gs.explanation_corpus()
    dens = gs.density(d, "Valence")
    assert dens["attribute"] == "Valence"
    sub = gs.cluster(gs.blob_corpus(300, 11), ["Valence", "Dominance"], 8)
    assert sub["chosen_k"] == 3
    tree = gs.fit_tree(d)
    e = gs.explain(tree, d, "12")
    assert e["fact"]["instance_id"] == "12"
    assert e["narrative"].startswith("Instance 12 is classified as")
    with pytest.raises(gs.NoContrastError):
        gs.explain(tree, d, "12", "12", mode="o")


def test_service_payloads_match_schemas():
    svc = gs.Service(seed=7, embedding_dimension=4)
    corpus = gs.planted_corpus(n=200, seed=3).to_jsonl()
    status, body = gs.request(svc, "POST", "/datasets", body=corpus, content_type="application/x-ndjson")
    assert status == 201
    check("POST /datasets", body)

    status, body = gs.request(svc, "GET", "/instances", {"q": "harbor", "page_size": "5"})
    assert status == 200
    check("GET /instances", body)

    for path, name, query in [
        ("/attributes/summary", "GET /attributes/summary", {}),
        ("/attributes/Valence/density", "GET /attributes/{a}/density", {}),
        ("/subgroups", "GET /subgroups", {"attrs": "Valence,Dominance", "kmax": "6"}),
        ("/trend", "GET /trend", {"attrs": "Valence,Dominance"}),
    ]:
        status, body = gs.request(svc, "GET", path, query)
        assert status == 200, body
        check(name, body)

    status, body = gs.request(svc, "POST", "/tree/fit", body={"max_depth": 3})
    assert status == 200
    check("POST /tree/fit", body)
    status, body = gs.request(svc, "POST", "/explain", body={"mode": "p", "fact_id": "12"})
    assert status == 200
    check("POST /explain", body)
    status, body = gs.request(svc, "GET", "/eval/histogram", {"source": "tree"})
    assert status == 200
    check("GET /eval/histogram", body)

    status, body = gs.request(svc, "POST", "/models/Dominance/train",
                              body={"max_epochs": 2, "hidden_size": 4, "seed": 7})
    assert status == 202
    check("POST /models/{a}/train", body)
    svc.wait_for_jobs()
    status, body = gs.request(svc, "GET", "/models/Dominance")
    assert status == 200
    check("GET /models/{a}", body)
    status, body = gs.request(svc, "GET", "/attributes/Dominance/cues", {"top": "5"})
    assert status == 200
    check("GET /attributes/{a}/cues", body)

    status, body = gs.request(svc, "GET", "/attributes/Arousal/density")
    assert status == 404
    check("error", body)
