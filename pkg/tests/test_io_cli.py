from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings

from oracles import dynamic_digraphs
from ssx.bench import bench, random_structure
from ssx.cli import main
from ssx.complex import loads_complex
from ssx.dac import lift_dac
from ssx.errors import ValidationError
from ssx.experiments import directed_config, directed_sample, leakage_check, to_directed_samples
from ssx.io import dumps_activations, dumps_edge_list, parse_activations, parse_edge_list
from ssx.linear import LinearClassifier
from ssx.rng import make_rng
from ssx.ssn import SSNModel
from ssx.synthetic import SyntheticTaskSpec, generate_synthetic
from ssx.train import dumps_checkpoint


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- parsers -------------------------------------------------------------------------


def test_edge_list_variants():
    g = parse_edge_list("# a comment\nsrc,dst\n0,1\n1 2\n\n2\t0\n")
    assert g.num_vertices == 3 and g.edge_set == {(0, 1), (1, 2), (2, 0)}
    g = parse_edge_list("# vertices 5\n0 1\n")
    assert g.num_vertices == 5
    assert parse_edge_list("").num_vertices == 0


@pytest.mark.parametrize(
    "text, where",
    [
        ("0 1\n1 x\n", ":2:2:"),
        ("0 1 2\n", ":1:"),
        ("0 -1\n", ":1:"),
        ("# vertices 1\n0 3\n", "declared"),
        ("# vertices many\n", ":1:"),
        ("0 0\n", "loop"),
    ],
)
def test_edge_list_errors_carry_location(text, where):
    with pytest.raises(ValidationError, match=where):
        parse_edge_list(text, name="f")


def test_activation_parsing_and_errors():
    g = parse_edge_list("0 1\n1 2\n")
    d = parse_activations("T=2\n2 0 1\n0 1 1\n1 1,0\n", g)
    assert d.activations.tolist() == [[1, 1], [1, 0], [0, 1]]
    bad = {
        "0 1 1\n": "header",
        "T=0\n": "T must",
        "T=1\n0 1\n1 1\n": "no activation row for vertex 2",
        "T=1\n0 1\n0 1\n1 1\n2 1\n": "duplicate",
        "T=1\n0 2\n1 1\n2 1\n": ":2:2:",
        "T=1\n7 1\n": "dangling",
        "T=2\n0 1\n": "expected vertex id and 2 bits",
    }
    for text, msg in bad.items():
        with pytest.raises(ValidationError, match=msg):
            parse_activations(text, g)


@given(dynamic_digraphs())
@settings(max_examples=60, deadline=None)
def test_text_round_trip(g):
    back = parse_activations(dumps_activations(g), parse_edge_list(dumps_edge_list(g.graph)))
    assert back.graph.num_vertices == g.graph.num_vertices
    assert back.graph.edge_set == g.graph.edge_set
    assert np.array_equal(back.activations, g.activations)


# -- CLI -------------------------------------------------------------------------------


@pytest.fixture
def graph_files(tmp_path):
    edges = tmp_path / "g.edges"
    edges.write_text("0 1\n0 2\n1 2\n2 3\n")
    acts = tmp_path / "g.act"
    acts.write_text("T=2\n0 1 1\n1 1 0\n2 1 1\n3 0 1\n")
    return edges, acts


def test_lift_command(capsys, tmp_path, graph_files):
    edges, _ = graph_files
    out_path = tmp_path / "cx.txt"
    code, out, _ = run(capsys, "lift", "--edges", str(edges), "--output", str(out_path))
    assert code == 0
    assert [(r["dim"], r["count"]) for r in rows(out)] == [("0", "4"), ("1", "4"), ("2", "1")]
    assert rows(out)[0]["schema_version"] == "1"
    assert loads_complex(out_path.read_text()).sizes == (4, 4, 1)


def test_invariants_command(capsys, graph_files):
    edges, acts = graph_files
    code, out, _ = run(capsys, "invariants", "--edges", str(edges), "--activations", str(acts), "--kind", "td")
    assert code == 0
    table = rows(out)
    assert [(r["t1"], r["t2"]) for r in table] == [("1", "0"), ("1", "0"), ("1", "0"), ("0", "0")]
    code, out, _ = run(capsys, "invariants", "--edges", str(edges), "--activations", str(acts), "--kind", "ec", "--format", "jsonl")
    record = json.loads(out.splitlines()[0])
    assert code == 0 and record["schema_version"] == 1 and (record["t1"], record["t2"]) == (1, 1)
    code, out, _ = run(capsys, "invariants", "--edges", str(edges), "--kind", "size", "--phi", "sorted-multiset")
    assert code == 0 and len(rows(out)) >= 1


@pytest.mark.parametrize("family, verdict", [("dir", "SEPARATED"), ("U", "NOT-SEPARATED"), ("D", "SEPARATED")])
def test_wl_command_on_fixture(capsys, family, verdict):
    code, out, _ = run(capsys, "wl-test", "--family", family, "--pair", "fig6")
    assert code == 0 and rows(out)[0]["verdict"] == verdict


def test_wl_command_on_files_and_fixture_export(capsys, tmp_path):
    code, _, _ = run(capsys, "fixtures", "--name", "fig9", "--out", str(tmp_path))
    assert code == 0
    code, out, _ = run(capsys, "wl-test", "--family", "dir", "--pair", str(tmp_path / "fig9_a.edges"), str(tmp_path / "fig9_b.edges"))
    assert code == 0 and rows(out)[0]["verdict"] == "SEPARATED"


def test_ssn_forward_command(capsys, tmp_path, graph_files):
    edges, acts = graph_files
    ckpt = tmp_path / "m.ckpt"
    model = SSNModel.init(directed_config(3, 4, 2), 0)
    ckpt.write_text(dumps_checkpoint(model))
    code, out, _ = run(capsys, "ssn-forward", "--edges", str(edges), "--activations", str(acts), "--checkpoint", str(ckpt), "--format", "jsonl")
    assert code == 0
    record = json.loads(out)
    sample = directed_sample(parse_activations(acts.read_text(), parse_edge_list(edges.read_text())))
    np.testing.assert_allclose(record["logits"], model.logits(sample.structure, sample.X), rtol=1e-12)
    # a one-bin activation file does not match the model's three input channels
    one = tmp_path / "one.act"
    one.write_text("T=1\n0 1\n1 1\n2 1\n3 1\n")
    code, _, err = run(capsys, "ssn-forward", "--edges", str(edges), "--activations", str(one), "--checkpoint", str(ckpt))
    assert code == 2 and "input channels" in err


def test_gen_and_train_commands(capsys, tmp_path):
    out_dir = tmp_path / "data"
    code, out, _ = run(capsys, "gen", "--out", str(out_dir), "--samples", "3", "--seed", "2")
    assert code == 0 and len(rows(out)) == 6
    assert len(list(out_dir.glob("*.edges"))) == 6 and (out_dir / "labels.csv").exists()
    metrics, ckpt = tmp_path / "m.csv", tmp_path / "m.ckpt"
    code, out, _ = run(capsys, "train", "--samples", "6", "--epochs", "2", "--metrics", str(metrics), "--checkpoint", str(ckpt))
    assert code == 0
    assert [r["model"] for r in rows(out)] == ["directed", "symmetric"]
    assert metrics.read_text().startswith("epoch,split,loss,accuracy\n")
    assert ckpt.read_text().startswith("# ssx-checkpoint v1\n")


def test_bench_command(capsys):
    code, out, err = run(capsys, "bench", "--N", "64", "--edge-counts", "128", "256", "--reps", "5")
    assert code == 0 and len(rows(out)) == 2 and "edge exponent" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["lift", "--edges", "/nonexistent/file"],
        ["wl-test", "--family", "D", "--pair", "nope"],
        ["wl-test", "--family", "D", "--pair", "a", "b", "c"],
        ["fixtures", "--name", "nope"],
        ["fixtures", "--threads", "0"],
        ["fixtures", "--threads", "two"],
        ["gen", "--out", "x", "--bias", "1.5", "0.1"],
        ["invariants", "--edges", "x"],
        ["frobnicate"],
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 2


def test_threads_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("SSX_THREADS", "4")
    assert run(capsys, "fixtures")[0] == 0
    monkeypatch.setenv("SSX_THREADS", "-1")
    code, _, err = run(capsys, "fixtures")
    assert code == 2 and "thread" in err


# -- synthetic task, linear probe, bench ------------------------------------------------


def test_synthetic_is_deterministic_and_shares_the_skeleton():
    spec = SyntheticTaskSpec(seed=3, samples_per_class=10)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert [s.graph.graph.edge_set for s in a] == [s.graph.graph.edge_set for s in b]
    assert all(np.array_equal(x.graph.activations, y.graph.activations) for x, y in zip(a, b))
    skeletons = {frozenset((min(u, v), max(u, v)) for u, v in s.graph.graph.edge_set) for s in a}
    assert len(skeletons) == 1
    assert [s.label for s in a] == [0] * 10 + [1] * 10


def test_synthetic_validation():
    with pytest.raises(ValidationError):
        SyntheticTaskSpec(seed=0, motif_bias=(0.5,))
    with pytest.raises(ValidationError):
        SyntheticTaskSpec(seed=0, activity=2.0)
    with pytest.raises(ValidationError):
        generate_synthetic(SyntheticTaskSpec(seed=0, vertices=4, triangles=5))


def test_leakage_check_separates_symmetric_from_directed_features():
    deg_acc, td_acc = leakage_check(SyntheticTaskSpec(seed=0))
    assert deg_acc <= 0.65
    assert td_acc >= 0.85


def test_directed_samples_carry_activation_features():
    data = generate_synthetic(SyntheticTaskSpec(seed=1, samples_per_class=2))
    samples = to_directed_samples(data)
    dac = lift_dac(data[0].graph, 2)
    assert samples[0].X.shape == (dac.complex.num_simplices, 3)
    assert np.array_equal(samples[0].X[:, :2], dac.matrix)


def test_linear_classifier():
    rng = make_rng(0)
    X = rng.standard_normal((200, 3))
    y = (X[:, 0] + 0.5 * X[:, 2] > 0).astype(int)
    clf = LinearClassifier().fit(X, y)
    assert clf.accuracy(X, y) >= 0.97
    const = LinearClassifier().fit(np.ones((4, 2)), np.array([0, 1, 1, 1]))
    assert const.predict(np.ones((1, 2))).tolist() == [1]
    with pytest.raises(ValidationError):
        LinearClassifier().predict(X)
    with pytest.raises(ValidationError):
        LinearClassifier().fit(np.zeros((0, 2)), np.zeros(0, int))


def test_small_bench_and_random_structure():
    s = random_structure(16, 40, 0)
    assert s.relation("rand").pairs.shape == (40, 2)
    rep = bench([64, 128], N=32, reps=5)
    assert len(rep.runs) == 2 and len(rep.ratios()) == 1
    with pytest.raises(ValueError):
        bench([64], N=32, reps=2)
