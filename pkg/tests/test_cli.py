import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sgmorph.cli import PipelineConfig, main
from sgmorph.features import FEATURE_NAMES
from sgmorph.synth import KINDS, synth_graph
from sgmorph.tables import read_features, read_matrix, read_table


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    graphs = root / "graphs"
    for kind in ("grid", "organic", "hybrid"):
        assert run("synth", "--kind", kind, "--count", 8, "--seed", 5, "--out", graphs / kind) == 0
    out = root / "features"
    assert run("extract", "--input", graphs, "--format", "json", "--out", out) == 0
    return root, graphs, out / "features.csv"


# -- config -----------------------------------------------------------------------

def test_config_round_trip():
    cfg = PipelineConfig(input=["a", "b"], seed=3, max_depth=5, train_frac=0.6)
    assert PipelineConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("patch", [{"bins": 0}, {"format": "xml"}, {"train_frac": 1.0},
                                   {"trees": -1}, {"max_depth": 0}])
def test_config_validation(patch):
    from sgmorph.cli import DataError

    with pytest.raises(DataError):
        PipelineConfig(**patch).validate()


def test_config_file_and_flag_override(dataset, tmp_path):
    _, _, features = dataset
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k": 3, "seed": 9, "iterations": 300}))
    assert run("cluster", "--input", features, "--config", cfg, "--seed", 2, "--out", tmp_path) == 0
    meta, _, _ = read_table(tmp_path / "clusters.csv")
    assert meta["seed"] == 2 and meta["params"]["iterations"] == 300


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"colour": 1}')
    assert run("synth", "--config", cfg, "--out", tmp_path) == 1


# -- synth ------------------------------------------------------------------------

def test_synth_count_and_determinism(tmp_path):
    assert run("synth", "--kind", "tree3d", "--count", 5, "--seed", 1, "--out", tmp_path / "a") == 0
    assert run("synth", "--kind", "tree3d", "--count", 5, "--seed", 1, "--out", tmp_path / "b") == 0
    a = sorted((tmp_path / "a").iterdir())
    assert len(a) == 5
    for f in a:
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_synth_unknown_kind(tmp_path):
    assert run("synth", "--kind", "spiral", "--out", tmp_path) == 1


def test_grid_less_circuitous_than_organic():
    from sgmorph.features import circuity

    grid = np.mean([circuity(synth_graph("grid", 0, i)) for i in range(50)])
    organic = np.mean([circuity(synth_graph("organic", 0, i)) for i in range(50)])
    assert grid < organic
    assert set(KINDS) == {"grid", "organic", "hybrid", "tree3d"}


# -- extract ----------------------------------------------------------------------

def test_extract_rows_and_labels(dataset):
    _, _, features = dataset
    m = read_features(features)
    assert m.values.shape == (24, len(FEATURE_NAMES))
    assert sorted(set(m.labels)) == ["grid", "hybrid", "organic"]
    meta = json.loads((features.parent / "metadata.json").read_text())
    assert meta["failures"] == [] and len(meta["graphs"]) == 24


def test_extract_is_byte_identical(dataset, tmp_path):
    _, graphs, features = dataset
    assert run("extract", "--input", graphs, "--format", "json", "--out", tmp_path) == 0
    assert (tmp_path / "features.csv").read_bytes() == features.read_bytes()


def test_extract_mixed_valid_invalid(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for i in range(3):
        (src / f"g{i}.json").write_text(
            json.dumps({"dim": 2, "id": f"g{i}", "nodes": [[0, 0], [1, 0], [0, 1 + i]],
                        "edges": [{"u": 0, "v": 1, "polyline": [[0, 0], [1, 0]]},
                                  {"u": 0, "v": 2, "polyline": [[0, 0], [0, 1 + i]]}]}))
    (src / "bad.json").write_text('{"dim": 2}')
    assert run("extract", "--input", src, "--format", "json", "--out", tmp_path / "o") == 0
    _, _, rows = read_table(tmp_path / "o" / "features.csv")
    assert len(rows) == 3
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert len(meta["failures"]) == 1 and "bad.json" in meta["failures"][0]["file"]


def test_extract_exit_codes(tmp_path):
    assert run("extract", "--input", tmp_path / "missing", "--out", tmp_path) == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "bad.json").write_text("nope")
    assert run("extract", "--input", empty, "--format", "json", "--out", tmp_path / "o") == 1


def test_extract_swc(tmp_path):
    src = tmp_path / "swc"
    src.mkdir()
    (src / "n.swc").write_text("1 1 0 0 0 1 -1\n2 3 1 0 0 1 1\n3 3 2 1 0 1 2\n4 3 2 -1 1 1 2\n"
                               "5 2 -1 0 0 1 1\n")
    assert run("extract", "--input", src, "--format", "swc", "--out", tmp_path / "o") == 0
    m = read_features(tmp_path / "o" / "features.csv")
    assert m.ids == ("n",)


# -- compare ----------------------------------------------------------------------

def test_compare_outputs(dataset, tmp_path):
    _, _, features = dataset
    assert run("compare", "--input", features, "--out", tmp_path) == 0
    names, md = read_matrix(tmp_path / "md_matrix.csv")
    assert names == ["grid", "hybrid", "organic"]
    assert np.allclose(md, md.T) and md.max() == 1.0 and np.all(np.diag(md) == 0)
    for name in FEATURE_NAMES:
        assert (tmp_path / "w1_per_feature" / f"{name}.csv").exists()
    snames, R = read_matrix(tmp_path / "spearman.csv")
    assert snames == list(FEATURE_NAMES) and np.allclose(R, R.T)
    assert (tmp_path / "md_heatmap.svg").read_text().startswith("<svg")
    meta, _, _ = read_table(tmp_path / "md_matrix.csv")
    assert meta["params"]["bins"] == 20


def test_compare_identical_groups(dataset, tmp_path):
    _, _, features = dataset
    meta, header, rows = read_table(features)
    rows = [r for r in rows if r[1] == "grid"]
    dup = [[r[0] + "_copy", "twin", *r[2:]] for r in rows]
    from sgmorph.tables import write_table

    write_table(tmp_path / "f.csv", header, rows + dup, meta)
    assert run("compare", "--input", tmp_path / "f.csv", "--out", tmp_path) == 0
    _, md = read_matrix(tmp_path / "md_matrix_raw.csv")
    assert md[0, 1] == 0.0


def test_compare_single_group(dataset, tmp_path):
    _, _, features = dataset
    meta, header, rows = read_table(features)
    from sgmorph.tables import write_table

    write_table(tmp_path / "f.csv", header, [r for r in rows if r[1] == "grid"], meta)
    assert run("compare", "--input", tmp_path / "f.csv", "--out", tmp_path) == 1


# -- cluster ----------------------------------------------------------------------

def test_cluster_outputs_and_determinism(dataset, tmp_path):
    _, _, features = dataset
    for sub in ("a", "b"):
        assert run("cluster", "--input", features, "--k", 3, "--seed", 4, "--out",
                   tmp_path / sub) == 0
    for name in ("embedding.csv", "clusters.csv", "scatter.svg", "ari.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ari = json.loads((tmp_path / "a" / "ari.json").read_text())
    assert -1 <= ari["ari"] <= 1 and ari["k"] == 3


def test_cluster_without_truth_has_no_ari(dataset, tmp_path):
    _, _, features = dataset
    meta, header, rows = read_table(features)
    from sgmorph.tables import write_table

    write_table(tmp_path / "f.csv", header, [[r[0], "", *r[2:]] for r in rows], meta)
    assert run("cluster", "--input", tmp_path / "f.csv", "--k", 2, "--out", tmp_path / "o") == 0
    assert (tmp_path / "o" / "clusters.csv").exists()
    assert not (tmp_path / "o" / "ari.json").exists()


def test_cluster_k_too_large(dataset, tmp_path):
    _, _, features = dataset
    assert run("cluster", "--input", features, "--k", 99, "--out", tmp_path) == 1


def test_cluster_blobs_recovered(tmp_path):
    from sgmorph.features import FeatureVector
    from sgmorph.tables import write_features

    rng = np.random.default_rng(0)
    centres = np.eye(len(FEATURE_NAMES))[:3] / np.sqrt(2)
    fvs, labels = [], []
    for c in range(3):
        for i in range(20):
            v = centres[c] + 0.01 * rng.standard_normal(len(FEATURE_NAMES))
            fvs.append(FeatureVector(v, f"b{c}_{i}"))
            labels.append(f"blob{c}")
    write_features(tmp_path / "f.csv", fvs, labels)
    assert run("cluster", "--input", tmp_path / "f.csv", "--k", 3, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "ari.json").read_text())["ari"] >= 0.9


# -- classify ---------------------------------------------------------------------

def test_classify_report(dataset, tmp_path):
    _, _, features = dataset
    assert run("classify", "--input", features, "--trees", 15, "--runs", 3, "--seed", 1,
               "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())["report"]
    assert rep["seeds"] == [1, 2, 3]
    for c in ("grid", "hybrid", "organic"):
        assert set(rep["classes"][c]) == {"sensitivity", "precision", "f1", "accuracy"}
    _, header, rows = read_table(tmp_path / "importances.csv")
    assert header == ["rank", "feature", "mean", "std"] and len(rows) == len(FEATURE_NAMES)


def test_classify_labels_file(dataset, tmp_path):
    _, _, features = dataset
    _, _, rows = read_table(features)
    labels = tmp_path / "labels.csv"
    labels.write_text("id,label\n" + "".join(f"{r[0]},{'x' if i % 2 else 'y'}\n"
                                             for i, r in enumerate(rows)))
    assert run("classify", "--input", features, "--labels", labels, "--trees", 5, "--runs", 1,
               "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())["report"]
    assert sorted(rep["classes"]) == ["x", "y"]


def test_classify_too_few_samples(dataset, tmp_path):
    _, _, features = dataset
    meta, header, rows = read_table(features)
    from sgmorph.tables import write_table

    keep = [r for r in rows if r[1] == "grid"] + [r for r in rows if r[1] == "organic"][:2]
    write_table(tmp_path / "f.csv", header, keep, meta)
    assert run("classify", "--input", tmp_path / "f.csv", "--out", tmp_path) == 1


# -- gw ---------------------------------------------------------------------------

def test_gw_duplicates_and_cluster(tmp_path):
    src = tmp_path / "g"
    assert run("synth", "--kind", "hybrid", "--count", 3, "--seed", 2, "--out", src) == 0
    dup = tmp_path / "dup"
    dup.mkdir()
    for f in sorted(src.iterdir()):
        (dup / f.name).write_bytes(f.read_bytes())
        (dup / ("z" + f.name)).write_bytes(f.read_bytes())
    assert run("gw", "--input", dup, "--format", "json", "--out", tmp_path / "o", "--cluster",
               "--k", 2, "--iterations", 300) == 0
    ids, M = read_matrix(tmp_path / "o" / "gw_matrix.csv")
    assert len(ids) == 6 and np.allclose(M, M.T) and np.all(np.diag(M) == 0)
    twins = [(i, j) for i in range(6) for j in range(6) if i != j and ids[i] == ids[j]]
    assert len(twins) == 6
    assert all(M[i, j] <= 1e-3 for i, j in twins)
    assert (tmp_path / "o" / "embedding.csv").exists()


def test_gw_needs_two(tmp_path):
    src = tmp_path / "g"
    assert run("synth", "--kind", "grid", "--count", 1, "--out", src) == 0
    assert run("gw", "--input", src, "--format", "json", "--out", tmp_path / "o") == 1


# -- entry point ------------------------------------------------------------------

def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "sgmorph", "synth", "--kind", "grid", "--count", "1",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert len(list(Path(tmp_path).glob("*.json"))) == 1
