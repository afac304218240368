import json

import numpy as np
import pytest

from embexport import ExportError, ExportSpec, export_embeddings
from embexport.cli import main as embexport_main

# the exporter is validated through the primary package's external interfaces
from dircollapse import class_stats, load_embeddings, validate_dataset
from dircollapse.cli import main as dircollapse_main

from _imagefactory import make_class_tree, noise_image


def small_spec(data_dir, out, **kw):
    defaults = dict(
        model="resnet18", data_dir=str(data_dir), out=str(out),
        batch_size=4, image_size=64, seed=0,
    )
    defaults.update(kw)
    return ExportSpec(**defaults)


@pytest.fixture
def tree(tmp_path):
    return make_class_tree(tmp_path / "imgs")


def test_count_contract(tree, tmp_path):
    out = tmp_path / "feat.emb1"
    result = export_embeddings(small_spec(tree, out))
    assert result.n == 10
    ds = load_embeddings(out)
    assert ds.n == 10
    assert ds.d == 512  # resnet18 pooled width
    assert ds.labelings[0].name == "class"
    assert ds.labelings[0].num_classes == 2
    np.testing.assert_array_equal(ds.labelings[0].labels, [0] * 5 + [1] * 5)


def test_passes_primary_validation(tree, tmp_path):
    out = tmp_path / "feat.emb1"
    export_embeddings(small_spec(tree, out))
    report = validate_dataset(load_embeddings(out))
    assert report.ok and not report.violations


def test_primary_cli_consumes_output(tree, tmp_path):
    out = tmp_path / "feat.emb1"
    export_embeddings(small_spec(tree, out))
    assert dircollapse_main(["stats", "--input", str(out), "--labeling", "class",
                             "--out-csv", str(tmp_path / "stats.csv")]) == 0


def test_rerun_bit_identical(tree, tmp_path):
    payloads = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.emb1"
        export_embeddings(small_spec(tree, out))
        payloads.append(out.read_bytes())
    assert payloads[0] == payloads[1]


def test_row_order_sorted(tree, tmp_path):
    out = tmp_path / "feat.emb1"
    export_embeddings(small_spec(tree, out))
    sidecar = json.loads((tmp_path / "feat.emb1.export.json").read_text())
    assert sidecar["row_order"] == sorted(sidecar["row_order"])
    assert sidecar["dim"] == 512
    assert sidecar["weights"] == "seeded random init"


def test_constant_duplicates_have_zero_variance(tmp_path):
    tree = make_class_tree(tmp_path / "imgs", constant=True)
    out = tmp_path / "feat.emb1"
    export_embeddings(small_spec(tree, out))
    ds = load_embeddings(out)
    for c in (0, 1):
        assert class_stats(ds, "class", c).v < 1e-6


def test_unreadable_image_skipped(tree, tmp_path):
    (tree / "cats" / "broken.png").write_bytes(b"not an image at all")
    out = tmp_path / "feat.emb1"
    with pytest.warns(UserWarning, match="broken.png"):
        result = export_embeddings(small_spec(tree, out))
    assert result.n == 10
    assert result.skipped == ("cats/broken.png",)
    sidecar = json.loads((tmp_path / "feat.emb1.export.json").read_text())
    assert sidecar["skipped"] == ["cats/broken.png"]
    assert validate_dataset(load_embeddings(out)).ok


def test_manifest_adds_labeling(tree, tmp_path):
    sidecar_rows = ["path,label"]
    rng = np.random.default_rng(1)
    for name in sorted(p.relative_to(tree).as_posix()
                       for p in tree.rglob("*.png")):
        sidecar_rows.append(f"{name},{'big' if rng.random() < 0.5 else 'small'}")
    manifest = tmp_path / "size.csv"
    manifest.write_text("\n".join(sidecar_rows) + "\n")
    out = tmp_path / "feat.emb1"
    export_embeddings(small_spec(tree, out, manifests=(str(manifest),)))
    ds = load_embeddings(out)
    assert [lab.name for lab in ds.labelings] == ["class", "size"]


def test_manifest_missing_image_rejected(tree, tmp_path):
    manifest = tmp_path / "partial.csv"
    manifest.write_text("path,label\ncats/img_0.png,x\n")
    with pytest.raises(ExportError, match="missing"):
        export_embeddings(small_spec(tree, tmp_path / "o.emb1",
                                     manifests=(str(manifest),)))


def test_flat_dir_requires_manifest(tmp_path):
    flat = tmp_path / "flat"
    flat.mkdir()
    rng = np.random.default_rng(0)
    for k in range(4):
        noise_image(rng).save(flat / f"{k}.png")
    with pytest.raises(ExportError, match="no labels"):
        export_embeddings(small_spec(flat, tmp_path / "o.emb1"))


def test_spec_validation(tree, tmp_path):
    with pytest.raises(ExportError, match="unknown model"):
        ExportSpec(model="mystnet", data_dir=str(tree), out="o.emb1")
    with pytest.raises(ExportError, match="layer"):
        ExportSpec(model="resnet18", data_dir=str(tree), out="o.emb1", layer="conv3")
    with pytest.raises(ExportError, match="does not exist"):
        export_embeddings(small_spec(tmp_path / "nope", tmp_path / "o.emb1"))


def test_cli_roundtrip(tree, tmp_path, capsys):
    out = tmp_path / "cli.emb1"
    code = embexport_main([
        "export", "--model", "resnet18", "--data-dir", str(tree),
        "--out", str(out), "--batch-size", "4", "--image-size", "64",
    ])
    assert code == 0
    assert "n=10 d=512" in capsys.readouterr().out
    assert load_embeddings(out).n == 10


def test_cli_unknown_model_exit_2(tree, tmp_path, capsys):
    code = embexport_main([
        "export", "--model", "mystnet", "--data-dir", str(tree),
        "--out", str(tmp_path / "o.emb1"),
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err
