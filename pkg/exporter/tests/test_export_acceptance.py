"""Exporter acceptance: round trip through the primary package's interfaces."""

from embexport import ExportSpec, export_embeddings

from dircollapse import class_stats, load_embeddings, validate_dataset

from _imagefactory import make_class_tree


def test_criterion_10_exporter_round_trip(tmp_path):
    spec_kw = dict(model="resnet18", batch_size=4, image_size=64, seed=0)

    # exported file passes primary validation with zero violations
    tree = make_class_tree(tmp_path / "imgs")
    out = tmp_path / "feat.emb1"
    export_embeddings(ExportSpec(data_dir=str(tree), out=str(out), **spec_kw))
    report = validate_dataset(load_embeddings(out))
    valid_ok = report.ok and not report.violations

    # duplicated constant images collapse to zero within-class variance
    const_tree = make_class_tree(tmp_path / "const", constant=True)
    const_out = tmp_path / "const.emb1"
    export_embeddings(ExportSpec(data_dir=str(const_tree), out=str(const_out), **spec_kw))
    const_ds = load_embeddings(const_out)
    variance_ok = all(class_stats(const_ds, "class", c).v < 1e-6 for c in (0, 1))

    # rerun with the same spec is bit-identical
    rerun = tmp_path / "rerun.emb1"
    export_embeddings(ExportSpec(data_dir=str(tree), out=str(rerun), **spec_kw))
    rerun_ok = out.read_bytes() == rerun.read_bytes()

    ok = valid_ok and variance_ok and rerun_ok
    print(f"criterion 10 (exporter round trip): {'PASS' if ok else 'FAIL'}")
    assert ok
