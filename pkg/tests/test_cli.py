import json

import pytest

from attndecode.cli import RunConfig, CliError, main


def run(argv):
    return main(argv)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full pipeline run on a tiny dataset, shared across tests."""
    root = tmp_path_factory.mktemp("pipeline")
    args = dict(ds=root / "ds", pre=root / "pre", feats=root / "feats",
                studies=root / "studies", report=root / "report")
    assert run([
        "synth", "--out", str(args["ds"]), "--seed", "1", "--snr", "easy",
        "--blocks", "2", "--trials-per-block", "8",
    ]) == 0
    assert run(["preprocess", "--data", str(args["ds"]), "--out", str(args["pre"])]) == 0
    assert run(["features", "--data", str(args["pre"]), "--out", str(args["feats"])]) == 0
    assert run([
        "tune", "--data", str(args["feats"]), "--out", str(args["studies"]),
        "--model", "both", "--trials", "2", "--seed", "1",
    ]) == 0
    assert run([
        "evaluate", "--data", str(args["feats"]), "--studies", str(args["studies"]),
        "--out", str(args["report"]), "--model", "both", "--seed", "1",
    ]) == 0
    return args


def test_pipeline_artifacts_exist(pipeline):
    assert (pipeline["ds"] / "meta.json").is_file()
    assert (pipeline["ds"] / "recording.csv").is_file()
    assert (pipeline["feats"] / "features.csv").is_file()
    assert (pipeline["feats"] / "erp_epochs.csv").is_file()
    assert (pipeline["feats"] / "tf_class_means.csv").is_file()
    assert (pipeline["studies"] / "study_svm.jsonl").is_file()
    assert (pipeline["studies"] / "study_rf.jsonl").is_file()
    for name in ("results.json", "table.md", "roc.svg", "erp.svg", "tf_heatmap.svg",
                 "model_svm.json", "model_rf.json"):
        assert (pipeline["report"] / name).is_file(), name


def test_results_json_is_valid(pipeline):
    from attndecode.report import validate_results

    doc = json.loads((pipeline["report"] / "results.json").read_text())
    validate_results(doc)
    assert set(doc["models"]) == {"svm", "rf"}
    assert doc["seed"] == 1


def test_report_svgs_are_wellformed_xml(pipeline):
    import xml.etree.ElementTree as ET

    for name in ("roc.svg", "erp.svg", "tf_heatmap.svg"):
        ET.fromstring((pipeline["report"] / name).read_text())


def test_same_seed_reruns_byte_identical(pipeline, tmp_path):
    assert run([
        "synth", "--out", str(tmp_path / "ds2"), "--seed", "1", "--snr", "easy",
        "--blocks", "2", "--trials-per-block", "8",
    ]) == 0
    assert (tmp_path / "ds2" / "recording.csv").read_bytes() == (
        pipeline["ds"] / "recording.csv"
    ).read_bytes()

    assert run(["preprocess", "--data", str(tmp_path / "ds2"), "--out", str(tmp_path / "pre2")]) == 0
    assert run(["features", "--data", str(tmp_path / "pre2"), "--out", str(tmp_path / "f2")]) == 0
    assert run([
        "tune", "--data", str(tmp_path / "f2"), "--out", str(tmp_path / "s2"),
        "--model", "both", "--trials", "2", "--seed", "1",
    ]) == 0
    assert run([
        "evaluate", "--data", str(tmp_path / "f2"), "--studies", str(tmp_path / "s2"),
        "--out", str(tmp_path / "r2"), "--model", "both", "--seed", "1",
    ]) == 0
    assert (tmp_path / "r2" / "results.json").read_bytes() == (
        pipeline["report"] / "results.json"
    ).read_bytes()


def test_tune_resume_skips_completed_trials(pipeline, capsys):
    # same journal, same budget: loads existing trials, adds none
    before = (pipeline["studies"] / "study_svm.jsonl").read_text()
    assert run([
        "tune", "--data", str(pipeline["feats"]), "--out", str(pipeline["studies"]),
        "--model", "svm", "--trials", "2", "--seed", "1",
    ]) == 0
    after = (pipeline["studies"] / "study_svm.jsonl").read_text()
    assert before == after


def test_evaluate_without_features_fails_with_named_artifact(tmp_path, capsys):
    code = run([
        "evaluate", "--data", str(tmp_path / "nowhere"), "--studies", str(tmp_path),
        "--out", str(tmp_path / "rep"),
    ])
    captured = capsys.readouterr()
    assert code == 1
    assert "error: evaluate:" in captured.err
    assert "missing artifact" in captured.err
    assert "features.csv" in captured.err
    assert "\n" not in captured.err.strip()


def test_preprocess_missing_dataset_fails(tmp_path, capsys):
    code = run(["preprocess", "--data", str(tmp_path / "none"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error: preprocess:" in capsys.readouterr().err


def test_synth_invalid_flags_fail(tmp_path, capsys):
    code = run(["synth", "--out", str(tmp_path / "x"), "--blocks", "3"])
    assert code == 1
    assert "error: synth:" in capsys.readouterr().err


def test_runconfig_roundtrip():
    cfg = RunConfig(model="svm", trials=7, seed=3, mad_k=4.5, smooth_k=9)
    text = cfg.to_json()
    again = RunConfig.from_json(text)
    assert again == cfg
    assert again.to_json() == text


def test_runconfig_validation():
    with pytest.raises(CliError):
        RunConfig(model="boost")
    with pytest.raises(CliError):
        RunConfig(smooth_k=4)
    with pytest.raises(CliError):
        RunConfig(filter_order=0)
    with pytest.raises(CliError):
        RunConfig(band_lo=5.0, band_hi=1.0)


def test_paths_resolvable_from_config(tmp_path, capsys):
    cfg = RunConfig(out=str(tmp_path / "ds"), seed=2)
    (tmp_path / "cfg.json").write_text(cfg.to_json())
    assert run([
        "synth", "--config", str(tmp_path / "cfg.json"),
        "--blocks", "2", "--trials-per-block", "8",
    ]) == 0
    assert (tmp_path / "ds" / "meta.json").is_file()

    code = run(["preprocess", "--out", str(tmp_path / "pre")])
    assert code == 1
    assert "missing --data" in capsys.readouterr().err


def test_config_file_threads_through(tmp_path, capsys):
    cfg = RunConfig(trials=2, seed=9)
    (tmp_path / "cfg.json").write_text(cfg.to_json())
    code = run([
        "synth", "--out", str(tmp_path / "ds"), "--config", str(tmp_path / "cfg.json"),
        "--blocks", "2", "--trials-per-block", "8",
    ])
    assert code == 0
    meta = json.loads((tmp_path / "ds" / "meta.json").read_text())
    assert meta["seed"] == 9  # config seed used when flag absent
