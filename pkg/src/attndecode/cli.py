"""Command-line pipeline: synth -> preprocess -> features -> tune -> evaluate.

Each stage reads the previous stage's artifact and writes its own:
dataset dir -> preprocessed dataset dir -> features dir (features.csv,
erp_epochs.csv, tf_class_means.csv, features_meta.json) -> study JSONL ->
report dir. --seed threads through every stage; identical seeds give
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import dataset, dsp, evaluate, features, report, synth, tune
from .recording import DEFAULT_BANDS, BandDefinition, RecordingError
from .wavelets import build_wavelet_bank


class CliError(ValueError):
    pass


@dataclass
class RunConfig:
    """Pipeline constants; JSON round-trips losslessly via to/from_json."""

    data: str | None = None
    out: str | None = None
    model: str = "both"
    trials: int = 50
    seed: int = 0
    filter_order: int = dsp.DEFAULT_FILTER_ORDER
    band_lo: float = dsp.DEFAULT_BAND[0]
    band_hi: float = dsp.DEFAULT_BAND[1]
    mad_k: float = dsp.DEFAULT_MAD_K
    smooth_k: int = dsp.DEFAULT_SMOOTH_K
    bands: list = field(
        default_factory=lambda: [[b.name, b.lo, b.hi] for b in DEFAULT_BANDS]
    )

    def __post_init__(self):
        if self.model not in ("svm", "rf", "both"):
            raise CliError(f"model must be svm, rf or both, got {self.model!r}")
        if not 1 <= self.filter_order <= 12:
            raise CliError(f"filter_order {self.filter_order} outside [1, 12]")
        if not 0 < self.band_lo < self.band_hi:
            raise CliError(f"bad filter band [{self.band_lo}, {self.band_hi}]")
        if self.mad_k <= 0:
            raise CliError(f"mad_k must be positive, got {self.mad_k}")
        if self.smooth_k < 1 or self.smooth_k % 2 != 1:
            raise CliError(f"smooth_k must be odd and >= 1, got {self.smooth_k}")
        if self.trials < 1:
            raise CliError(f"trials must be >= 1, got {self.trials}")
        self.band_definitions()

    def band_definitions(self) -> tuple[BandDefinition, ...]:
        return tuple(BandDefinition(str(n), float(lo), float(hi)) for n, lo, hi in self.bands)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise CliError(f"missing config file: {path}")
        cfg = RunConfig.from_json(path.read_text(encoding="utf-8"))
    else:
        cfg = RunConfig()
    for name in ("data", "out", "model", "trials", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def _require(cfg: RunConfig, field_name: str) -> str:
    v = getattr(cfg, field_name)
    if not v:
        raise CliError(f"missing --{field_name} (flag or config file)")
    return v


def _model_kinds(model: str) -> list[str]:
    return ["svm", "rf"] if model == "both" else [model]


FEATURES_META = "features_meta.json"


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    rec = synth.synthesize(
        synth.SynthConfig(
            n_blocks=args.blocks,
            trials_per_block=args.trials_per_block,
            snr_preset=args.snr,
            seed=cfg.seed,
            subject_id=args.subject,
        )
    )
    out = _require(cfg, "out")
    dataset.write_recording(rec, out)
    print(f"wrote dataset: {out}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    rec = dataset.load_recording(_require(cfg, "data"))
    out = dsp.preprocess(
        rec,
        filter_order=cfg.filter_order,
        band=(cfg.band_lo, cfg.band_hi),
        mad_k=cfg.mad_k,
        smooth_k=cfg.smooth_k,
    )
    out_dir = _require(cfg, "out")
    dataset.write_recording(out, out_dir)
    print(f"wrote preprocessed dataset: {out_dir}")
    return 0


def cmd_features(args) -> int:
    cfg = _load_config(args)
    rec = dataset.load_recording(_require(cfg, "data"))
    if not rec.extra.get("preprocessed"):
        print(
            "warning: input does not look preprocessed (no 'preprocessed' flag)",
            file=sys.stderr,
        )
    bank = build_wavelet_bank(fs=rec.fs)
    out = _require(cfg, "out")
    fm, maps = features.extract_features(rec, bank, bands=cfg.band_definitions())
    features.write_feature_matrix(fm, out)
    features.write_tf_class_maps(maps, bank.freqs, out)
    meta = {"subject_id": rec.subject_id, "fs": rec.fs, "n_trials": fm.n_trials}
    (Path(out) / FEATURES_META).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote features: {out} ({fm.n_trials} x {fm.values.shape[1]})")
    return 0


def _read_features_meta(data_dir) -> dict:
    p = Path(data_dir) / FEATURES_META
    if p.is_file():
        return json.loads(p.read_text(encoding="utf-8"))
    return {"subject_id": "unknown"}


def cmd_tune(args) -> int:
    cfg = _load_config(args)
    data = _require(cfg, "data")
    fm = features.load_feature_matrix(data)
    meta = _read_features_meta(data)
    out = Path(_require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    for kind in _model_kinds(cfg.model):
        journal = out / f"study_{kind}.jsonl"
        study = tune.run_study(
            fm,
            kind,
            n_trials=cfg.trials,
            seed=cfg.seed,
            subject_id=meta.get("subject_id"),
            journal=journal,
        )
        best = study.best_trial
        print(
            f"{kind}: best CV accuracy {best.value:.3f} with "
            f"{report.format_params(best.params)} ({journal})"
        )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    data = _require(cfg, "data")
    fm = features.load_feature_matrix(data)
    meta = _read_features_meta(data)
    tf_maps, tf_freqs = features.load_tf_class_maps(data)
    studies_dir = Path(args.studies)
    out = Path(_require(cfg, "out"))

    studies: dict[str, tune.Study] = {}
    evals: dict[str, evaluate.EvalReport] = {}
    out.mkdir(parents=True, exist_ok=True)
    for kind in _model_kinds(cfg.model):
        journal = studies_dir / f"study_{kind}.jsonl"
        if not journal.is_file():
            raise CliError(f"missing artifact: {journal}")
        study = tune.load_study(journal, tune.space_for(kind))
        if study.best_trial is None:
            raise CliError(f"{journal}: study has no completed trials")
        studies[kind] = study
        spec = evaluate.ModelSpec(kind, study.best_trial.params)
        evals[kind] = evaluate.cross_validate(fm, spec, seed=cfg.seed)
        model = evaluate.train_full_model(fm, spec, seed=cfg.seed)
        evaluate.save_model(model, out / f"model_{kind}.json")

    erp_means = report.erp_class_means(fm.erp.data, fm.labels, features.CHANNELS)
    paths = report.render_report(
        out,
        subject_id=str(meta.get("subject_id", "unknown")),
        seed=cfg.seed,
        evals=evals,
        studies=studies,
        erp_means=erp_means,
        tf_maps=tf_maps,
        tf_freqs=tf_freqs,
    )
    for kind, rep in sorted(evals.items()):
        print(f"{kind}: mean accuracy {rep.mean_accuracy:.3f}, AUC {rep.auc:.3f}")
    print(f"wrote report: {paths['results']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attndecode",
        description="Offline EEG sustained-attention decoding pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, out=True):
        if data:
            p.add_argument("--data", default=None, help="input artifact path")
        if out:
            p.add_argument("--out", default=None, help="output artifact path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="RunConfig JSON file")
        p.add_argument("--model", choices=("svm", "rf", "both"), default=None)
        p.add_argument("--trials", type=int, default=None, help="tuning budget")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--snr", choices=synth.SNR_PRESETS, default="easy")
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--trials-per-block", type=int, default=40)
    p.add_argument("--subject", default="synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="run the preprocessing chain")
    common(p, data=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="extract the 640-column feature matrix")
    common(p, data=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("tune", help="TPE hyperparameter search")
    common(p, data=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="cross-validate best params and report")
    common(p, data=True)
    p.add_argument("--studies", required=True, help="directory with study journals")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # single-line, machine-parsable stage errors
        if isinstance(e, (RecordingError, ValueError, OSError, RuntimeError)):
            msg = str(e).replace("\n", " ")
            print(f"error: {args.command}: {msg}", file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
