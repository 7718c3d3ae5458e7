"""Command-line pipeline: validate inputs, run the analysis, make synth data.

Exit codes: 0 success, 1 validation/user error, 2 internal or convergence
error. All randomness flows from the single --seed through per-emotion
sub-seeds (a stable hash of seed and emotion name), so adding an emotion to
a run never perturbs another emotion's results.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from emprobe import __version__, dataio, synth
from emprobe.attrib import fit_full_and_attribute, minimal_subset_search, rank_features
from emprobe.crossval import nested_cv_classify
from emprobe.errors import ConvergenceError, EmprobeError, SingularSystemError, ValidationError
from emprobe.probe import (CATEGORIES, aggregate_by_category, category_shap_profile,
                           load_category_map, run_probe_suite)
from emprobe.reporting import write_csv, write_json
from emprobe.util import stable_seed

logger = logging.getLogger(__name__)

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_ALPHA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_K_OUTER = 5
DEFAULT_K_INNER = 5
DEFAULT_SUBSET_STEP = 10


@dataclass
class RunConfig:
    """Everything a `run` needs; mirrored one-to-one by the CLI flags."""

    embeddings_path: Path
    acoustic_path: Path
    category_map_path: Path
    emotions: tuple[str, ...]
    output_dir: Path
    neutral_label: str = dataio.DEFAULT_NEUTRAL_LABEL
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    k_outer: int = DEFAULT_K_OUTER
    subset_step: int = DEFAULT_SUBSET_STEP
    subset_cap: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if not self.emotions:
            raise ValidationError("at least one emotion is required")
        if len(set(self.emotions)) != len(self.emotions):
            raise ValidationError("emotions contain duplicates")
        for name, grid in (("c_grid", self.c_grid), ("alpha_grid", self.alpha_grid)):
            if not grid:
                raise ValidationError(f"{name} is empty")
            if any(v <= 0 for v in grid):
                raise ValidationError(f"{name} values must be positive")
        if self.k_outer < 2:
            raise ValidationError("k_outer must be >= 2")
        if self.subset_step < 1:
            raise ValidationError("subset_step must be >= 1")
        if self.subset_cap is not None and self.subset_cap < 1:
            raise ValidationError("subset_cap must be >= 1")

    def echo(self) -> dict:
        return {
            "embeddings_path": str(self.embeddings_path),
            "acoustic_path": str(self.acoustic_path),
            "category_map_path": str(self.category_map_path),
            "emotions": list(self.emotions),
            "output_dir": str(self.output_dir),
            "neutral_label": self.neutral_label,
            "c_grid": [float(v) for v in self.c_grid],
            "alpha_grid": [float(v) for v in self.alpha_grid],
            "k_outer": self.k_outer,
            "k_inner": DEFAULT_K_INNER,
            "subset_step": self.subset_step,
            "subset_cap": self.subset_cap,
            "seed": self.seed,
        }


def collect_issues(embeddings_path, acoustic_path, category_map_path,
                   emotions, neutral_label):
    """Load and cross-check all inputs; returns (issues, emb, ac, cmap)."""
    issues: list[str] = []
    emb = ac = cmap = None
    try:
        emb = dataio.load_feature_table(embeddings_path, "embedding")
    except (ValidationError, OSError) as exc:
        issues.append(f"embeddings table: {exc}")
    try:
        ac = dataio.load_feature_table(acoustic_path, "acoustic")
    except (ValidationError, OSError) as exc:
        issues.append(f"acoustic table: {exc}")
    try:
        cmap = load_category_map(category_map_path)
    except (ValidationError, OSError) as exc:
        issues.append(f"category map: {exc}")

    if emb is not None and ac is not None:
        emb_ids, ac_ids = set(emb.utterance_ids), set(ac.utterance_ids)
        for u in sorted(emb_ids - ac_ids):
            issues.append(f"utterance {u!r} present only in the embeddings table")
        for u in sorted(ac_ids - emb_ids):
            issues.append(f"utterance {u!r} present only in the acoustic table")
        emb_by, ac_by = emb.row_by_id(), ac.row_by_id()
        for u in sorted(emb_ids & ac_ids):
            if emb_by[u].speaker_id != ac_by[u].speaker_id:
                issues.append(f"utterance {u!r}: speaker differs between tables")
            if emb_by[u].emotion_label != ac_by[u].emotion_label:
                issues.append(f"utterance {u!r}: emotion label differs between tables")
    for table, which in ((emb, "embeddings"), (ac, "acoustic")):
        if table is None:
            continue
        labels = set(table.emotion_labels)
        for wanted in list(emotions) + [neutral_label]:
            if wanted not in labels:
                issues.append(f"label {wanted!r} missing from the {which} table")
    if ac is not None and cmap is not None:
        for name in cmap.missing_from(ac.feature_names):
            issues.append(f"acoustic column {name!r} missing from the category map")
    return issues, emb, ac, cmap


@dataclass
class EmotionReport:
    emotion: str
    sub_seed: int
    f1_acoustic: float
    f1_embedding_all: float
    f1_embedding_top: float
    k_star: int
    top_features: tuple[str, ...]
    subset_k_grid: tuple[int, ...]
    subset_f1_curve: tuple[float, ...]
    probe_results: list
    probe_excluded: tuple[str, ...]
    category_aggregates: list
    category_shap_profile: dict
    fold_plan_digest: str
    chosen_c_acoustic: tuple[float, ...]
    chosen_c_embedding: tuple[float, ...]
    attribution_c_embedding: float
    attribution_c_acoustic: float
    cv_notes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "sub_seed": self.sub_seed,
            "f1_acoustic": self.f1_acoustic,
            "f1_embedding_all": self.f1_embedding_all,
            "f1_embedding_top": self.f1_embedding_top,
            "k_star": self.k_star,
            "top_features": list(self.top_features),
            "subset_curve": {"k": list(self.subset_k_grid),
                             "f1": list(self.subset_f1_curve)},
            "probe_results": [
                {"feature_name": r.feature_name, "category": r.category,
                 "rmse_all": r.rmse_all, "rmse_top": r.rmse_top,
                 "info_increase": r.info_increase}
                for r in self.probe_results],
            "probe_excluded": list(self.probe_excluded),
            "category_aggregates": [
                {"category": a.category, "mean_info_increase": a.mean_ii,
                 "median_info_increase": a.median_ii, "count": a.count,
                 "values": list(a.values)}
                for a in self.category_aggregates],
            "category_shap_profile": dict(self.category_shap_profile),
            "fold_plan_digest": self.fold_plan_digest,
            "chosen_c_acoustic": list(self.chosen_c_acoustic),
            "chosen_c_embedding": list(self.chosen_c_embedding),
            "attribution_c_embedding": self.attribution_c_embedding,
            "attribution_c_acoustic": self.attribution_c_acoustic,
            "cv_notes": list(self.cv_notes),
        }


def _emotion_pipeline(config: RunConfig, emb_norm, ac_norm, cmap,
                      emotion: str, stage: list) -> EmotionReport:
    sub_seed = stable_seed(config.seed, emotion)

    stage[0] = "build-tasks"
    task_ac = dataio.make_binary_task(ac_norm, emotion, config.neutral_label)
    task_emb = dataio.make_binary_task(emb_norm, emotion, config.neutral_label)

    stage[0] = "classify-acoustic"
    cv_ac = nested_cv_classify(task_ac, config.c_grid, k_outer=config.k_outer,
                               k_inner=DEFAULT_K_INNER, seed=sub_seed)
    stage[0] = "classify-embedding-all"
    cv_emb = nested_cv_classify(task_emb, config.c_grid, k_outer=config.k_outer,
                                k_inner=DEFAULT_K_INNER, seed=sub_seed)

    stage[0] = "attribute-embedding"
    att_emb = fit_full_and_attribute(task_emb, config.c_grid,
                                     k_folds=config.k_outer, seed=sub_seed)
    ranking = rank_features(att_emb)

    stage[0] = "subset-search"
    subset = minimal_subset_search(task_emb, ranking, step=config.subset_step,
                                   cap=config.subset_cap, c_grid=config.c_grid,
                                   k_outer=config.k_outer, k_inner=DEFAULT_K_INNER,
                                   seed=sub_seed)
    f1_top = subset.curve()[subset.k_star]

    stage[0] = "attribute-acoustic"
    att_ac = fit_full_and_attribute(task_ac, config.c_grid,
                                    k_folds=config.k_outer, seed=sub_seed)
    profile = category_shap_profile(att_ac, cmap)

    stage[0] = "probe"
    suite = run_probe_suite(emb_norm, ac_norm, task_emb.utterance_ids,
                            subset.top_features, cmap, config.alpha_grid,
                            seed=sub_seed, k_outer=config.k_outer,
                            k_inner=DEFAULT_K_INNER)
    digests = {cv_ac.fold_plan_digest, cv_emb.fold_plan_digest,
               suite.fold_plan_digest}
    if len(digests) != 1:
        raise EmprobeError(f"fold plans diverged across stages: {sorted(digests)}")

    stage[0] = "aggregate"
    aggregates = aggregate_by_category(suite.results, cmap)

    return EmotionReport(
        emotion=emotion, sub_seed=sub_seed,
        f1_acoustic=cv_ac.pooled_score,
        f1_embedding_all=cv_emb.pooled_score,
        f1_embedding_top=f1_top,
        k_star=subset.k_star,
        top_features=subset.top_features,
        subset_k_grid=subset.k_grid,
        subset_f1_curve=subset.f1_curve,
        probe_results=list(suite.results),
        probe_excluded=suite.excluded,
        category_aggregates=aggregates,
        category_shap_profile=profile,
        fold_plan_digest=cv_emb.fold_plan_digest,
        chosen_c_acoustic=cv_ac.chosen_hyperparams,
        chosen_c_embedding=cv_emb.chosen_hyperparams,
        attribution_c_embedding=att_emb.chosen_c,
        attribution_c_acoustic=att_ac.chosen_c,
        cv_notes=cv_emb.notes + cv_ac.notes)


def cmd_run(config: RunConfig) -> int:
    config.validate()
    issues, emb, ac, cmap = collect_issues(
        config.embeddings_path, config.acoustic_path, config.category_map_path,
        config.emotions, config.neutral_label)
    if issues:
        for issue in issues:
            print(f"issue: {issue}", file=sys.stderr)
        print(f"{len(issues)} issues; fix the inputs and rerun", file=sys.stderr)
        return 1

    emb_norm = dataio.speaker_normalize(emb)
    ac_norm = dataio.speaker_normalize(ac)

    reports: list[EmotionReport] = []
    failures: list[dict] = []
    for emotion in config.emotions:
        stage = ["start"]
        try:
            reports.append(_emotion_pipeline(config, emb_norm, ac_norm, cmap,
                                             emotion, stage))
        except EmprobeError as exc:
            logger.error("emotion %r failed at stage %s: %s", emotion, stage[0], exc)
            failures.append({"emotion": emotion, "stage": stage[0],
                             "error": str(exc)})

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", {
        "version": __version__,
        "config": config.echo(),
        "emotions": [r.to_dict() for r in reports],
        "failures": failures,
    })
    write_csv(out / "f1_summary.csv",
              ["emotion", "f1_acoustic", "f1_embedding_all",
               "f1_embedding_top", "k_star"],
              [[r.emotion, r.f1_acoustic, r.f1_embedding_all,
                r.f1_embedding_top, r.k_star] for r in reports])
    write_csv(out / "probe_results.csv",
              ["emotion", "feature_name", "category", "rmse_all", "rmse_top",
               "info_increase"],
              [[r.emotion, p.feature_name, p.category, p.rmse_all, p.rmse_top,
                p.info_increase] for r in reports for p in r.probe_results])
    write_csv(out / "category_aggregates.csv",
              ["emotion", "category", "mean_info_increase",
               "median_info_increase", "count", "shap_share"],
              [[r.emotion, a.category, a.mean_ii, a.median_ii, a.count,
                r.category_shap_profile[a.category]]
               for r in reports for a in r.category_aggregates])

    if failures:
        print(f"{len(failures)} emotion(s) failed; see report.json", file=sys.stderr)
        return 2
    print(f"wrote {out / 'report.json'}")
    return 0


def cmd_validate(args) -> int:
    issues, _, _, _ = collect_issues(args.embeddings, args.acoustic,
                                     args.category_map, args.emotions,
                                     args.neutral_label)
    for issue in issues:
        print(f"issue: {issue}")
    print(f"{len(issues)} issues")
    return 0 if not issues else 1


def cmd_synth(args) -> int:
    latents = tuple(synth.LatentSpec(name, kind) for name, kind in args.latents)
    label_latent = args.label_latent
    if label_latent is None:
        informative = [l.name for l in latents if l.informative]
        if not informative:
            raise ValidationError("no informative latent to drive the label; "
                                  "pass --label-latent")
        label_latent = informative[0]
    spec = synth.SynthSpec(
        n_speakers=args.n_speakers,
        utterances_per_speaker=args.utterances_per_speaker,
        embed_dim=args.embed_dim,
        planted_dims=tuple(args.planted_dims),
        latents=latents,
        noise_sigma=args.noise_sigma,
        label_latent=label_latent,
        seed=args.seed)
    emb, ac = synth.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataio.save_feature_table(emb, out / "embeddings.csv")
    dataio.save_feature_table(ac, out / "acoustic.csv")
    rows = [[l.name, CATEGORIES[i % len(CATEGORIES)]]
            for i, l in enumerate(latents)]
    write_csv(out / "category_map.csv", ["feature_name", "category"], rows)
    for name in ("embeddings.csv", "acoustic.csv", "category_map.csv"):
        print(f"wrote {out / name}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")


def _emotion_list(text: str) -> tuple[str, ...]:
    values = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not values:
        raise argparse.ArgumentTypeError("empty emotion list")
    return values


def _dim_list(text: str) -> tuple[int, ...]:
    """Parse "0-9,12,20-22" into a tuple of indices."""
    dims: list[int] = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if "-" in tok:
                lo, hi = tok.split("-", 1)
                dims.extend(range(int(lo), int(hi) + 1))
            else:
                dims.append(int(tok))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad dimension token {tok!r}") from None
    if not dims:
        raise argparse.ArgumentTypeError("empty dimension list")
    return tuple(dims)


def _latent_list(text: str) -> tuple[tuple[str, bool], ...]:
    """Parse "pitch:informative,hum:decoy" into (name, informative) pairs."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        name, _, kind = tok.partition(":")
        kind = kind or "informative"
        if kind not in ("informative", "decoy"):
            raise argparse.ArgumentTypeError(
                f"latent kind must be informative or decoy, got {kind!r}")
        out.append((name, kind == "informative"))
    if not out:
        raise argparse.ArgumentTypeError("empty latent list")
    return tuple(out)


def _add_table_flags(sub, with_emotions=True):
    sub.add_argument("--embeddings", required=True, help="embedding table CSV")
    sub.add_argument("--acoustic", required=True, help="acoustic table CSV")
    sub.add_argument("--category-map", required=True,
                     help="feature_name,category CSV")
    if with_emotions:
        sub.add_argument("--emotions", required=True, type=_emotion_list,
                         help="comma-separated emotion labels to analyze")
    sub.add_argument("--neutral-label", default=dataio.DEFAULT_NEUTRAL_LABEL)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emprobe",
                     description="Explain an audio embedding's emotion "
                                 "classifiers through interpretable acoustic features")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    validate = sub.add_parser("validate", help="check input tables and maps")
    _add_table_flags(validate)
    validate.set_defaults(func=cmd_validate)

    run = sub.add_parser("run", help="run the full analysis pipeline")
    _add_table_flags(run)
    run.add_argument("--output-dir", required=True)
    run.add_argument("--c-grid", type=_float_list, default=DEFAULT_C_GRID)
    run.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHA_GRID)
    run.add_argument("--k-outer", type=_positive_int, default=DEFAULT_K_OUTER)
    run.add_argument("--subset-step", type=_positive_int, default=DEFAULT_SUBSET_STEP)
    run.add_argument("--subset-cap", type=_positive_int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.set_defaults(func=_cmd_run_args)

    gen = sub.add_parser("synth", help="generate planted-signal synthetic tables")
    gen.add_argument("--out-dir", required=True)
    gen.add_argument("--n-speakers", type=_positive_int, default=12)
    gen.add_argument("--utterances-per-speaker", type=_positive_int, default=20)
    gen.add_argument("--embed-dim", type=_positive_int, default=128)
    gen.add_argument("--planted-dims", type=_dim_list, default=tuple(range(10)))
    gen.add_argument("--latents", type=_latent_list,
                     default=(("lat_info", True), ("lat_decoy", False)))
    gen.add_argument("--label-latent", default=None)
    gen.add_argument("--noise-sigma", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_synth)
    return parser


def _cmd_run_args(args) -> int:
    config = RunConfig(
        embeddings_path=Path(args.embeddings),
        acoustic_path=Path(args.acoustic),
        category_map_path=Path(args.category_map),
        emotions=args.emotions,
        output_dir=Path(args.output_dir),
        neutral_label=args.neutral_label,
        c_grid=args.c_grid,
        alpha_grid=args.alpha_grid,
        k_outer=args.k_outer,
        subset_step=args.subset_step,
        subset_cap=args.subset_cap,
        seed=args.seed)
    return cmd_run(config)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, SingularSystemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
