"""Command-line entry point for the full pipeline.

Artifacts flow through a work directory:

    normalized/      per-document normalized text (ingest)
    ingest.log       doc_id <TAB> warning lines
    sentences.tsv    segmented sentences with spans (segment)
    annotations/     exported annotation files (e2e's scripted annotator)
    corpus.tsv       flat labeled sentence table (corpus assemble)
    manifest.json    corpus manifest
    split/           train/valid/test TSVs plus split.json
    model.rcwm       trained classifier (train)
    reports/         evaluation, curve, distribution, confusion outputs

Usage errors exit 2 (click's default); data errors exit 1 with a single
machine-parsable line on stderr. Every option can also be supplied via an
RCW_-prefixed environment variable or a --config file (flags win).
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import click

from . import corpus as corpus_mod
from .corpus import (
    CorpusManifest,
    DatasetSplit,
    assemble,
    atomic_write_text,
    read_annotation_file,
    read_sentence_tsv,
    resolve_created,
    split as split_corpus,
    split_sizes as split_corpus_sizes,
    write_sentence_tsv,
)
from .errors import FormatError, WorkbenchError
from .evaluation import (
    distribution_report,
    evaluate_model,
    learning_curve,
    run_experiment,
)
from .ingest import ingest_directory
from .modeling import (
    TrainConfig,
    active_backend,
    featurize_rows,
    load_model,
    save_model,
    train_rows,
)
from .segmenter import SegmentationConfig, segment
from .service import DEFAULT_LEASE_SECONDS, AnnotationEngine, load_queue_docs


@dataclass
class PipelineConfig:
    """File-backed defaults for every stage; flags always override."""

    paths: dict = field(default_factory=dict)  # input, work, export, annotations, fixtures, ui
    server: dict = field(default_factory=dict)  # host, port, lease_seconds
    split: dict = field(default_factory=dict)  # ratios | sizes, seed, stratified
    segmentation: dict = field(default_factory=dict)  # SegmentationConfig.to_dict
    train: dict = field(default_factory=dict)  # TrainConfig.to_dict

    def to_dict(self) -> dict:
        return {
            "paths": self.paths,
            "server": self.server,
            "split": self.split,
            "segmentation": self.segmentation,
            "train": self.train,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        return cls(**{k: dict(raw.get(k, {})) for k in ("paths", "server", "split", "segmentation", "train")})

    def save(self, path: Path) -> None:
        atomic_write_text(Path(path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class _Ctx:
    def __init__(self, config: PipelineConfig, seed: int | None, work_dir: str | None):
        self.config = config
        self.seed = seed
        self.work_dir = work_dir

    def resolve_seed(self, fallback: int = 0) -> int:
        if self.seed is not None:
            return self.seed
        return int(self.config.train.get("seed", self.config.split.get("seed", fallback)))

    def resolve_work(self) -> Path:
        return Path(self.work_dir or self.config.paths.get("work", "work"))


def _seg_config(ctx_obj: _Ctx, seg_config_path: str | None) -> SegmentationConfig:
    if seg_config_path:
        return SegmentationConfig.load(Path(seg_config_path))
    if ctx_obj.config.segmentation:
        return SegmentationConfig.from_dict(ctx_obj.config.segmentation)
    return SegmentationConfig()


def _train_config(ctx_obj: _Ctx, **overrides) -> TrainConfig:
    cfg = TrainConfig.from_dict(ctx_obj.config.train) if ctx_obj.config.train else TrainConfig()
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if ctx_obj.seed is not None and "seed" not in overrides:
        overrides["seed"] = ctx_obj.seed
    return replace(cfg, **overrides)


def _parse_sizes(spec: str) -> list[int]:
    """'10000:55000:5000' (inclusive range) or '1000,2000,3000'."""
    try:
        if ":" in spec:
            start, stop, step = (int(p) for p in spec.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in spec.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected START:STOP:STEP or comma list, got {spec!r}")


def _load_split_dir(split_dir: Path) -> DatasetSplit:
    meta = json.loads((split_dir / "split.json").read_text(encoding="utf-8"))
    parts = {name: read_sentence_tsv(split_dir / f"{name}.tsv") for name in DatasetSplit.PART_NAMES}
    return DatasetSplit(
        seed=meta.get("seed", 0),
        ratios=tuple(meta["ratios"]) if meta.get("ratios") else None,
        sizes=tuple(len(parts[name]) for name in DatasetSplit.PART_NAMES),
        train=parts["train"],
        valid=parts["valid"],
        test=parts["test"],
    )


def _write_split_dir(result: DatasetSplit, split_dir: Path) -> None:
    split_dir.mkdir(parents=True, exist_ok=True)
    for name, part in result.parts().items():
        write_sentence_tsv(split_dir / f"{name}.tsv", part)
    result.save(split_dir / "split.json")


def _render_confusion(counts: list[list[int]]) -> str:
    tokens = list(corpus_mod.LABEL_TOKENS)
    width = max(len(t) for t in tokens) + 1
    head = " " * width + "".join(t.rjust(width) for t in tokens)
    lines = [head]
    for token, row in zip(tokens, counts):
        lines.append(token.ljust(width) + "".join(str(v).rjust(width) for v in row))
    return "\n".join(lines) + "\n"


@click.group(context_settings={"auto_envvar_prefix": "RCW", "help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pipeline config JSON supplying per-stage defaults.")
@click.option("--seed", type=int, default=None, help="Seed override for every seeded stage.")
@click.option("--work-dir", type=click.Path(file_okay=False), default=None,
              help="Artifact directory (default: ./work or config paths.work).")
@click.pass_context
def cli(ctx, config_path, seed, work_dir):
    """Resume corpus workbench: ingest, segment, annotate, train, evaluate."""
    config = PipelineConfig.load(Path(config_path)) if config_path else PipelineConfig()
    ctx.obj = _Ctx(config=config, seed=seed, work_dir=work_dir)


@cli.command()
@click.option("--in", "input_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory of resume files (txt, docx, pdf).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Work directory (defaults to --work-dir).")
@click.pass_obj
def ingest(obj: _Ctx, input_dir, out_dir):
    """Detect formats and extract normalized text from a resume directory."""
    work = Path(out_dir) if out_dir else obj.resolve_work()
    docs, log = ingest_directory(Path(input_dir))
    norm_dir = work / "normalized"
    norm_dir.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        atomic_write_text(norm_dir / f"{doc.doc_id}.txt", doc.text + ("\n" if doc.text else ""))
    atomic_write_text(work / "ingest.log", "".join(line + "\n" for line in log))
    click.echo(f"ingested {len(docs)} documents ({len(log)} warnings) -> {norm_dir}")


@cli.command()
@click.option("--seg-config", "seg_config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="SegmentationConfig JSON (default: built-in rules).")
@click.pass_obj
def segment_cmd(obj: _Ctx, seg_config_path):
    """Split normalized documents into sentences (reads work/normalized)."""
    work = obj.resolve_work()
    norm_dir = work / "normalized"
    if not norm_dir.is_dir():
        raise FormatError(f"{norm_dir} not found; run ingest first")
    config = _seg_config(obj, seg_config_path)
    lines = ["doc_id\tindex\tstart\tend\ttext"]
    n_docs = n_sents = 0
    from .ingest import NormalizedDocument, SourceFormat

    for path in sorted(norm_dir.glob("*.txt")):
        text = path.read_text(encoding="utf-8").rstrip("\n")
        doc = NormalizedDocument(doc_id=path.stem, text=text, source_format=SourceFormat.TXT)
        n_docs += 1
        for s in segment(doc, config):
            lines.append(f"{s.doc_id}\t{s.index}\t{s.span[0]}\t{s.span[1]}\t{s.text}")
            n_sents += 1
    atomic_write_text(work / "sentences.tsv", "\n".join(lines) + "\n")
    config.save(work / "segmentation.json")
    click.echo(f"segmented {n_docs} documents into {n_sents} sentences -> {work / 'sentences.tsv'}")


cli.add_command(segment_cmd, name="segment")


@cli.group()
def annotate():
    """Annotation service commands."""


@annotate.command("serve")
@click.option("--in", "input_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--export-dir", type=click.Path(file_okay=False), required=True)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--lease-seconds", type=float, default=None)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Built UI bundle to serve at /.")
@click.option("--seg-config", "seg_config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_obj
def annotate_serve(obj: _Ctx, input_dir, export_dir, host, port, lease_seconds, ui_dir, seg_config_path):
    """Serve the annotation HTTP API (and UI, if built) over a resume dir."""
    from .service import serve

    server = obj.config.server
    serve(
        input_dir=Path(input_dir),
        export_dir=Path(export_dir),
        host=host or server.get("host", "127.0.0.1"),
        port=int(port if port is not None else server.get("port", 8000)),
        lease_seconds=float(
            lease_seconds if lease_seconds is not None else server.get("lease_seconds", DEFAULT_LEASE_SECONDS)
        ),
        ui_dir=Path(ui_dir) if ui_dir else (Path(p) if (p := obj.config.paths.get("ui")) else None),
        seg_config=_seg_config(obj, seg_config_path),
    )


@cli.group()
def corpus():
    """Corpus assembly, splitting, and statistics."""


@corpus.command("assemble")
@click.option("--annotations", "ann_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory of per-resume annotation files.")
@click.option("--created", default=None, help="Manifest timestamp override (ISO-8601).")
@click.pass_obj
def corpus_assemble(obj: _Ctx, ann_dir, created):
    """Merge annotation files into corpus.tsv plus a manifest."""
    work = obj.resolve_work()
    files = [read_annotation_file(p) for p in sorted(Path(ann_dir).glob("*.txt"))]
    manifest, sentences = assemble(files, created=resolve_created(created))
    corpus_mod.write_sentence_tsv(work / "corpus.tsv", sentences)
    manifest.save(work / "manifest.json")
    click.echo(
        f"assembled {manifest.corpus_id}: {len(manifest.documents)} documents, "
        f"{manifest.total_sentences} sentences -> {work / 'corpus.tsv'}"
    )


@corpus.command("split")
@click.option("--ratios", default=None, help="Three comma-separated fractions, e.g. 0.7,0.15,0.15.")
@click.option("--sizes", default=None, help="Three comma-separated absolute sizes, e.g. 58000,10000,10000.")
@click.option("--stratified", is_flag=True, default=False, help="Per-label ratio split.")
@click.pass_obj
def corpus_split(obj: _Ctx, ratios, sizes, stratified):
    """Partition corpus.tsv into train/valid/test."""
    if ratios and sizes:
        raise click.BadParameter("--ratios and --sizes are mutually exclusive")
    work = obj.resolve_work()
    sentences = read_sentence_tsv(work / "corpus.tsv")
    split_cfg = obj.config.split
    seed = obj.seed if obj.seed is not None else int(split_cfg.get("seed", 0))
    sizes = sizes or (",".join(str(s) for s in split_cfg["sizes"]) if split_cfg.get("sizes") else None)
    if sizes:
        parts = [int(p) for p in str(sizes).split(",")]
        result = split_corpus_sizes(sentences, parts, seed=seed)
    else:
        ratios = ratios or ",".join(str(r) for r in split_cfg.get("ratios", (0.7, 0.15, 0.15)))
        fractions = tuple(float(p) for p in str(ratios).split(","))
        stratified = stratified or bool(split_cfg.get("stratified", False))
        result = split_corpus(sentences, fractions, seed=seed, stratified=stratified)
    _write_split_dir(result, work / "split")
    click.echo(f"split {len(sentences)} sentences into {result.sizes} (seed {seed}) -> {work / 'split'}")


@corpus.command("stats")
@click.pass_obj
def corpus_stats(obj: _Ctx):
    """Print and persist the label distribution of corpus.tsv."""
    _emit_distribution(obj)


def _emit_distribution(obj: _Ctx) -> None:
    work = obj.resolve_work()
    sentences = read_sentence_tsv(work / "corpus.tsv")
    report = distribution_report(sentences)
    reports = work / "reports"
    report.save(reports / "distribution.json", reports / "distribution.tsv")
    click.echo(report.render_table(), nl=False)


@cli.command()
@click.option("--dim", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", "--lr", "learning_rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--l2", type=float, default=None)
@click.pass_obj
def train(obj: _Ctx, dim, epochs, learning_rate, batch_size, l2):
    """Train the sentence classifier on split/train.tsv."""
    work = obj.resolve_work()
    cfg = _train_config(obj, dim=dim, epochs=epochs, learning_rate=learning_rate,
                        batch_size=batch_size, l2=l2)
    sentences = read_sentence_tsv(work / "split" / "train.tsv")
    rows = featurize_rows([s.text for s in sentences], cfg.dim)
    labels = corpus_mod.np_ordinals(sentences)
    model = train_rows(rows, labels, cfg)
    save_model(model, work / "model.rcwm")
    losses = ", ".join(f"{x:.4f}" for x in model.metadata["epoch_losses"])
    click.echo(
        f"trained on {rows.n_rows} sentences ({model.metadata['backend']} backend, "
        f"seed {cfg.seed}); epoch losses {losses} -> {work / 'model.rcwm'}"
    )


@cli.command("eval")
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--dim", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", "--lr", "learning_rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--l2", type=float, default=None)
@click.pass_obj
def eval_cmd(obj: _Ctx, runs, dim, epochs, learning_rate, batch_size, l2):
    """Run repeated train/eval over the split; report mean F1."""
    work = obj.resolve_work()
    cfg = _train_config(obj, dim=dim, epochs=epochs, learning_rate=learning_rate,
                        batch_size=batch_size, l2=l2)
    result = run_experiment(_load_split_dir(work / "split"), cfg, n_runs=runs,
                            out_dir=work / "reports" / "experiment")
    click.echo(
        f"{runs} runs (base seed {cfg.seed}): mean valid F1 {result.mean_valid_f1:.4f}, "
        f"mean test F1 {result.mean_test_f1:.4f} -> {work / 'reports' / 'experiment'}"
    )


@cli.command()
@click.option("--sizes", required=True, help="START:STOP:STEP (inclusive) or comma list.")
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--dim", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", "--lr", "learning_rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--l2", type=float, default=None)
@click.pass_obj
def ablate(obj: _Ctx, sizes, runs, dim, epochs, learning_rate, batch_size, l2):
    """Learning curve over nested train-pool prefixes of the given sizes."""
    work = obj.resolve_work()
    cfg = _train_config(obj, dim=dim, epochs=epochs, learning_rate=learning_rate,
                        batch_size=batch_size, l2=l2)
    curve = learning_curve(_load_split_dir(work / "split"), _parse_sizes(sizes), cfg, n_runs=runs)
    reports = work / "reports"
    curve.save(reports / "curve.json", reports / "curve.tsv")
    for p in curve.points:
        click.echo(f"size {p.train_size:>7}  valid F1 {p.mean_valid_f1:.4f}  test F1 {p.mean_test_f1:.4f}")
    click.echo(f"{len(curve.points)} curve points -> {reports / 'curve.tsv'}")


@cli.group()
def report():
    """Evaluation reports over existing artifacts."""


@report.command("distribution")
@click.pass_obj
def report_distribution(obj: _Ctx):
    """Label distribution of corpus.tsv (table + plot TSV)."""
    _emit_distribution(obj)


@report.command("confusion")
@click.pass_obj
def report_confusion(obj: _Ctx):
    """Confusion matrix of model.rcwm on split/test.tsv."""
    work = obj.resolve_work()
    model = load_model(work / "model.rcwm")
    sentences = read_sentence_tsv(work / "split" / "test.tsv")
    rows = featurize_rows([s.text for s in sentences], model.dim)
    rep = evaluate_model(model, rows, corpus_mod.np_ordinals(sentences), {"split": "test"})
    rep.save(work / "reports" / "confusion.json")
    click.echo(_render_confusion(rep.confusion.to_lists()), nl=False)
    click.echo(f"test F1 {rep.f1_micro:.4f} over {rep.n_examples} sentences")


@cli.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="fixtures", show_default=True)
@click.option("--count", type=int, default=60, show_default=True)
@click.pass_obj
def fixtures(obj: _Ctx, out_dir, count):
    """Regenerate the bundled synthetic resume fixtures."""
    from .fixtures import write_fixture_tree

    written = write_fixture_tree(Path(out_dir), n_resumes=count, seed=obj.seed or 0)
    n_sent = sum(len(f.annotation.sentences) for f in written)
    click.echo(f"wrote {len(written)} resumes ({n_sent} sentences) under {out_dir}")


@cli.command()
@click.option("--fixtures", "fixtures_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory with resumes/ and annotations/ subdirectories.")
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--dim", type=int, default=None)
@click.option("--epochs", type=int, default=200, show_default=True,
              help="Fixture corpora are small; more epochs than the training default.")
@click.option("--created", default="1970-01-01T00:00:00Z", show_default=True,
              help="Manifest timestamp (fixed for reproducible artifacts).")
@click.pass_obj
def e2e(obj: _Ctx, fixtures_dir, runs, dim, epochs, created):
    """Full pipeline on fixtures: ingest, segment, scripted annotation,
    assemble, split, train, eval, reports."""
    t0 = time.monotonic()
    work = obj.resolve_work()
    fixtures_dir = Path(fixtures_dir)
    resumes = fixtures_dir / "resumes"
    scripts = fixtures_dir / "annotations"
    for required in (resumes, scripts):
        if not required.is_dir():
            raise FormatError(f"fixture directory missing: {required}")
    seed = obj.resolve_seed()
    seg_config = _seg_config(obj, None)

    docs, log = ingest_directory(resumes)
    norm_dir = work / "normalized"
    norm_dir.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        atomic_write_text(norm_dir / f"{doc.doc_id}.txt", doc.text + ("\n" if doc.text else ""))
    atomic_write_text(work / "ingest.log", "".join(line + "\n" for line in log))
    click.echo(f"[1/6] ingested {len(docs)} documents ({len(log)} warnings)")

    queue = [(doc.doc_id, [s.text for s in segment(doc, seg_config)]) for doc in docs]
    queue = [(doc_id, texts) for doc_id, texts in queue if texts]
    n_exported = _scripted_annotation(queue, scripts, work / "annotations")
    click.echo(f"[2/6] scripted annotator exported {n_exported} annotation files")

    files = [read_annotation_file(p) for p in sorted((work / "annotations").glob("*.txt"))]
    manifest, sentences = assemble(files, created=created)
    corpus_mod.write_sentence_tsv(work / "corpus.tsv", sentences)
    manifest.save(work / "manifest.json")
    click.echo(f"[3/6] assembled {manifest.corpus_id}: {manifest.total_sentences} sentences")

    result = split_corpus(sentences, (0.7, 0.15, 0.15), seed=seed)
    _write_split_dir(result, work / "split")
    click.echo(f"[4/6] split into {result.sizes} (seed {seed})")

    cfg = _train_config(obj, dim=dim, epochs=epochs)
    rows = featurize_rows([s.text for s in result.train], cfg.dim)
    model = train_rows(rows, corpus_mod.np_ordinals(result.train), cfg)
    save_model(model, work / "model.rcwm")
    click.echo(f"[5/6] trained {model.metadata['backend']} model on {rows.n_rows} sentences")

    experiment = run_experiment(result, cfg, n_runs=runs, out_dir=work / "reports" / "experiment")
    reports = work / "reports"
    dist = distribution_report(sentences)
    dist.save(reports / "distribution.json", reports / "distribution.tsv")
    test_rows = featurize_rows([s.text for s in result.test], cfg.dim)
    rep = evaluate_model(model, test_rows, corpus_mod.np_ordinals(result.test), {"split": "test"})
    rep.save(reports / "confusion.json")
    click.echo(
        f"[6/6] {runs} runs: mean valid F1 {experiment.mean_valid_f1:.4f}, "
        f"mean test F1 {experiment.mean_test_f1:.4f} ({time.monotonic() - t0:.1f}s)"
    )


def _scripted_annotation(queue: list[tuple[str, list[str]]], scripts_dir: Path, export_dir: Path) -> int:
    """Label every queued resume through the annotation engine, taking the
    labels from the fixture annotation files."""
    from .errors import QueueEmpty

    engine = AnnotationEngine(queue, export_dir)
    try:
        session = engine.start_session("scripted")
    except QueueEmpty:
        return 0
    exported = 0
    while True:
        doc_id = session["doc_id"]
        script_path = scripts_dir / f"{doc_id}.txt"
        if not script_path.exists():
            raise FileNotFoundError(f"no annotation script for {doc_id}: {script_path} is missing")
        script = read_annotation_file(script_path)
        if len(script.sentences) != len(session["sentences"]):
            raise FormatError(
                f"{script_path}: {len(script.sentences)} labels for "
                f"{len(session['sentences'])} segmented sentences"
            )
        for s in script.sentences:
            engine.submit_label(session["session_id"], s.index, s.label.token)
        _, next_doc = engine.complete_resume(session["session_id"])
        exported += 1
        if next_doc is None:
            return exported
        session = {**next_doc, "session_id": session["session_id"]}


@cli.command()
@click.pass_obj
def backends(obj: _Ctx):
    """Show available compute backends and which one is active."""
    from .modeling import available_backends

    names = available_backends()
    active = active_backend().BACKEND_NAME
    for name in names:
        click.echo(f"{name}{' (active)' if name == active else ''}")


def main(argv=None) -> None:
    try:
        cli.main(args=argv, prog_name="rcw")
    except WorkbenchError as exc:
        click.echo(f"rcw: {exc.one_line()}", err=True)
        sys.exit(1)
    except (OSError, RuntimeError, ValueError) as exc:
        click.echo(f"rcw: error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
