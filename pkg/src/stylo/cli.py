"""Command-line pipeline: chunk, tag, compare, vocab, classify, generate, report.

Every primary output embeds run metadata (tool version, seed, catalog hash,
config hash) and is byte-identical across reruns with the same inputs and
seed; wall-clock timestamps appear only in generation manifests.

Exit codes: 0 success, 2 input error, 3 API error, 4 internal error.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .classify import (
    DatasetSplit,
    ForestModel,
    ForestParams,
    LassoModel,
    cross_corpus_eval,
    evaluate,
    gini_importance,
    split,
    train_forest,
    train_lasso,
)
from .corpus_io import (
    AnnotatedDocument,
    apply_manifest,
    load_manifest,
    parse_conllu_file,
    split_chunks,
    to_conllu,
)
from .corpusgen import (
    ChatClient,
    FilterPolicy,
    PromptTemplate,
    ProviderConfig,
    assemble_parallel_corpus,
    build_prompt,
)
from .errors import ApiError, StyloError, TooShortError
from .matrix import FeatureMatrix
from .stats import (
    compare_features,
    compare_vocab,
    comparison_to_csv,
    comparison_to_dict,
    rank_comparisons,
    vocab_to_csv,
    word_rates,
)
from .tagger import default_catalog, load_catalog_files, tag_corpus

EXIT_INPUT_ERROR = 2
EXIT_API_ERROR = 3
EXIT_INTERNAL_ERROR = 4


def _sha256_file(path: Path | None) -> str:
    if path is None:
        return ""
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunContext:
    def __init__(self, seed: int, catalog_path: Path | None,
                 out_dir: Path, config_path: Path | None):
        self.seed = seed
        self.out_dir = out_dir
        self.config_path = config_path
        self.config = {}
        if config_path:
            self.config = json.loads(config_path.read_text(encoding="utf-8"))
        self.catalog = (
            load_catalog_files(catalog_path) if catalog_path else default_catalog()
        )
        self.metadata = {
            "tool_version": __version__,
            "seed": str(seed),
            "catalog_hash": self.catalog.content_hash,
            "config_hash": _sha256_file(config_path),
        }

    def ensure_out_dir(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir

    def write_json(self, path: Path, payload: dict):
        body = {"metadata": self.metadata, **payload}
        path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")

    def comment_header(self) -> str:
        return "".join(f"# {key} = {value}\n" for key, value in self.metadata.items())


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed recorded in every output.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Feature catalog JSON (default: built-in).")
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("stylo-out"),
              show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Optional JSON config file.")
@click.pass_context
def cli(ctx, seed, catalog_path, out_dir, config_path):
    ctx.obj = RunContext(seed, catalog_path, out_dir, config_path)


def _collect_conllu(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(path.glob("*.conllu"))
    return [path]


def _load_docs(input_path: Path, manifest_path: Path | None = None) -> list[AnnotatedDocument]:
    files = _collect_conllu(input_path)
    if not files:
        raise click.UsageError(f"no .conllu files found under {input_path}")
    docs: list[AnnotatedDocument] = []
    for file in files:
        docs.extend(parse_conllu_file(file))
    if manifest_path:
        docs = apply_manifest(docs, load_manifest(manifest_path))
    return docs


@cli.command("chunk")
@click.argument("input_path", type=click.Path(exists=True, path_type=Path))
@click.option("--target-words", type=int, default=500, show_default=True)
@click.pass_obj
def cmd_chunk(run: RunContext, input_path: Path, target_words: int):
    """Split each document into two consecutive ~target-word chunks."""
    docs = _load_docs(input_path)
    out = run.ensure_out_dir()
    chunks_dir = out / "chunks"
    chunks_dir.mkdir(exist_ok=True)
    manifest: dict[str, dict] = {}
    chunked = 0
    too_short: list[str] = []
    for doc in docs:
        try:
            pair = split_chunks(doc, target_words)
        except TooShortError as exc:
            too_short.append(f"{doc.doc_id}: {exc.word_count} words")
            continue
        path = chunks_dir / f"{doc.doc_id}.chunks.conllu"
        path.write_text(
            run.comment_header()
            + to_conllu(pair.chunk1, include_genre=True)
            + to_conllu(pair.chunk2, include_genre=True),
            encoding="utf-8",
        )
        for chunk in (pair.chunk1, pair.chunk2):
            manifest[chunk.doc_id] = {
                "source": chunk.source.name,
                "genre": chunk.source.genre,
                "path": str(path.relative_to(out)),
                "word_count": chunk.word_count,
            }
        chunked += 1
    run.write_json(out / "chunks_manifest.json", {
        "target_words": target_words,
        "chunked": chunked,
        "too_short": too_short,
        "documents": manifest,
    })
    click.echo(f"chunked {chunked} document(s), {len(too_short)} too short")
    for line in too_short:
        click.echo(f"  too short: {line}")


@cli.command("tag")
@click.argument("input_path", type=click.Path(exists=True, path_type=Path))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Corpus manifest with source labels.")
@click.option("--out", "out_name", default="features.csv", show_default=True)
@click.pass_obj
def cmd_tag(run: RunContext, input_path: Path, manifest_path: Path | None, out_name: str):
    """Compute the 66-feature matrix for a parsed corpus."""
    docs = _load_docs(input_path, manifest_path)
    matrix, sidecar = tag_corpus(docs, run.catalog)
    out = run.ensure_out_dir()
    matrix.save(out / out_name, metadata=run.metadata)
    (out / f"{out_name}.errors.json").write_text(
        json.dumps({"metadata": run.metadata, "entries": sidecar}, indent=2) + "\n",
        encoding="utf-8",
    )
    failures = sum(1 for entry in sidecar if "error" in entry)
    click.echo(f"tagged {len(matrix)} document(s), {failures} failed, "
               f"{len(sidecar) - failures} flagged")


@cli.command("compare")
@click.option("--human", "human_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--llm", "llm_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Forest model supplying the importance ranking.")
@click.option("--top-k", type=int, default=15, show_default=True)
@click.pass_obj
def cmd_compare(run: RunContext, human_path: Path, llm_path: Path,
                model_path: Path | None, top_k: int):
    """Paired per-feature comparison of a human and an LLM matrix."""
    human = FeatureMatrix.load(human_path)
    llm = FeatureMatrix.load(llm_path)
    results = compare_features(human, llm, short_names=run.catalog.short_names)
    importance_order = None
    if model_path:
        model = ForestModel.from_json(model_path.read_text(encoding="utf-8"))
        importance_order = gini_importance(model).feature_order()
    ranked = rank_comparisons(results, importance_order)

    out = run.ensure_out_dir()
    (out / "comparison.csv").write_text(
        comparison_to_csv(results, metadata=run.metadata), encoding="utf-8")
    run.write_json(out / "comparison.json", {
        "ranked_by": "importance" if importance_order else "abs_log_ratio",
        "results": comparison_to_dict(results),
    })
    (out / "comparison_top.csv").write_text(
        comparison_to_csv(ranked[:top_k], metadata=run.metadata), encoding="utf-8")
    significant = sum(1 for r in results if r.significant)
    click.echo(f"compared {len(results)} features, {significant} significant "
               f"after adjustment; top-{top_k} table written")


@cli.command("vocab")
@click.option("--human", "human_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--llm", "llm_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--min-rate", type=float, default=0.001, show_default=True,
              help="Human-rate floor per 1,000 words.")
@click.option("--top-k", type=int, default=15, show_default=True)
@click.pass_obj
def cmd_vocab(run: RunContext, human_path: Path, llm_path: Path,
              min_rate: float, top_k: int):
    """Lemma-level rate comparison between two parsed corpora."""
    human_docs = _load_docs(human_path)
    llm_docs = _load_docs(llm_path)
    rows = compare_vocab(word_rates(human_docs), word_rates(llm_docs), min_rate)
    out = run.ensure_out_dir()
    (out / "vocab.csv").write_text(vocab_to_csv(rows, metadata=run.metadata),
                                   encoding="utf-8")
    (out / "vocab_overrepresented.csv").write_text(
        vocab_to_csv(rows[:top_k], metadata=run.metadata), encoding="utf-8")
    (out / "vocab_underrepresented.csv").write_text(
        vocab_to_csv(rows[::-1][:top_k], metadata=run.metadata), encoding="utf-8")
    click.echo(f"compared {len(rows)} lemmas above the rate floor")


@cli.command("classify")
@click.option("--matrix", "matrix_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice(["multiclass", "pairwise"]),
              default="multiclass", show_default=True)
@click.option("--model-type", type=click.Choice(["forest", "lasso"]),
              default="forest", show_default=True)
@click.option("--train-fraction", type=float, default=0.75, show_default=True)
@click.option("--n-trees", type=int, default=500, show_default=True)
@click.option("--cross-corpus", "cross_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Second matrix for cross-corpus evaluation.")
@click.pass_obj
def cmd_classify(run: RunContext, matrix_path: Path, mode: str, model_type: str,
                 train_fraction: float, n_trees: int, cross_path: Path | None):
    """Train a source classifier and evaluate on a held-out split."""
    matrix = FeatureMatrix.load(matrix_path)
    n_sources = len(set(matrix.sources))
    if mode == "pairwise" and n_sources != 2:
        raise click.UsageError(
            f"pairwise mode requires exactly 2 sources, found {n_sources}")
    if model_type == "lasso" and n_sources != 2:
        raise click.UsageError(
            f"lasso requires exactly 2 sources, found {n_sources}")

    train, test = split(matrix, DatasetSplit(train_fraction, seed=run.seed))
    if model_type == "forest":
        model = train_forest(train, ForestParams(n_trees=n_trees, seed=run.seed))
        ranking = gini_importance(model)
        importance_payload = [
            {"feature": fid, "score": score} for fid, score in ranking.entries
        ]
    else:
        model = train_lasso(train, seed=run.seed)
        order = sorted(
            zip(model.feature_ids, model.coefficients.tolist()),
            key=lambda item: -abs(item[1]),
        )
        importance_payload = [
            {"feature": fid, "coefficient": value} for fid, value in order
        ]

    confusion = evaluate(model, test)
    out = run.ensure_out_dir()
    (out / "model.json").write_text(model.to_json(metadata=run.metadata),
                                    encoding="utf-8")
    (out / "confusion.csv").write_text(confusion.to_csv(metadata=run.metadata),
                                       encoding="utf-8")
    report = {
        "mode": mode,
        "model_type": model_type,
        "train_rows": len(train),
        "test_rows": len(test),
        "group_aware_split": True,
        "evaluation": confusion.to_dict(),
        "importance": importance_payload,
    }
    if cross_path:
        foreign = FeatureMatrix.load(cross_path)
        cross_matrix, cross_report = cross_corpus_eval(
            model, foreign,
            train_corpus=str(matrix_path), eval_corpus=str(cross_path),
        )
        report["cross_corpus"] = cross_report
        (out / "confusion_cross.csv").write_text(
            cross_matrix.to_csv(metadata=run.metadata), encoding="utf-8")
    run.write_json(out / "evaluation.json", report)
    click.echo(f"accuracy {confusion.accuracy:.4f} on {len(test)} held-out rows")


@cli.command("generate")
@click.option("--chunks", "chunks_path", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="Directory of chunk .conllu files (from `stylo chunk`).")
@click.option("--providers", "providers_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON list of provider configs.")
@click.option("--template", "template_path", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--word-target", type=int, default=500, show_default=True)
@click.option("--min-words", type=int, default=100, show_default=True)
@click.option("--dry-run", is_flag=True, help="Print prompts without any requests.")
@click.pass_obj
def cmd_generate(run: RunContext, chunks_path: Path, providers_path: Path | None,
                 template_path: Path | None, word_target: int,
                 min_words: int, dry_run: bool):
    """Prompt providers with chunk 1 of every document pair."""
    from .corpus_io import ChunkPair  # local import to keep startup light

    provider_dicts = None
    if providers_path:
        provider_dicts = json.loads(providers_path.read_text(encoding="utf-8"))
    elif "providers" in run.config:
        provider_dicts = run.config["providers"]
    if not provider_dicts:
        raise click.UsageError("no providers given (use --providers or config file)")
    providers = [ProviderConfig.from_dict(d) for d in provider_dicts]

    if template_path:
        template = PromptTemplate(**json.loads(template_path.read_text(encoding="utf-8")))
    elif "template" in run.config:
        template = PromptTemplate(**run.config["template"])
    else:
        template = PromptTemplate()

    docs = _load_docs(chunks_path)
    by_parent: dict[str, dict[str, AnnotatedDocument]] = {}
    for doc in docs:
        parent, _, suffix = doc.doc_id.rpartition("#")
        if suffix in ("chunk1", "chunk2"):
            by_parent.setdefault(parent, {})[suffix] = doc
    pairs = [
        ChunkPair(parent, chunks["chunk1"], chunks["chunk2"])
        for parent, chunks in sorted(by_parent.items())
        if "chunk1" in chunks and "chunk2" in chunks
    ]
    if not pairs:
        raise click.UsageError(f"no chunk pairs found under {chunks_path}")

    if dry_run:
        for pair in pairs:
            system, user = build_prompt(pair.chunk1, template, word_target)
            click.echo(f"--- {pair.doc_id} ---")
            click.echo(f"[system] {system}")
            click.echo(f"[user] {user}")
        click.echo(f"dry run: {len(pairs)} prompt(s), no requests sent")
        return

    policy = FilterPolicy(min_words=min_words)
    manifest = assemble_parallel_corpus(
        pairs, providers, template, policy, run.ensure_out_dir(),
        word_target=word_target, client=ChatClient(), metadata=run.metadata,
    )
    results = manifest["results"]
    if results and all(r["reject_reason"] == "api_error" for r in results):
        raise ApiError(f"all {len(results)} requests failed; see generation_manifest.json")
    click.echo(
        f"generated for {len(pairs)} document(s) x {len(providers)} provider(s); "
        f"{len(manifest['complete_doc_ids'])} complete"
    )


@cli.command("report")
@click.option("--in-dir", "in_dir", type=click.Path(exists=True, path_type=Path),
              required=True, help="Directory holding earlier pipeline outputs.")
@click.pass_obj
def cmd_report(run: RunContext, in_dir: Path):
    """Bundle pipeline outputs from a directory into one JSON report."""
    sections = {}
    for name in ("chunks_manifest.json", "comparison.json", "evaluation.json",
                 "generation_manifest.json"):
        path = in_dir / name
        if path.exists():
            sections[name.removesuffix(".json")] = json.loads(
                path.read_text(encoding="utf-8"))
    for name in ("features.csv", "vocab.csv", "confusion.csv"):
        path = in_dir / name
        if path.exists():
            sections.setdefault("files", []).append(name)
    out = run.ensure_out_dir()
    run.write_json(out / "report.json", {"sections": sections})
    click.echo(f"report written with {len(sections)} section(s)")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_INPUT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT_ERROR
    except click.exceptions.Abort:
        return EXIT_INTERNAL_ERROR
    except ApiError as exc:
        click.echo(f"api error: {exc}", err=True)
        return EXIT_API_ERROR
    except StyloError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
