"""Directory-level conversion of raw .txt files into CoNLL-U."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .builtin import BuiltinPipeline, BuiltinToken, pick_root
from .config import AdapterConfig, doc_id_for

log = logging.getLogger(__name__)


@dataclass
class ConversionSummary:
    converted: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)
    sentence_counts: dict[str, int] = field(default_factory=dict)
    token_counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed


def load_pipeline(model: str):
    if model == "builtin":
        return BuiltinPipeline()
    if model.startswith("spacy:"):
        from .spacy_backend import SpacyPipeline
        return SpacyPipeline(model.split(":", 1)[1])
    raise ValueError(
        f"unknown model {model!r}; expected 'builtin' or 'spacy:<model-name>'"
    )


def sentences_to_conllu(doc_id: str, analyzed: list[list[BuiltinToken]],
                        texts: list[str] | None = None) -> str:
    lines = [f"# newdoc id = {doc_id}"]
    for index, tokens in enumerate(analyzed):
        lines.append(f"# sent_id = {doc_id}-{index + 1}")
        if texts is not None and index < len(texts):
            lines.append(f"# text = {texts[index]}")
        if not tokens:
            continue
        has_tree = all(t.head is not None for t in tokens)
        root = pick_root(tokens)
        for position, token in enumerate(tokens):
            if has_tree:
                head, deprel = token.head, token.deprel or "dep"
            elif position == root:
                head, deprel = 0, "root"
            else:
                head = root + 1
                deprel = "punct" if token.upos == "PUNCT" else "dep"
            lines.append("\t".join([
                str(position + 1),
                token.surface,
                token.lemma,
                token.upos,
                token.xpos,
                "_",
                str(head),
                deprel,
                "_",
                "_",
            ]))
        lines.append("")
    if lines[-1] != "":
        lines.append("")
    return "\n".join(lines)


def convert_text(doc_id: str, text: str, pipeline) -> tuple[str, int, int]:
    """CoNLL-U string plus (sentence count, token count) for conservation checks."""
    analyzed = pipeline(text)
    texts = pipeline.sentence_texts(text)
    token_count = sum(len(sentence) for sentence in analyzed)
    return sentences_to_conllu(doc_id, analyzed, texts), len(analyzed), token_count


def parse_raw(config: AdapterConfig) -> ConversionSummary:
    """Convert every .txt file under the input directory; one .conllu each.

    Unreadable files are logged and skipped; the summary records them so the
    CLI can exit nonzero.
    """
    inputs = sorted(config.input_dir.glob("*.txt"))
    if not inputs:
        raise FileNotFoundError(f"no .txt files under {config.input_dir}")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    pipeline = load_pipeline(config.model)
    summary = ConversionSummary()
    for path in inputs:
        doc_id = doc_id_for(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            log.warning("skipping unreadable %s: %s", path, exc)
            summary.failed.append(path.name)
            continue
        conllu, n_sentences, n_tokens = convert_text(doc_id, text, pipeline)
        (config.output_dir / f"{doc_id}.conllu").write_text(conllu, encoding="utf-8")
        summary.converted.append(path.name)
        summary.sentence_counts[doc_id] = n_sentences
        summary.token_counts[doc_id] = n_tokens
    return summary
