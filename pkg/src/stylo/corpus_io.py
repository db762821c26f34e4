"""CoNLL-U corpus ingest, source labels, and sentence-aligned chunking.

Documents are dependency-parsed token streams in standard 10-column CoNLL-U.
A "word" throughout the toolkit is a non-punctuation token; all rates are
normalized against that count.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .errors import ConlluParseError, TooShortError

UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# Separator between a parent document id and a chunk/model suffix.
ID_SEP = "#"


@dataclass(frozen=True, slots=True)
class Token:
    index: int                      # 1-based position within the sentence
    surface_form: str
    lemma: str                      # lowercased on ingest
    upos: str
    xpos: str | None
    feats: dict[str, str]
    head: int                       # 0 = root
    deprel: str

    @property
    def is_punct(self) -> bool:
        return self.upos == "PUNCT"


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple[Token, ...]
    text: str | None = None

    @property
    def headless(self) -> bool:
        """True when the sentence lacks a unique dependency root."""
        return sum(1 for t in self.tokens if t.head == 0) != 1

    def word_count(self) -> int:
        return sum(1 for t in self.tokens if not t.is_punct)


@dataclass(frozen=True, slots=True)
class SourceLabel:
    name: str                       # human_chunk1 / human_chunk2 / model id
    genre: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("source label name must be nonempty")


UNLABELED = SourceLabel("unlabeled")


@dataclass(frozen=True, slots=True)
class AnnotatedDocument:
    doc_id: str
    source: SourceLabel
    sentences: tuple[Sentence, ...]

    @property
    def word_count(self) -> int:
        return sum(s.word_count() for s in self.sentences)

    @property
    def headless(self) -> bool:
        return any(s.headless for s in self.sentences)

    def tokens(self) -> Iterable[Token]:
        for sentence in self.sentences:
            yield from sentence.tokens

    def with_source(self, source: SourceLabel) -> "AnnotatedDocument":
        return AnnotatedDocument(self.doc_id, source, self.sentences)


@dataclass(frozen=True, slots=True)
class ChunkPair:
    doc_id: str
    chunk1: AnnotatedDocument
    chunk2: AnnotatedDocument
    chunk1_short: bool = False
    chunk2_short: bool = False


def word_count(doc: AnnotatedDocument) -> int:
    """Number of non-punctuation tokens in the document."""
    return doc.word_count


def parent_doc_id(doc_id: str) -> str:
    """Strip the chunk/model suffix: ``"d7#chunk2"`` -> ``"d7"``."""
    return doc_id.rsplit(ID_SEP, 1)[0]


def _parse_feats(raw: str) -> dict[str, str]:
    if raw == "_" or not raw:
        return {}
    feats: dict[str, str] = {}
    for item in raw.split("|"):
        key, sep, value = item.partition("=")
        if sep:
            feats[key] = value
    return feats


def _format_feats(feats: dict[str, str]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(feats.items()))


def _is_regular_id(column: str) -> bool:
    # Multiword ranges ("3-4") and empty nodes ("5.1") are skipped for
    # feature purposes; regular tokens keep contiguous integer ids.
    return column.isdigit()


def parse_conllu(
    data: bytes | str | TextIO,
    default_doc_id: str = "doc",
    source: SourceLabel = UNLABELED,
) -> list[AnnotatedDocument]:
    """Parse a CoNLL-U stream into one document per ``# newdoc`` block.

    Raises ConlluParseError (with the offending line number) on token lines
    that do not have 10 tab-separated columns or carry a non-integer head.
    Empty input yields an empty list.
    """
    if isinstance(data, bytes):
        stream: TextIO = io.StringIO(data.decode("utf-8"))
    elif isinstance(data, str):
        stream = io.StringIO(data)
    else:
        stream = data

    docs: list[AnnotatedDocument] = []
    doc_id: str | None = None
    doc_source: str | None = None
    doc_genre: str | None = None
    sentences: list[Sentence] = []
    pending_tokens: list[Token] = []
    pending_text: str | None = None
    unnamed = 0

    def close_sentence():
        nonlocal pending_tokens, pending_text
        if pending_tokens:
            sentences.append(Sentence(tuple(pending_tokens), pending_text))
        pending_tokens = []
        pending_text = None

    def close_doc():
        nonlocal sentences, doc_id, doc_source, doc_genre, unnamed
        close_sentence()
        if doc_id is None and not sentences:
            return
        if doc_id is None:
            unnamed += 1
            doc_id = f"{default_doc_id}{unnamed}"
        label = SourceLabel(doc_source or source.name,
                            doc_genre if doc_genre is not None else source.genre)
        docs.append(AnnotatedDocument(doc_id, label, tuple(sentences)))
        sentences = []
        doc_id = None
        doc_source = None
        doc_genre = None

    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            close_sentence()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            key = key.strip()
            if sep and key == "newdoc id":
                close_doc()
                doc_id = value.strip()
            elif body == "newdoc":
                close_doc()
            elif sep and key == "text":
                pending_text = value.strip()
            elif sep and key == "source":
                doc_source = value.strip()
            elif sep and key == "genre":
                doc_genre = value.strip()
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, found {len(columns)}", line_number
            )
        if not _is_regular_id(columns[0]):
            continue
        index = int(columns[0])
        try:
            head = int(columns[6])
        except ValueError:
            raise ConlluParseError(
                f"non-integer head {columns[6]!r}", line_number
            ) from None
        if head < 0:
            raise ConlluParseError(f"negative head {head}", line_number)
        if head == index:
            raise ConlluParseError(f"token {index} is its own head", line_number)
        upos = columns[3]
        if upos not in UPOS_TAGS:
            upos = "X"
        pending_tokens.append(Token(
            index=index,
            surface_form=columns[1],
            lemma=columns[2].lower() if columns[2] != "_" else columns[1].lower(),
            upos=upos,
            xpos=None if columns[4] == "_" else columns[4],
            feats=_parse_feats(columns[5]),
            head=head,
            deprel=columns[7],
        ))

    close_doc()
    return docs


def parse_conllu_file(path: str | Path, source: SourceLabel = UNLABELED) -> list[AnnotatedDocument]:
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle, default_doc_id=f"{path.stem}-", source=source)


def to_conllu(doc: AnnotatedDocument, include_genre: bool = False) -> str:
    """Serialize a document back to CoNLL-U (tagger-relevant columns only).

    The source label travels as a ``# source =`` comment so chunked corpora
    keep their labels through a parse round trip.
    """
    lines = [f"# newdoc id = {doc.doc_id}"]
    if doc.source.name != UNLABELED.name:
        lines.append(f"# source = {doc.source.name}")
    if include_genre and doc.source.genre:
        lines.append(f"# genre = {doc.source.genre}")
    for sentence in doc.sentences:
        if sentence.text is not None:
            lines.append(f"# text = {sentence.text}")
        for t in sentence.tokens:
            lines.append("\t".join([
                str(t.index),
                t.surface_form,
                t.lemma,
                t.upos,
                t.xpos or "_",
                _format_feats(t.feats),
                str(t.head),
                t.deprel,
                "_",
                "_",
            ]))
        lines.append("")
    return "\n".join(lines) + "\n"


def split_chunks(doc: AnnotatedDocument, target_words: int) -> ChunkPair:
    """Split a document into two consecutive chunks of roughly ``target_words``.

    Each chunk is the shortest sentence span reaching the target; sentences
    after chunk 2 are discarded. Raises TooShortError when the document has
    fewer than twice the target.
    """
    if target_words <= 0:
        raise ValueError("target_words must be positive")
    total = doc.word_count
    if total < 2 * target_words:
        raise TooShortError(doc.doc_id, total, 2 * target_words)

    def take(start: int) -> tuple[int, int]:
        count = 0
        i = start
        while i < len(doc.sentences) and count < target_words:
            count += doc.sentences[i].word_count()
            i += 1
        return i, count

    cut1, count1 = take(0)
    cut2, count2 = take(cut1)

    def sub(doc_suffix: str, sents: tuple[Sentence, ...], label_name: str) -> AnnotatedDocument:
        return AnnotatedDocument(
            doc_id=f"{doc.doc_id}{ID_SEP}{doc_suffix}",
            source=SourceLabel(label_name, doc.source.genre),
            sentences=sents,
        )

    chunk1 = sub("chunk1", doc.sentences[:cut1], "human_chunk1")
    chunk2 = sub("chunk2", doc.sentences[cut1:cut2], "human_chunk2")
    return ChunkPair(
        doc_id=doc.doc_id,
        chunk1=chunk1,
        chunk2=chunk2,
        chunk1_short=count1 < target_words,
        chunk2_short=count2 < target_words,
    )


def chunk_text(doc: AnnotatedDocument) -> str:
    """Reconstruct plain text from surface forms (single-space joined)."""
    parts: list[str] = []
    for sentence in doc.sentences:
        if sentence.text is not None:
            parts.append(sentence.text)
        else:
            parts.append(" ".join(t.surface_form for t in sentence.tokens))
    return " ".join(parts)


def load_manifest(path: str | Path) -> dict[str, dict]:
    """Corpus manifest: JSON mapping doc_id -> {source, genre, path}.

    A chunking-run manifest (entries nested under "documents") is accepted
    directly, so `stylo tag --manifest chunks_manifest.json` works as-is.
    """
    with open(path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    if not isinstance(manifest, dict):
        raise ValueError("corpus manifest must be a JSON object keyed by doc_id")
    if "documents" in manifest and isinstance(manifest["documents"], dict):
        return manifest["documents"]
    return manifest


def apply_manifest(
    docs: list[AnnotatedDocument], manifest: dict[str, dict]
) -> list[AnnotatedDocument]:
    """Attach manifest source labels to matching documents."""
    relabeled = []
    for doc in docs:
        entry = manifest.get(doc.doc_id)
        if entry:
            label = SourceLabel(entry.get("source", doc.source.name), entry.get("genre"))
            relabeled.append(doc.with_source(label))
        else:
            relabeled.append(doc)
    return relabeled
