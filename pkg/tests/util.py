"""Builders for synthetic documents used across the test suite."""

from __future__ import annotations

from stylo.corpus_io import AnnotatedDocument, Sentence, SourceLabel, Token


def make_sentence(words: list[str], upos: list[str] | None = None,
                  with_period: bool = True) -> Sentence:
    """A flat sentence: first token is the root, the rest attach to it."""
    upos = upos or ["NOUN"] * len(words)
    tokens = []
    for i, (word, pos) in enumerate(zip(words, upos), start=1):
        tokens.append(Token(
            index=i, surface_form=word, lemma=word.lower(), upos=pos,
            xpos=None, feats={}, head=0 if i == 1 else 1,
            deprel="root" if i == 1 else "dep",
        ))
    if with_period:
        n = len(tokens) + 1
        tokens.append(Token(
            index=n, surface_form=".", lemma=".", upos="PUNCT",
            xpos=".", feats={}, head=1, deprel="punct",
        ))
    return Sentence(tuple(tokens))


def make_doc(
    doc_id: str,
    sentence_lengths: list[int],
    source: str = "unlabeled",
    genre: str | None = None,
    word_stem: str = "w",
) -> AnnotatedDocument:
    """Document with the given non-punctuation word count per sentence."""
    sentences = []
    counter = 0
    for length in sentence_lengths:
        words = []
        for _ in range(length):
            words.append(f"{word_stem}{counter}")
            counter += 1
        sentences.append(make_sentence(words))
    return AnnotatedDocument(doc_id, SourceLabel(source, genre), tuple(sentences))


def make_doc_from_lemmas(
    doc_id: str,
    lemmas: list[str],
    source: str = "unlabeled",
) -> AnnotatedDocument:
    """Single-sentence document whose token lemmas are given exactly."""
    return AnnotatedDocument(
        doc_id,
        SourceLabel(source),
        (make_sentence(lemmas, with_period=False),),
    )
