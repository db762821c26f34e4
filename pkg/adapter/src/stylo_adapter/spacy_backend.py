"""Optional spaCy-backed pipeline; requires the `spacy` extra and a model.

Emits the same token records as the builtin backend but with real
dependency heads and relations. Pin the model name (and install its exact
version) for reproducible output.
"""

from __future__ import annotations

from .builtin import BuiltinToken


class SpacyPipeline:
    name = "spacy"

    def __init__(self, model_name: str):
        try:
            import spacy
        except ImportError as exc:
            raise RuntimeError(
                "the spacy backend needs the 'spacy' package "
                "(pip install stylo-adapter[spacy]) and a downloaded model"
            ) from exc
        self.model_name = model_name
        self.nlp = spacy.load(model_name)
        self.version = f"spacy:{model_name}:{self.nlp.meta.get('version', '?')}"

    def __call__(self, text: str) -> list[list[BuiltinToken]]:
        doc = self.nlp(text)
        sentences = []
        for sent in doc.sents:
            tokens = []
            for tok in sent:
                head = 0 if tok.head is tok else tok.head.i - sent.start + 1
                deprel = "root" if tok.head is tok else (tok.dep_ or "dep")
                tokens.append(BuiltinToken(
                    surface=tok.text,
                    lemma=tok.lemma_.lower() or tok.text.lower(),
                    upos=tok.pos_ or "X",
                    xpos=tok.tag_ or "_",
                    head=head,
                    deprel=deprel,
                ))
            sentences.append(tokens)
        return sentences

    def sentence_texts(self, text: str) -> list[str]:
        return [sent.text for sent in self.nlp(text).sents]
