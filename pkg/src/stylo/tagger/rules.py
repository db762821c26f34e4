"""Declarative rule engine for lexicogrammatical feature matching.

Rules are JSON records evaluated over one sentence at a time. A rule yields
match spans (1-based inclusive token positions); the span count becomes the
feature's raw count. Within one feature, overlapping candidate spans are
resolved leftmost-longest; distinct features may freely share tokens.

Token predicates are objects whose keys all must hold:

    upos / xpos / lemma / surface / deprel   membership in a list
    lemma_suffix / surface_suffix            any suffix matches
    feats                                    all key=value pairs present
    lexicon / not_lexicon                    single-word entries of named lists
    not                                      negated sub-predicate
    any                                      detached OR over sub-predicates
    head                                     predicate on the governing token
    has_child / lacks_child                  predicate (or list) on dependents
    same_upos_as_head                        anchor and head share a upos
    is_root                                  head == 0
    sentence_initial                         no earlier non-punctuation token
    sentence_final                           last token of the sentence
    preceded_by / followed_by                predicate on the adjacent token

A ``deprel`` entry matches the exact relation or any subtype of it, so
``"acl"`` matches ``acl:relcl`` while ``"acl:relcl"`` matches only itself.

Rule forms: ``token`` (match one token), ``sequence`` (ordered steps with at
most ``max_gap`` intervening tokens between neighbours), ``phrase`` (lexicon
words by lemma-or-surface, lexicon phrases by adjacent surface forms), and
``any_of`` (union of sub-rule spans).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus_io import Sentence, Token
from ..errors import CatalogError

TREE_KEYS = frozenset({
    "deprel", "head", "has_child", "lacks_child", "same_upos_as_head", "is_root",
})

_PRED_KEYS = TREE_KEYS | frozenset({
    "upos", "xpos", "lemma", "surface", "lemma_suffix", "surface_suffix",
    "feats", "lexicon", "not_lexicon", "not", "any",
    "sentence_initial", "sentence_final", "preceded_by", "followed_by",
})


@dataclass(frozen=True, slots=True)
class MatchSpan:
    feature_id: str
    sentence_index: int             # 0-based position of the sentence
    start: int                      # 1-based first token of the match
    end: int                        # 1-based last token, inclusive


def normalize_surface(surface: str) -> str:
    return surface.lower().replace("’", "'")


class SentenceContext:
    """Precomputed lookup structures for predicate evaluation."""

    __slots__ = ("tokens", "children", "by_index")

    def __init__(self, sentence: Sentence):
        self.tokens = sentence.tokens
        self.by_index: dict[int, int] = {}
        self.children: dict[int, list[int]] = {}
        for pos, token in enumerate(self.tokens):
            self.by_index.setdefault(token.index, pos)
        for pos, token in enumerate(self.tokens):
            self.children.setdefault(token.head, []).append(pos)

    def head_of(self, pos: int) -> int | None:
        head = self.tokens[pos].head
        if head == 0:
            return None
        return self.by_index.get(head)

    def children_of(self, pos: int) -> list[int]:
        return self.children.get(self.tokens[pos].index, [])


class Lexicons:
    """Named word/phrase lists; single words matched on lemma or surface."""

    def __init__(self, raw: dict[str, list[str]]):
        self.raw = raw
        self.words: dict[str, frozenset[str]] = {}
        self.phrases: dict[str, list[tuple[str, ...]]] = {}
        for name, entries in raw.items():
            words, phrases = set(), []
            for entry in entries:
                parts = entry.lower().split()
                if len(parts) == 1:
                    words.add(parts[0])
                else:
                    phrases.append(tuple(parts))
            # longest first so greedy span selection prefers full phrases
            phrases.sort(key=len, reverse=True)
            self.words[name] = frozenset(words)
            self.phrases[name] = phrases

    def word_set(self, names: str | list[str]) -> frozenset[str]:
        if isinstance(names, str):
            names = [names]
        combined: set[str] = set()
        for name in names:
            try:
                combined |= self.words[name]
            except KeyError:
                raise CatalogError(f"unknown lexicon {name!r}") from None
        return frozenset(combined)

    def phrase_list(self, name: str) -> list[tuple[str, ...]]:
        if name not in self.phrases:
            raise CatalogError(f"unknown lexicon {name!r}")
        return self.phrases[name]


def _deprel_matches(deprel: str, entries: list[str]) -> bool:
    for entry in entries:
        if deprel == entry or deprel.startswith(entry + ":"):
            return True
    return False


def _eval_pred(pred: dict, ctx: SentenceContext, pos: int, lex: Lexicons) -> bool:
    token: Token = ctx.tokens[pos]
    for key in pred:
        if key not in _PRED_KEYS:
            raise CatalogError(f"unknown predicate key {key!r}")

    if "upos" in pred and token.upos not in pred["upos"]:
        return False
    if "xpos" in pred and (token.xpos or "") not in pred["xpos"]:
        return False
    if "lemma" in pred and token.lemma not in pred["lemma"]:
        return False
    if "surface" in pred and normalize_surface(token.surface_form) not in pred["surface"]:
        return False
    if "lemma_suffix" in pred:
        if not any(token.lemma.endswith(s) for s in pred["lemma_suffix"]):
            return False
    if "surface_suffix" in pred:
        surface = normalize_surface(token.surface_form)
        if not any(surface.endswith(s) for s in pred["surface_suffix"]):
            return False
    if "feats" in pred:
        for fkey, fval in pred["feats"].items():
            if token.feats.get(fkey) != fval:
                return False
    if "deprel" in pred and not _deprel_matches(token.deprel, pred["deprel"]):
        return False
    if "lexicon" in pred:
        words = lex.word_set(pred["lexicon"])
        if token.lemma not in words and normalize_surface(token.surface_form) not in words:
            return False
    if "not_lexicon" in pred:
        words = lex.word_set(pred["not_lexicon"])
        if token.lemma in words or normalize_surface(token.surface_form) in words:
            return False
    if "is_root" in pred and (token.head == 0) != bool(pred["is_root"]):
        return False
    if "sentence_initial" in pred:
        initial = all(t.is_punct for t in ctx.tokens[:pos])
        if initial != bool(pred["sentence_initial"]):
            return False
    if "sentence_final" in pred:
        if (pos == len(ctx.tokens) - 1) != bool(pred["sentence_final"]):
            return False
    if "preceded_by" in pred:
        if pos == 0 or not _eval_pred(pred["preceded_by"], ctx, pos - 1, lex):
            return False
    if "followed_by" in pred:
        if pos == len(ctx.tokens) - 1 or not _eval_pred(pred["followed_by"], ctx, pos + 1, lex):
            return False
    if "head" in pred:
        head_pos = ctx.head_of(pos)
        if head_pos is None or not _eval_pred(pred["head"], ctx, head_pos, lex):
            return False
    if "same_upos_as_head" in pred:
        head_pos = ctx.head_of(pos)
        same = head_pos is not None and ctx.tokens[head_pos].upos == token.upos
        if same != bool(pred["same_upos_as_head"]):
            return False
    if "has_child" in pred:
        required = pred["has_child"]
        if isinstance(required, dict):
            required = [required]
        for child_pred in required:
            if not any(_eval_pred(child_pred, ctx, c, lex) for c in ctx.children_of(pos)):
                return False
    if "lacks_child" in pred:
        if any(_eval_pred(pred["lacks_child"], ctx, c, lex) for c in ctx.children_of(pos)):
            return False
    if "not" in pred and _eval_pred(pred["not"], ctx, pos, lex):
        return False
    if "any" in pred:
        if not any(_eval_pred(sub, ctx, pos, lex) for sub in pred["any"]):
            return False
    return True


def _sentence_allowed(rule: dict, ctx: SentenceContext) -> bool:
    sentence_filter = rule.get("sentence_filter")
    if not sentence_filter:
        return True
    final_punct = sentence_filter.get("final_punct")
    if final_punct is not None:
        if not ctx.tokens or ctx.tokens[-1].surface_form != final_punct:
            return False
    return True


def _match_token_rule(rule: dict, ctx: SentenceContext, lex: Lexicons) -> list[tuple[int, int]]:
    pred = rule["match"]
    return [(p, p) for p in range(len(ctx.tokens)) if _eval_pred(pred, ctx, p, lex)]


def _match_sequence_rule(rule: dict, ctx: SentenceContext, lex: Lexicons) -> list[tuple[int, int]]:
    steps = rule["steps"]
    max_gap = int(rule.get("max_gap", 0))
    spans = []
    n = len(ctx.tokens)
    for start in range(n):
        if not _eval_pred(steps[0], ctx, start, lex):
            continue
        pos = start
        ok = True
        for step in steps[1:]:
            found = None
            for candidate in range(pos + 1, min(pos + 2 + max_gap, n)):
                if _eval_pred(step, ctx, candidate, lex):
                    found = candidate
                    break
            if found is None:
                ok = False
                break
            pos = found
        if ok:
            spans.append((start, pos))
    return spans


def _match_phrase_rule(rule: dict, ctx: SentenceContext, lex: Lexicons) -> list[tuple[int, int]]:
    name = rule["lexicon"]
    constraint = rule.get("constraint")
    words = lex.word_set(name)
    phrases = lex.phrase_list(name)
    surfaces = [normalize_surface(t.surface_form) for t in ctx.tokens]
    spans = []
    n = len(ctx.tokens)
    for start in range(n):
        if constraint and not _eval_pred(constraint, ctx, start, lex):
            continue
        for phrase in phrases:
            end = start + len(phrase) - 1
            if end < n and tuple(surfaces[start:end + 1]) == phrase:
                spans.append((start, end))
        token = ctx.tokens[start]
        if token.lemma in words or surfaces[start] in words:
            spans.append((start, start))
    return spans


def _match_rule(rule: dict, ctx: SentenceContext, lex: Lexicons) -> list[tuple[int, int]]:
    if not _sentence_allowed(rule, ctx):
        return []
    kind = rule.get("type")
    if kind == "token":
        return _match_token_rule(rule, ctx, lex)
    if kind == "sequence":
        return _match_sequence_rule(rule, ctx, lex)
    if kind == "phrase":
        return _match_phrase_rule(rule, ctx, lex)
    if kind == "any_of":
        merged: set[tuple[int, int]] = set()
        for sub in rule["rules"]:
            merged.update(_match_rule(sub, ctx, lex))
        return sorted(merged)
    raise CatalogError(f"unknown rule type {kind!r}")


def _select_spans(candidates: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Leftmost-longest, non-overlapping selection within one feature."""
    chosen: list[tuple[int, int]] = []
    occupied: set[int] = set()
    for start, end in sorted(candidates, key=lambda s: (s[0], -(s[1] - s[0]))):
        positions = range(start, end + 1)
        if any(p in occupied for p in positions):
            continue
        chosen.append((start, end))
        occupied.update(positions)
    return chosen


def match_feature(
    feature_id: str,
    rule: dict,
    sentence: Sentence,
    sentence_index: int,
    lexicons: Lexicons,
    ctx: SentenceContext | None = None,
) -> list[MatchSpan]:
    """All resolved match spans of one feature rule in one sentence."""
    ctx = ctx or SentenceContext(sentence)
    spans = _select_spans(_match_rule(rule, ctx, lexicons))
    return [
        MatchSpan(feature_id, sentence_index, start + 1, end + 1)
        for start, end in spans
    ]


def rule_needs_tree(rule: dict) -> bool:
    """True when the rule consults dependency structure (head/deprel/children)."""
    def walk(node) -> bool:
        if isinstance(node, dict):
            return any(key in TREE_KEYS or walk(value) for key, value in node.items())
        if isinstance(node, list):
            return any(walk(item) for item in node)
        return False
    return walk(rule)
