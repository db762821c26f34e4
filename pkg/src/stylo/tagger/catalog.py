"""Feature catalog: 66 lexicogrammatical feature definitions loaded from JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import CatalogError
from .rules import Lexicons, rule_needs_tree

CATALOG_SIZE = 66

CATEGORIES = frozenset({
    "tense and aspect markers",
    "place and time adverbials",
    "pronouns and pro-verbs",
    "questions",
    "nominal forms",
    "passives",
    "stative forms",
    "subordination",
    "prepositional phrases, adjectives and adverbs",
    "lexical specificity",
    "lexical classes",
    "modals",
    "specialized verb classes",
    "reduced forms and dispreferred structures",
    "coordination",
    "negation",
})

INDEX_FEATURES = frozenset({"type_token_ratio", "mean_word_length"})


@dataclass(frozen=True, slots=True)
class FeatureDef:
    id: str
    short_name: str
    category: str
    kind: str                  # "count-rate" | "index"
    rule: dict | None
    needs_tree: bool


class FeatureCatalog:
    def __init__(self, defs: list[FeatureDef], lexicons: Lexicons, content_hash: str):
        self.defs = defs
        self.lexicons = lexicons
        self.content_hash = content_hash
        self.by_id = {d.id: d for d in defs}

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.defs)

    @property
    def short_names(self) -> dict[str, str]:
        return {d.id: d.short_name for d in self.defs}

    def id_for(self, short_name: str) -> str:
        for d in self.defs:
            if d.short_name == short_name:
                return d.id
        raise KeyError(f"no feature named {short_name!r}")


def _validate(defs: list[FeatureDef]):
    if len(defs) != CATALOG_SIZE:
        raise CatalogError(f"catalog must define exactly {CATALOG_SIZE} features, found {len(defs)}")
    seen: set[str] = set()
    for d in defs:
        if d.id in seen:
            raise CatalogError(f"duplicate feature id {d.id}")
        seen.add(d.id)
        if d.category not in CATEGORIES:
            raise CatalogError(f"{d.id}: unknown category {d.category!r}")
        if d.kind == "count-rate":
            if not d.rule:
                raise CatalogError(f"{d.id}: count-rate feature requires a rule")
        elif d.kind == "index":
            if d.short_name not in INDEX_FEATURES:
                raise CatalogError(f"{d.id}: unsupported index feature {d.short_name!r}")
        else:
            raise CatalogError(f"{d.id}: kind must be count-rate or index, got {d.kind!r}")


def load_catalog(catalog_json: str, lexicons_json: str) -> FeatureCatalog:
    try:
        catalog_raw = json.loads(catalog_json)
        lexicons_raw = json.loads(lexicons_json)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc

    lexicons = Lexicons(lexicons_raw)
    defs = []
    for record in catalog_raw["features"]:
        rule = record.get("rule")
        defs.append(FeatureDef(
            id=record["id"],
            short_name=record["short_name"],
            category=record["category"],
            kind=record["kind"],
            rule=rule,
            needs_tree=rule_needs_tree(rule) if rule else False,
        ))
    _validate(defs)
    digest = hashlib.sha256(
        catalog_json.encode("utf-8") + lexicons_json.encode("utf-8")
    ).hexdigest()
    return FeatureCatalog(defs, lexicons, digest)


def load_catalog_files(catalog_path: str | Path, lexicons_path: str | Path | None = None) -> FeatureCatalog:
    catalog_path = Path(catalog_path)
    if lexicons_path is None:
        lexicons_path = catalog_path.with_name("lexicons.json")
    return load_catalog(
        Path(catalog_path).read_text(encoding="utf-8"),
        Path(lexicons_path).read_text(encoding="utf-8"),
    )


def default_catalog() -> FeatureCatalog:
    data = resources.files("stylo.tagger") / "data"
    return load_catalog(
        (data / "catalog.json").read_text(encoding="utf-8"),
        (data / "lexicons.json").read_text(encoding="utf-8"),
    )
