"""Deterministic rule-based English pipeline: the offline fallback backend.

Closed-class lexicons plus suffix heuristics give each token a Universal POS
tag and a PTB-style xpos; dependency structure is a flat single-root tree.
Coarse but self-contained: no downloads, no model files, bit-stable output
for a given version.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

BUILTIN_VERSION = "builtin-1.0"

_ABBREVIATIONS = {"mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "e.g", "i.e", "no"}

_TOKEN_RE = re.compile(
    r"\d+(?:[.,]\d+)*"
    r"|[A-Za-z]+(?:['’][A-Za-z]+)*"
    r"|\S",
)

_ENCLITICS = ("'ll", "'re", "'ve", "'m", "'d", "'s")

PRONOUNS = {
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves",
    "you", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "she", "her", "hers", "it", "its", "they", "them", "their", "theirs",
    "himself", "herself", "itself", "themselves", "who", "whom", "whose",
    "what", "which", "something", "anything", "nothing", "everything",
    "someone", "anyone", "everyone", "somebody", "anybody", "everybody",
    "nobody", "none",
}
_POSSESSIVE_PRONOUNS = {"my", "your", "his", "her", "its", "our", "their"}
DETERMINERS = {
    "the", "a", "an", "this", "these", "those", "each", "every", "either",
    "neither", "some", "any", "no", "all", "both", "half", "such", "another",
}
AUXILIARIES = {
    "am", "is", "are", "was", "were", "be", "been", "being",
    "do", "does", "did", "have", "has", "had",
    "will", "would", "shall", "should", "can", "could", "may", "might",
    "must", "ought", "ca", "wo", "sha",
}
_MODALS = {"will", "would", "shall", "should", "can", "could", "may",
           "might", "must", "ought", "ca", "wo", "sha"}
ADPOSITIONS = {
    "aboard", "about", "above", "across", "after", "against", "along", "amid",
    "among", "around", "at", "before", "behind", "below", "beneath", "beside",
    "besides", "between", "beyond", "by", "concerning", "despite", "down",
    "during", "except", "for", "from", "in", "inside", "into", "like", "near",
    "of", "off", "on", "onto", "out", "over", "past", "per", "since",
    "through", "throughout", "till", "toward", "towards", "under",
    "underneath", "until", "unto", "up", "upon", "with", "within", "without",
}
COORDINATORS = {"and", "or", "but", "nor", "plus"}
SUBORDINATORS = {
    "although", "because", "if", "once", "than", "that", "though", "unless",
    "whereas", "while", "whilst", "whether",
}
WH_ADVERBS = {"when", "whenever", "where", "wherever", "why", "how"}
INTERJECTIONS = {"hello", "hi", "hey", "oh", "wow", "ouch", "yes", "yeah",
                 "please", "ok", "okay", "hmm", "ah", "uh", "um"}
ADVERBS = {
    "not", "never", "always", "often", "sometimes", "usually", "now", "then",
    "very", "too", "also", "just", "quite", "rather", "almost", "nearly",
    "maybe", "perhaps", "however", "instead", "otherwise", "thus", "hence",
    "moreover", "furthermore", "again", "here", "soon", "still", "already",
    "yet", "so",
}
NUMBER_WORDS = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "twenty", "thirty", "forty", "fifty",
    "sixty", "seventy", "eighty", "ninety", "hundred", "thousand", "million",
    "billion",
}
# base forms of frequent unambiguous-enough verbs; a preceding determiner or
# possessive flips the reading back to NOUN ("the move" vs "they move")
COMMON_VERBS = {
    "say", "get", "make", "go", "know", "take", "see", "come", "think",
    "look", "want", "give", "use", "find", "tell", "ask", "seem", "feel",
    "try", "leave", "call", "keep", "let", "begin", "help", "talk", "turn",
    "start", "show", "hear", "run", "move", "live", "believe", "hold",
    "bring", "happen", "write", "provide", "sit", "stand", "lose", "pay",
    "meet", "include", "continue", "set", "learn", "lead", "understand",
    "watch", "follow", "stop", "create", "speak", "read", "allow", "add",
    "spend", "grow", "open", "win", "offer", "remember", "consider",
    "appear", "buy", "wait", "serve", "die", "send", "expect", "build",
    "stay", "fall", "cut", "reach", "remain", "improve", "reduce",
    "increase", "become", "arrive", "listen", "slip", "approve", "argue",
    "complete", "extend", "indicate", "preserve", "document", "fix", "crash",
    "drop", "pack",
}
IRREGULAR_PASTS = {
    "said", "went", "told", "got", "took", "came", "saw", "knew", "found",
    "gave", "kept", "left", "felt", "began", "heard", "ran", "made", "met",
    "paid", "sat", "stood", "lost", "spoke", "wrote", "grew", "won", "sent",
    "built", "fell", "became", "thought", "brought", "held", "spent", "read",
    "let", "set", "cut", "drove", "slept", "woke", "ate", "drank", "sang",
    "flew", "drew", "threw", "wore", "chose", "broke", "forgot", "understood",
}

_ENCLITIC_LEMMAS = {
    "n't": "not", "'ll": "will", "'re": "be", "'ve": "have",
    "'m": "be", "'d": "would", "'s": "be",
}

_PUNCT_XPOS = {".": ".", "?": ".", "!": ".", ",": ",", ":": ":", ";": ":",
               "(": "-LRB-", ")": "-RRB-", '"': "''", "'": "''",
               "’": "''", "“": "``", "”": "''", "-": "HYPH"}


@dataclass(slots=True)
class BuiltinToken:
    surface: str
    lemma: str
    upos: str
    xpos: str
    head: int | None = None         # 1-based; None = let the converter attach
    deprel: str | None = None


def _normalize(word: str) -> str:
    return word.lower().replace("’", "'")


def split_sentences(text: str) -> list[str]:
    """Paragraphs on blank lines, sentences after .!? + space + opener."""
    sentences: list[str] = []
    for paragraph in re.split(r"\n\s*\n", text):
        paragraph = " ".join(paragraph.split())
        if not paragraph:
            continue
        start = 0
        for match in re.finditer(r"[.!?]+[\"'’”)\]]*\s+", paragraph):
            candidate = paragraph[start:match.end()].strip()
            tail = paragraph[match.end():]
            last_word = re.findall(r"[A-Za-z.]+", candidate[-12:] if candidate else "")
            if last_word and last_word[-1].rstrip(".").lower() in _ABBREVIATIONS:
                continue
            if tail and not re.match(r"[\"'‘“(\[]?[A-Z0-9]", tail):
                continue
            if candidate:
                sentences.append(candidate)
                start = match.end()
        rest = paragraph[start:].strip()
        if rest:
            sentences.append(rest)
    return sentences


def tokenize(sentence: str) -> list[str]:
    tokens: list[str] = []
    for raw in _TOKEN_RE.findall(sentence):
        low = _normalize(raw)
        if low.endswith("n't") and len(raw) > 3:
            tokens.append(raw[:-3])
            tokens.append(raw[-3:])
            continue
        for enclitic in _ENCLITICS:
            if low.endswith(enclitic) and len(low) > len(enclitic):
                cut = len(raw) - len(enclitic)
                tokens.append(raw[:cut])
                tokens.append(raw[cut:])
                break
        else:
            tokens.append(raw)
    return tokens


def _tag_word(word: str, position: int, previous: str | None) -> tuple[str, str]:
    """(upos, xpos) for one token; `previous` is the prior normalized surface."""
    low = _normalize(word)
    if not re.search(r"[A-Za-z0-9]", word):
        return "PUNCT", _PUNCT_XPOS.get(word, "NFP")
    if re.fullmatch(r"\d+(?:[.,]\d+)*", word):
        return "NUM", "CD"
    if low in NUMBER_WORDS:
        return "NUM", "CD"
    if low == "n't" or low == "not":
        return "PART", "RB"
    if low == "'s":
        # copular after a pronoun-like subject, possessive otherwise
        if previous in PRONOUNS or previous == "there":
            return "AUX", "VBZ"
        return "PART", "POS"
    if low in _ENCLITIC_LEMMAS:
        return "AUX", "MD" if low in ("'ll", "'d") else "VBP"
    if low == "there":
        return "PRON", "EX"
    if low == "to":
        return "ADP", "IN"      # switched to PART/TO before verbs in a second pass
    if low in INTERJECTIONS and position == 0:
        return "INTJ", "UH"
    if low in PRONOUNS:
        if low in _POSSESSIVE_PRONOUNS:
            return "PRON", "PRP$"
        if low in ("who", "whom", "what"):
            return "PRON", "WP"
        if low in ("which", "whose"):
            return "PRON", "WDT"
        return "PRON", "PRP"
    if low in AUXILIARIES:
        if low in _MODALS:
            return "AUX", "MD"
        xpos = {"is": "VBZ", "has": "VBZ", "does": "VBZ", "was": "VBD",
                "were": "VBD", "did": "VBD", "had": "VBD", "been": "VBN",
                "being": "VBG", "be": "VB"}.get(low, "VBP")
        return "AUX", xpos
    if low in DETERMINERS:
        return "DET", "DT"
    if low in COORDINATORS:
        return "CCONJ", "CC"
    if low in SUBORDINATORS:
        return "SCONJ", "IN"
    if low in WH_ADVERBS:
        return "ADV", "WRB"
    if low in ADPOSITIONS:
        return "ADP", "IN"
    if low in ADVERBS or low.endswith("ly"):
        return "ADV", "RB"
    if low.endswith("ing") and len(low) > 4:
        return "VERB", "VBG"
    if low.endswith("ed") and len(low) > 3:
        return "VERB", "VBD"
    nominal_context = previous in DETERMINERS or previous in _POSSESSIVE_PRONOUNS
    if low in IRREGULAR_PASTS and not nominal_context:
        return "VERB", "VBD"
    if not nominal_context:
        if low in COMMON_VERBS:
            return "VERB", "VB"
        if low.endswith("s") and not low.endswith("ss") and low[:-1] in COMMON_VERBS:
            return "VERB", "VBZ"
    if low.endswith(("ous", "ful", "ive", "able", "ible", "ic", "al")) and len(low) > 4:
        return "ADJ", "JJ"
    if position > 0 and word[:1].isupper():
        return "PROPN", "NNP"
    if low.endswith("s") and not low.endswith("ss") and len(low) > 3:
        return "NOUN", "NNS"
    return "NOUN", "NN"


def _lemma_for(word: str, upos: str) -> str:
    low = _normalize(word)
    if low in _ENCLITIC_LEMMAS and upos in ("AUX", "PART"):
        if low == "'s" and upos == "PART":
            return "'s"
        return _ENCLITIC_LEMMAS[low]
    if low == "ca":
        return "can"
    if low == "wo":
        return "will"
    if low == "sha":
        return "shall"
    if upos == "NOUN" and low.endswith("ies") and len(low) > 4:
        return low[:-3] + "y"
    if upos == "NOUN" and low.endswith("s") and not low.endswith(("ss", "us", "is")):
        return low[:-1]
    return low


def analyze_sentence(sentence: str) -> list[BuiltinToken]:
    surfaces = tokenize(sentence)
    tagged: list[BuiltinToken] = []
    previous: str | None = None
    for position, surface in enumerate(surfaces):
        upos, xpos = _tag_word(surface, position, previous)
        tagged.append(BuiltinToken(surface, "", upos, xpos))
        previous = _normalize(surface)
    # infinitival "to": switch to the particle reading before a verb or auxiliary
    for i, token in enumerate(tagged):
        if _normalize(token.surface) == "to" and i + 1 < len(tagged):
            if tagged[i + 1].upos in ("VERB", "AUX"):
                token.upos, token.xpos = "PART", "TO"
    for token in tagged:
        token.lemma = _lemma_for(token.surface, token.upos)
    return tagged


def pick_root(tokens: list[BuiltinToken]) -> int:
    """0-based index of the sentence root: first verb, else first word."""
    for i, token in enumerate(tokens):
        if token.upos in ("VERB", "AUX"):
            return i
    for i, token in enumerate(tokens):
        if token.upos != "PUNCT":
            return i
    return 0


class BuiltinPipeline:
    """UD-compatible fallback analyzer with a flat dependency scheme."""

    name = "builtin"
    version = BUILTIN_VERSION

    def __call__(self, text: str) -> list[list[BuiltinToken]]:
        return [analyze_sentence(s) for s in split_sentences(text)]

    def sentence_texts(self, text: str) -> list[str]:
        return split_sentences(text)
