"""Synthetic learner-error corpora for desk-scale experiments.

A small template grammar (closed vocabulary of roughly 200 words, with a
pool of rare adjectives injected at low probability so unk handling gets
exercised) produces grammatical sentences; corruption rules then damage
individual positions. Every corruption records an error span on the
corrupted sentence, and the emitted labels follow the same conventions
as span conversion: a deleted word labels the token after the gap, all
other corruptions label the bad token itself.

``long_range_task`` builds a separate diagnostic corpus in which the
correctness of the final verb depends on the number of the subject noun
more than seven tokens earlier, with distractor nouns in between.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import LabeledSentence, SpanAnnotation
from .errors import ConfigError, ContractError

# word lists: (singular, plural) pairs for agreement-bearing slots

NOUN_PAIRS = [
    ("cat", "cats"), ("dog", "dogs"), ("bird", "birds"), ("horse", "horses"),
    ("teacher", "teachers"), ("student", "students"), ("doctor", "doctors"),
    ("farmer", "farmers"), ("girl", "girls"), ("boy", "boys"),
    ("house", "houses"), ("garden", "gardens"), ("river", "rivers"),
    ("road", "roads"), ("tree", "trees"), ("car", "cars"), ("train", "trains"),
    ("book", "books"), ("letter", "letters"), ("story", "stories"),
    ("window", "windows"), ("door", "doors"), ("table", "tables"),
    ("chair", "chairs"), ("city", "cities"), ("village", "villages"),
    ("market", "markets"), ("school", "schools"), ("shop", "shops"),
    ("farm", "farms"), ("hill", "hills"), ("lake", "lakes"),
    ("apple", "apples"), ("orange", "oranges"), ("egg", "eggs"),
    ("uncle", "uncles"), ("sister", "sisters"), ("friend", "friends"),
    ("artist", "artists"), ("engine", "engines"),
]

VERB_PAIRS = [
    ("runs", "run"), ("walks", "walk"), ("sleeps", "sleep"), ("jumps", "jump"),
    ("sees", "see"), ("likes", "like"), ("wants", "want"), ("finds", "find"),
    ("opens", "open"), ("closes", "close"), ("watches", "watch"),
    ("follows", "follow"), ("visits", "visit"), ("paints", "paint"),
    ("reads", "read"), ("writes", "write"), ("carries", "carry"),
    ("cleans", "clean"), ("builds", "build"), ("waits", "wait"),
]

ADJECTIVES = ["old", "young", "small", "big", "tall", "short", "red", "green",
              "quiet", "busy", "happy", "tired", "bright", "dark", "warm",
              "cold", "heavy", "empty"]

# injected with low probability; most occurrences fall under the unk threshold
RARE_ADJECTIVES = ["obsolete", "luminous", "brittle", "opaque", "serene",
                   "rustic", "vivid", "gaunt", "placid", "sturdy", "somber",
                   "quaint"]

# mass nouns without number marking; used for the long-range distractors so
# the only number cue in the sentence is the subject itself
NEUTRAL_NOUNS = ["water", "furniture", "luggage", "music", "bread", "rice",
                 "traffic", "weather", "sunlight", "advice"]

ADVERBS = ["quickly", "slowly", "quietly", "often", "today", "early",
           "carefully", "again"]

PREPOSITIONS = ["in", "near", "behind", "beside", "under", "above", "along",
                "across"]

DETERMINERS_SG = ["a", "this", "that", "one", "every"]
DETERMINERS_PL = ["these", "those", "two", "many", "several"]
DETERMINERS_ANY = ["the", "my", "your", "their"]

PRONOUNS_SG = ["he", "she", "it"]
PRONOUNS_PL = ["they", "we", "you"]

CONFUSABLES = {"a": "an", "an": "a", "their": "there", "there": "their",
               "to": "too", "too": "to"}

SINGULAR_NOUNS = frozenset(sg for sg, _ in NOUN_PAIRS)
PLURAL_NOUNS = frozenset(pl for _, pl in NOUN_PAIRS)
SINGULAR_VERBS = frozenset(sg for sg, _ in VERB_PAIRS)
PLURAL_VERBS = frozenset(pl for _, pl in VERB_PAIRS)

_NOUN_SWAP = {sg: pl for sg, pl in NOUN_PAIRS} | {pl: sg for sg, pl in NOUN_PAIRS}
_VERB_SWAP = {sg: pl for sg, pl in VERB_PAIRS} | {pl: sg for sg, pl in VERB_PAIRS}
_DET_SWAP = {"this": "these", "these": "this", "that": "those", "those": "that"}

FUNCTION_WORDS = sorted(set(DETERMINERS_SG + DETERMINERS_PL + DETERMINERS_ANY
                            + PREPOSITIONS + ["and"]))

RULE_KINDS = ("delete_function_word", "swap_agreement", "substitute_confusable",
              "insert_spurious")

DEFAULT_TEMPLATES = (
    "det@1 noun@1 verb@1 adv .",
    "det@1 adj? noun@1 verb@1 det@2 noun@2 .",
    "pron@1 verb@1 det@2 adj? noun@2 .",
    "det@1 noun@1 prep det@2 noun@2 verb@1 adv? .",
    "det@1 noun@1 and det@2 noun@2 verb@pl .",
    "det@1 adj noun@1 verb@1 prep det@2 adj? noun@2 .",
    "pron@1 adv verb@1 det@2 noun@2 .",
)


@dataclass(frozen=True)
class ErrorRule:
    kind: str
    rate: float

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigError(f"unknown rule kind {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"rate must be in [0, 1], got {self.rate}")


def default_rules(total_rate: float) -> list[ErrorRule]:
    """Standard rule mix: 40% agreement swaps, 20% each for the rest."""
    return [ErrorRule("swap_agreement", 0.4 * total_rate),
            ErrorRule("delete_function_word", 0.2 * total_rate),
            ErrorRule("substitute_confusable", 0.2 * total_rate),
            ErrorRule("insert_spurious", 0.2 * total_rate)]


@dataclass(frozen=True)
class _TokenInfo:
    kind: str  # det | noun | verb | adj | adv | prep | pron | lit
    number: str | None = None  # sg | pl for agreement-bearing tokens


@dataclass(frozen=True)
class SentencePair:
    clean: LabeledSentence
    corrupted: LabeledSentence
    annotation: SpanAnnotation  # spans over the corrupted tokens


def _starts_with_vowel(word: str) -> bool:
    return word[:1].lower() in "aeiou"


def _sample_clean(template: str, rng: np.random.Generator,
                  rare_rate: float = 0.005) -> tuple[list[str], list[_TokenInfo]]:
    numbers: dict[str, str] = {}

    def number_of(group: str) -> str:
        if group == "pl":
            return "pl"
        if group not in numbers:
            numbers[group] = "sg" if rng.random() < 0.5 else "pl"
        return numbers[group]

    def choose(pool: Sequence[str]) -> str:
        return pool[rng.integers(0, len(pool))]

    tokens: list[str] = []
    infos: list[_TokenInfo] = []
    pending_det: list[tuple[int, str]] = []  # (position, number) filled afterwards

    for slot in template.split():
        optional = slot.endswith("?")
        if optional:
            slot = slot[:-1]
            if rng.random() < 0.5:
                continue
        if "@" in slot:
            name, group = slot.split("@")
        else:
            name, group = slot, None
        if name == "det":
            pending_det.append((len(tokens), number_of(group)))
            tokens.append("")  # placeholder, resolved below
            infos.append(_TokenInfo("det"))
        elif name == "noun":
            sg, pl = NOUN_PAIRS[rng.integers(0, len(NOUN_PAIRS))]
            n = number_of(group)
            tokens.append(sg if n == "sg" else pl)
            infos.append(_TokenInfo("noun", n))
        elif name == "verb":
            sg, pl = VERB_PAIRS[rng.integers(0, len(VERB_PAIRS))]
            n = number_of(group)
            tokens.append(sg if n == "sg" else pl)
            infos.append(_TokenInfo("verb", n))
        elif name == "pron":
            n = number_of(group)
            tokens.append(choose(PRONOUNS_SG if n == "sg" else PRONOUNS_PL))
            infos.append(_TokenInfo("pron", n))
        elif name == "adj":
            if rng.random() < rare_rate:
                tokens.append(choose(RARE_ADJECTIVES))
            else:
                tokens.append(choose(ADJECTIVES))
            infos.append(_TokenInfo("adj"))
        elif name == "adv":
            tokens.append(choose(ADVERBS))
            infos.append(_TokenInfo("adv"))
        elif name == "prep":
            tokens.append(choose(PREPOSITIONS))
            infos.append(_TokenInfo("prep"))
        else:
            tokens.append(name)
            infos.append(_TokenInfo("lit"))

    for position, number in pending_det:
        # neutral determiners stay rare so the true number is usually recoverable
        if rng.random() < 0.25:
            det = choose(DETERMINERS_ANY)
            det_number = None
        else:
            det = choose(DETERMINERS_SG if number == "sg" else DETERMINERS_PL)
            det_number = number
            if det == "a" and position + 1 < len(tokens) \
                    and _starts_with_vowel(tokens[position + 1]):
                det = "an"
        tokens[position] = det
        infos[position] = _TokenInfo("det", det_number)
    return tokens, infos


def _applicable(kind: str, token: str, info: _TokenInfo) -> bool:
    if kind == "delete_function_word":
        return token in FUNCTION_WORDS
    if kind == "swap_agreement":
        return token in _NOUN_SWAP or token in _VERB_SWAP or token in _DET_SWAP
    if kind == "substitute_confusable":
        return token in CONFUSABLES
    return True  # insert_spurious works anywhere


def _swap_form(token: str) -> str:
    for table in (_NOUN_SWAP, _VERB_SWAP, _DET_SWAP):
        if token in table:
            return table[token]
    raise ContractError(f"no agreement counterpart for {token!r}")


def _build_corrupted(tokens: Sequence[str],
                     ops: dict[int, tuple[str, str | None]]
                     ) -> tuple[list[str], list[tuple[int, int]], list[int]]:
    """Apply per-position corruption ops; returns (tokens, spans, labels).

    Labels are computed directly while building, independently of the
    span records, so the two conversion paths can be cross-checked.
    """
    out: list[str] = []
    spans: list[tuple[int, int]] = []
    labels: list[int] = []
    pending_gap = False

    def append(token: str, wrong: bool) -> None:
        nonlocal pending_gap
        labels.append(1 if (wrong or pending_gap) else 0)
        pending_gap = False
        out.append(token)

    for position, token in enumerate(tokens):
        op = ops.get(position)
        if op is None:
            append(token, wrong=False)
            continue
        kind, payload = op
        if kind == "delete_function_word":
            spans.append((len(out), len(out)))
            pending_gap = True
        elif kind == "insert_spurious":
            spans.append((len(out), len(out) + 1))
            append(payload, wrong=True)
            append(token, wrong=False)
        else:  # swap_agreement / substitute_confusable
            spans.append((len(out), len(out) + 1))
            append(payload, wrong=True)
    if pending_gap and labels:
        labels[-1] = 1
    return out, spans, labels


def generate(templates: Sequence[str], rules: Sequence[ErrorRule],
             n_sentences: int, seed: int) -> list[SentencePair]:
    """Sample clean sentences and corrupt them position by position.

    Each position is corrupted with probability sum(rates); the rule is
    drawn proportionally to its rate among the rules applicable there.
    Sentences use per-index derived seeds, so a generated corpus is a
    pure function of (templates, rules, n_sentences, seed).
    """
    if not templates:
        raise ContractError("generate needs at least one template")
    total_rate = sum(rule.rate for rule in rules)
    if total_rate > 1.0:
        raise ConfigError(f"rule rates sum to {total_rate}, must be <= 1")

    pairs: list[SentencePair] = []
    for index in range(n_sentences):
        rng = np.random.default_rng([seed, index])
        template = templates[rng.integers(0, len(templates))]
        tokens, infos = _sample_clean(template, rng)

        ops: dict[int, tuple[str, str | None]] = {}
        for position, (token, info) in enumerate(zip(tokens, infos)):
            if total_rate == 0.0 or rng.random() >= total_rate:
                continue
            usable = [r for r in rules if r.rate > 0.0
                      and _applicable(r.kind, token, info)]
            if not usable:
                continue
            weights = np.asarray([r.rate for r in usable])
            choice = usable[rng.choice(len(usable), p=weights / weights.sum())]
            if choice.kind == "delete_function_word":
                ops[position] = (choice.kind, None)
            elif choice.kind == "swap_agreement":
                ops[position] = (choice.kind, _swap_form(token))
            elif choice.kind == "substitute_confusable":
                ops[position] = (choice.kind, CONFUSABLES[token])
            else:
                spurious = FUNCTION_WORDS[rng.integers(0, len(FUNCTION_WORDS))]
                ops[position] = (choice.kind, spurious)

        corrupted, spans, labels = _build_corrupted(tokens, ops)
        pairs.append(SentencePair(
            clean=LabeledSentence(tokens, [0] * len(tokens)),
            corrupted=LabeledSentence(corrupted, labels),
            annotation=SpanAnnotation(corrupted, spans)))
    return pairs


def corrupted_corpus(pairs: Sequence[SentencePair]) -> list[LabeledSentence]:
    return [pair.corrupted for pair in pairs]


def clean_corpus(pairs: Sequence[SentencePair]) -> list[LabeledSentence]:
    return [pair.clean for pair in pairs]


# ---------------------------------------------------------------------------
# long-range agreement task


@dataclass(frozen=True)
class LongRangeSentence:
    sentence: LabeledSentence
    annotation: SpanAnnotation
    subject_index: int
    verb_index: int
    mismatch: bool

    @property
    def dependency_distance(self) -> int:
        return self.verb_index - self.subject_index


def long_range_task(n: int, seed: int,
                    mismatch_rate: float = 0.4) -> list[LongRangeSentence]:
    """Sentences whose final verb agrees (or not) with a subject more than
    seven tokens away, with distractor prepositional phrases in between.

    Shape: det noun (prep det [adj] mass-noun) x k verb adv "." with the
    modifier chain always at least eight tokens long, so the governing
    noun sits outside a seven-token window around the verb. Distractor
    nouns are number-neutral: the subject is the only number cue in the
    sentence. Only a mismatched verb is labeled.
    """
    if n < 1:
        raise ContractError("long_range_task needs n >= 1")
    sentences: list[LongRangeSentence] = []
    for index in range(n):
        rng = np.random.default_rng([seed, 104729, index])

        def choose(pool: Sequence[str]) -> str:
            return pool[rng.integers(0, len(pool))]

        subject_number = "sg" if rng.random() < 0.5 else "pl"
        noun_sg, noun_pl = NOUN_PAIRS[rng.integers(0, len(NOUN_PAIRS))]
        tokens = [choose(DETERMINERS_ANY),
                  noun_sg if subject_number == "sg" else noun_pl]
        subject_index = 1

        phrases = int(rng.integers(2, 4))
        adj_flags = [bool(rng.integers(0, 2)) for _ in range(phrases)]
        if phrases == 2:
            adj_flags = [True, True]  # keep the chain longer than seven tokens
        for use_adj in adj_flags:
            tokens.append(choose(PREPOSITIONS))
            tokens.append(choose(DETERMINERS_ANY))
            if use_adj:
                tokens.append(choose(ADJECTIVES))
            tokens.append(choose(NEUTRAL_NOUNS))

        mismatch = bool(rng.random() < mismatch_rate)
        verb_number = subject_number
        if mismatch:
            verb_number = "pl" if subject_number == "sg" else "sg"
        verb_sg, verb_pl = VERB_PAIRS[rng.integers(0, len(VERB_PAIRS))]
        verb_index = len(tokens)
        tokens.append(verb_sg if verb_number == "sg" else verb_pl)
        tokens.append(choose(ADVERBS))
        tokens.append(".")

        spans = [(verb_index, verb_index + 1)] if mismatch else []
        labels = [0] * len(tokens)
        if mismatch:
            labels[verb_index] = 1
        sentences.append(LongRangeSentence(
            sentence=LabeledSentence(tokens, labels),
            annotation=SpanAnnotation(tokens, spans),
            subject_index=subject_index,
            verb_index=verb_index,
            mismatch=mismatch))
    return sentences


def vocabulary_words() -> set[str]:
    """Every word the generator can emit (rare pool included)."""
    words = set(FUNCTION_WORDS) | set(ADJECTIVES) | set(RARE_ADJECTIVES)
    words |= set(ADVERBS) | set(PRONOUNS_SG) | set(PRONOUNS_PL)
    words |= SINGULAR_NOUNS | PLURAL_NOUNS | SINGULAR_VERBS | PLURAL_VERBS
    words |= set(NEUTRAL_NOUNS) | set(CONFUSABLES) | {"and", ".", "an"}
    return words
