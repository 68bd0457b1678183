from collections import Counter

import pytest

from errdet.data import SpanAnnotation, spans_to_labels
from errdet.errors import ConfigError, ContractError
from errdet.synth import (DEFAULT_TEMPLATES, PLURAL_NOUNS, PLURAL_VERBS,
                          RARE_ADJECTIVES, SINGULAR_NOUNS, SINGULAR_VERBS,
                          ErrorRule, _build_corrupted, default_rules, generate,
                          long_range_task, vocabulary_words)


def test_error_rule_validation():
    with pytest.raises(ConfigError):
        ErrorRule("typo_everything", 0.1)
    with pytest.raises(ConfigError):
        ErrorRule("swap_agreement", 1.5)


def test_rates_must_sum_to_at_most_one():
    rules = [ErrorRule("swap_agreement", 0.7), ErrorRule("insert_spurious", 0.7)]
    with pytest.raises(ConfigError):
        generate(DEFAULT_TEMPLATES, rules, 1, seed=0)


def test_rate_zero_is_noop():
    pairs = generate(DEFAULT_TEMPLATES, default_rules(0.0), 50, seed=9)
    for pair in pairs:
        assert pair.corrupted.tokens == pair.clean.tokens
        assert all(l == 0 for l in pair.corrupted.labels)
        assert pair.annotation.spans == ()


def test_same_seed_same_corpus():
    a = generate(DEFAULT_TEMPLATES, default_rules(0.2), 80, seed=4)
    b = generate(DEFAULT_TEMPLATES, default_rules(0.2), 80, seed=4)
    assert [(p.clean.tokens, p.corrupted.tokens, p.corrupted.labels) for p in a] == \
           [(p.clean.tokens, p.corrupted.tokens, p.corrupted.labels) for p in b]


def test_delete_labels_following_token():
    tokens, spans, labels = _build_corrupted(
        ["I", "saw", "the", "cat"], {2: ("delete_function_word", None)})
    assert tokens == ["I", "saw", "cat"]
    assert labels == [0, 0, 1]
    assert spans == [(2, 2)]


def test_delete_at_sentence_end_labels_final_token():
    tokens, spans, labels = _build_corrupted(
        ["run", "in"], {1: ("delete_function_word", None)})
    assert tokens == ["run"]
    assert labels == [1]
    assert spans == [(1, 1)]
    assert spans_to_labels(SpanAnnotation(tokens, spans)).labels == tuple(labels)


def test_insert_and_swap_label_the_bad_token():
    tokens, spans, labels = _build_corrupted(
        ["the", "cat", "runs"],
        {1: ("insert_spurious", "of"), 2: ("swap_agreement", "run")})
    assert tokens == ["the", "of", "cat", "run"]
    assert labels == [0, 1, 0, 1]
    assert spans == [(1, 2), (3, 4)]


def test_generator_labels_agree_with_span_conversion():
    pairs = generate(DEFAULT_TEMPLATES, default_rules(0.3), 500, seed=17)
    for pair in pairs:
        via_spans = spans_to_labels(pair.annotation)
        assert via_spans.labels == pair.corrupted.labels


def test_measured_rate_close_to_configured():
    pairs = generate(DEFAULT_TEMPLATES, default_rules(0.15), 10_000, seed=1)
    tokens = sum(len(p.corrupted) for p in pairs)
    labeled = sum(sum(p.corrupted.labels) for p in pairs)
    assert abs(labeled / tokens - 0.15) <= 0.02


def test_rare_words_exercise_unk_threshold():
    pairs = generate(DEFAULT_TEMPLATES, default_rules(0.15), 3000, seed=5)
    counts = Counter(t for p in pairs for t in p.corrupted.tokens)
    singletons = [w for w in RARE_ADJECTIVES if counts[w] == 1]
    assert singletons  # some rare words fall under the min_count=2 threshold


def test_vocabulary_is_small_and_closed():
    words = vocabulary_words()
    assert 150 <= len(words) <= 250
    pairs = generate(DEFAULT_TEMPLATES, default_rules(0.25), 400, seed=2)
    for pair in pairs:
        assert set(pair.corrupted.tokens) <= words


def test_long_range_distance_exceeds_window():
    for item in long_range_task(300, seed=8):
        assert item.dependency_distance > 7


def test_long_range_consistent_sentences_are_clean():
    for item in long_range_task(200, seed=12):
        if not item.mismatch:
            assert all(l == 0 for l in item.sentence.labels)


def test_long_range_labels_agree_with_span_conversion():
    for item in long_range_task(200, seed=23):
        assert spans_to_labels(item.annotation).labels == item.sentence.labels


def test_long_range_rule_based_verifier():
    # independent check: parse each sentence with the word lists and
    # confirm a token is labeled iff it is a number-mismatched verb
    for item in long_range_task(100, seed=31):
        tokens = item.sentence.tokens
        subject = tokens[1]
        assert subject in SINGULAR_NOUNS or subject in PLURAL_NOUNS
        subject_number = "sg" if subject in SINGULAR_NOUNS else "pl"
        verbs = [(i, t) for i, t in enumerate(tokens)
                 if t in SINGULAR_VERBS or t in PLURAL_VERBS]
        assert len(verbs) == 1
        verb_index, verb = verbs[0]
        verb_number = "sg" if verb in SINGULAR_VERBS else "pl"
        expected = [0] * len(tokens)
        if verb_number != subject_number:
            expected[verb_index] = 1
        assert list(item.sentence.labels) == expected


def test_long_range_rejects_nonpositive_n():
    with pytest.raises(ContractError):
        long_range_task(0, seed=1)


def test_generate_needs_templates():
    with pytest.raises(ContractError):
        generate([], default_rules(0.1), 1, seed=0)
