import random

import pytest

from commlens import levels
from commlens.corpus import Corpus, Message, Participant
from commlens.levels import LevelError, LevelState, apply_all
from conftest import WORDS, make_random_corpus
from oracles import scan_volume


def _state(level_id, **params):
    return LevelState(level_id=level_id, enabled=True, params=params)


def random_states(rng, corpus):
    states = []
    if rng.random() < 0.7:
        a = rng.randint(0, 20 * 86400)
        states.append(_state("timefilter", start=a, end=a + rng.randint(0, 15 * 86400)))
    if rng.random() < 0.6:
        pids = sorted(corpus.participants)
        include = rng.sample(pids, rng.randint(0, 3))
        exclude = rng.sample([p for p in pids if p not in include], rng.randint(0, 2))
        states.append(_state("userSelection", include=include, exclude=exclude,
                             role=rng.choice(["sender", "receiver", "either"])))
    if rng.random() < 0.6:
        states.append(_state("keywordSearch", terms=rng.sample(WORDS, rng.randint(1, 3)),
                             mode=rng.choice(["any", "all"]), caseFold=True))
    return states


def test_no_enabled_levels_selects_everything():
    corpus = make_random_corpus(seed=0)
    sel = apply_all(corpus, levels.default_states())
    assert sel.message_ids == frozenset(corpus.by_id)
    assert sel.participant_ids == frozenset(corpus.participants)


def test_conjunction_equals_intersection_of_singles():
    for seed in range(200):
        rng = random.Random(seed)
        corpus = make_random_corpus(seed=seed % 17, participants=6, messages=60)
        states = random_states(rng, corpus)
        combined = apply_all(corpus, states).message_ids
        expected = frozenset(corpus.by_id)
        for s in states:
            expected &= apply_all(corpus, [s]).message_ids
        assert combined == expected, f"seed {seed}"


def test_empty_level_is_absorbing():
    corpus = make_random_corpus(seed=4)
    states = [_state("timefilter", start=-100, end=-50),
              _state("keywordSearch", terms=["report"])]
    assert apply_all(corpus, states).message_ids == frozenset()


def test_monotonicity_adding_level_never_enlarges():
    for seed in range(30):
        rng = random.Random(1000 + seed)
        corpus = make_random_corpus(seed=seed, participants=6, messages=80)
        states = random_states(rng, corpus)
        current = apply_all(corpus, []).message_ids
        for i in range(len(states)):
            nxt = apply_all(corpus, states[:i + 1]).message_ids
            assert nxt <= current
            current = nxt


def test_timefilter_bounds_and_errors():
    corpus = make_random_corpus(seed=2)
    lo, hi = corpus.time_extent
    assert apply_all(corpus, [_state("timefilter", start=lo, end=hi)]).message_ids \
        == frozenset(corpus.by_id)
    assert apply_all(corpus, [_state("timefilter", start=lo - 10, end=lo - 5)]).message_ids \
        == frozenset()
    with pytest.raises(LevelError):
        apply_all(corpus, [_state("timefilter", start=10, end=5)])


def test_user_selection_roles_and_errors():
    corpus = make_random_corpus(seed=5)
    pid = sorted(corpus.participants)[0]
    sel = apply_all(corpus, [_state("userSelection", exclude=[pid], role="sender")])
    assert all(corpus.by_id[m].sender != pid for m in sel.message_ids)
    sel = apply_all(corpus, [_state("userSelection", include=[pid], role="receiver")])
    expected = {m.id for m in corpus.messages if m.receiver == pid}
    assert sel.message_ids == frozenset(expected)
    assert apply_all(corpus, [_state("userSelection")]).message_ids == frozenset(corpus.by_id)
    with pytest.raises(LevelError):
        apply_all(corpus, [_state("userSelection", include=[pid], exclude=[pid])])


def test_keyword_search_case_fold_and_modes():
    msgs = [Message(id="1", sender="a", receiver="b", timestamp=0, content="Enron filed Report"),
            Message(id="2", sender="a", receiver="b", timestamp=1, content="quarterly report out")]
    corpus = Corpus([Participant(id="a"), Participant(id="b")], msgs)
    sel = apply_all(corpus, [_state("keywordSearch", terms=["enron"], mode="any")])
    assert sel.message_ids == frozenset({"1"})
    sel = apply_all(corpus, [_state("keywordSearch", terms=["report", "enron"], mode="all")])
    assert sel.message_ids == frozenset({"1"})
    sel = apply_all(corpus, [_state("keywordSearch", terms=["report", "enron"], mode="any")])
    assert sel.message_ids == frozenset({"1", "2"})
    with pytest.raises(LevelError):
        apply_all(corpus, [_state("keywordSearch", terms=[])])


def test_keyword_search_agrees_with_regex_oracle():
    import re
    rng = random.Random(99)
    corpus = make_random_corpus(seed=42, messages=1000)
    for _ in range(20):
        term = rng.choice(WORDS)
        sel = apply_all(corpus, [_state("keywordSearch", terms=[term], mode="any")])
        pattern = re.compile(rf"\b{re.escape(term)}\b", re.IGNORECASE)
        expected = {m.id for m in corpus.messages if pattern.search(m.content)}
        assert sel.message_ids == frozenset(expected)


def test_volume_aggregate_matches_group_by_oracle():
    corpus = make_random_corpus(seed=11, messages=300)
    full = apply_all(corpus, [])
    assert levels.volume_aggregate(corpus, full) == scan_volume(corpus, full)
    partial = apply_all(corpus, [_state("timefilter", start=0, end=10 * 86400)])
    got = levels.volume_aggregate(corpus, partial)
    assert got == scan_volume(corpus, partial)
    assert sum(got.values()) == len(partial.message_ids)


def test_volume_aggregate_trivial_cases():
    corpus = Corpus([Participant(id="a"), Participant(id="b")],
                    [Message(id="m", sender="a", receiver="b", timestamp=0)])
    empty = levels.Selection(frozenset(), frozenset())
    assert levels.volume_aggregate(corpus, empty) == {}
    full = apply_all(corpus, [])
    assert levels.volume_aggregate(corpus, full) == {("a", "b"): 1}


def test_distribution_aggregate_histogram():
    corpus = make_random_corpus(seed=13, messages=200)
    full = apply_all(corpus, [])
    pair = next(iter(corpus.pair_index))
    edges, counts = levels.distribution_aggregate(corpus, full, pair, 10)
    assert len(edges) == 11 and len(counts) == 10
    assert sum(counts) == len(corpus.pair_index[pair])
    # bins=1 marginalizes to the volume count
    _, one = levels.distribution_aggregate(corpus, full, pair, 1)
    assert one[0] == levels.volume_aggregate(corpus, full)[pair]
    # oracle: per-bin scan
    lo, hi = corpus.time_extent
    span = hi - lo
    expected = [0] * 10
    for mid in corpus.pair_index[pair]:
        ts = corpus.by_id[mid].timestamp
        expected[min(int((ts - lo) / span * 10), 9)] += 1
    assert counts == expected
    with pytest.raises(LevelError):
        levels.distribution_aggregate(corpus, full, pair, 0)


def test_distribution_single_message_lands_in_its_bin():
    corpus = Corpus([Participant(id="a"), Participant(id="b")],
                    [Message(id="m", sender="a", receiver="b", timestamp=500)])
    full = apply_all(corpus, [])
    edges, counts = levels.distribution_aggregate(corpus, full, ("a", "b"), 4,
                                                  time_range=(0, 1000))
    assert sum(counts) == 1
    idx = counts.index(1)
    assert edges[idx] <= 500 <= edges[idx + 1]


def test_feature_vector_dimension_and_order():
    corpus = make_random_corpus(seed=7, messages=40)
    states = levels.default_states()
    assert levels.feature_vector(corpus, corpus.messages[0].id, states) == []
    assert levels.feature_names(states) == []
    for s in states:
        if s.level_id == "dynamics":
            s.enabled = True
    names = levels.feature_names(states)
    assert names == [f"dynamics.{n}" for n in
                     ("durationSeconds", "messageCount", "directionBalance",
                      "initiatorIsRowParticipant", "meanInterMessageGap", "peakDensity")]
    vec = levels.feature_vector(corpus, corpus.messages[0].id, states)
    assert len(vec) == len(names)


def test_feature_vector_unknown_target():
    corpus = make_random_corpus(seed=7, messages=10)
    states = levels.default_states()
    for s in states:
        if s.level_id == "dynamics":
            s.enabled = True
    with pytest.raises(LevelError):
        levels.feature_vector(corpus, "no-such-message", states)


def test_invalid_level_params_error_names_level():
    corpus = make_random_corpus(seed=1)
    with pytest.raises(LevelError) as exc:
        apply_all(corpus, [_state("timefilter")])
    assert "timefilter" in str(exc.value)
    with pytest.raises(LevelError):
        apply_all(corpus, [LevelState(level_id="bogus", enabled=True)])
