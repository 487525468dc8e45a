import random

import pytest

from commlens import levels, provenance
from commlens.levels import LevelState
from commlens.provenance import (ProvenanceError, Session, check_graph,
                                 parse_report, replay)
from conftest import WORDS, make_random_corpus


def tf_states(start, end):
    states = levels.default_states()
    for s in states:
        if s.level_id == "timefilter":
            s.enabled = True
            s.params = {"start": start, "end": end}
    return states


def test_fresh_session_one_root():
    session = Session(make_random_corpus(seed=1))
    assert len(session.nodes) == 1
    assert session.nodes[0].parent is None
    assert session.current_id == 0


def test_commit_appends_and_moves_pointer():
    corpus = make_random_corpus(seed=2)
    session = Session(corpus)
    nid = session.commit(tf_states(0, 86400))
    assert nid == 1
    assert session.current_id == 1
    assert session.nodes[1].parent == 0


def test_idempotent_commit_is_noop():
    session = Session(make_random_corpus(seed=3))
    a = session.commit(tf_states(0, 1000))
    b = session.commit(tf_states(0, 1000))
    assert a == b
    assert len(session.nodes) == 2


def test_branching_after_navigate_back():
    session = Session(make_random_corpus(seed=4))
    session.commit(tf_states(0, 1000))
    session.commit(tf_states(0, 2000))
    session.navigate(0)
    session.commit(tf_states(0, 3000))
    children = {}
    for n in session.nodes:
        if n.parent is not None:
            children.setdefault(n.parent, []).append(n.node_id)
    leaves = [n.node_id for n in session.nodes if n.node_id not in children]
    assert len(leaves) == 2
    assert sorted(children[0]) == [1, 3]


def test_navigate_restores_state_and_selection():
    corpus = make_random_corpus(seed=5)
    session = Session(corpus)
    nid = session.commit(tf_states(0, 5 * 86400))
    expected = levels.apply_all(corpus, tf_states(0, 5 * 86400))
    session.commit(tf_states(0, 86400))
    sel = session.navigate(nid)
    assert sel.message_ids == expected.message_ids
    assert session.current_id == nid
    # navigating to root restores the empty-filter selection
    sel = session.navigate(0)
    assert sel.message_ids == frozenset(corpus.by_id)


def test_navigate_unknown_node():
    session = Session(make_random_corpus(seed=6))
    with pytest.raises(ProvenanceError):
        session.navigate(99)


def test_append_only_snapshots():
    session = Session(make_random_corpus(seed=7))
    snap_before = session.nodes[0].state_snapshot
    session.commit(tf_states(0, 1000))
    session.star(1)
    session.set_note(1, "interesting")
    assert session.nodes[0].state_snapshot == snap_before
    assert session.nodes[1].starred and session.nodes[1].note == "interesting"


def test_report_structure_and_replay(tmp_path):
    corpus = make_random_corpus(seed=8)
    session = Session(corpus)
    session.commit(tf_states(0, 2 * 86400))
    session.star(1)
    session.set_note(1, "first window")
    path = tmp_path / "report.md"
    session.export_report(str(path))
    text = path.read_text()
    assert "Starred states" in text
    assert "node 1 - first window" in text
    doc = parse_report(text)
    check_graph(doc)
    assert all(replay(doc, corpus))


def test_replay_rejects_other_corpus(tmp_path):
    session = Session(make_random_corpus(seed=9))
    doc = parse_report(session.report_text())
    other = make_random_corpus(seed=10)
    with pytest.raises(ProvenanceError):
        replay(doc, other)


def random_session(seed: int) -> tuple[Session, object]:
    rng = random.Random(seed)
    corpus = make_random_corpus(seed=seed, participants=5, messages=40)
    session = Session(corpus)
    for _ in range(rng.randint(2, 8)):
        action = rng.random()
        if action < 0.6 or len(session.nodes) < 2:
            kind = rng.choice(["timefilter", "keywordSearch", "userSelection"])
            states = levels.default_states()
            for s in states:
                if s.level_id != kind:
                    continue
                s.enabled = True
                if kind == "timefilter":
                    a = rng.randint(0, 20 * 86400)
                    s.params = {"start": a, "end": a + rng.randint(0, 10 * 86400)}
                elif kind == "keywordSearch":
                    s.params = {"terms": rng.sample(WORDS, 2), "mode": "any"}
                else:
                    s.params = {"include": [], "exclude": [f"p{rng.randint(0, 4):02d}"],
                                "role": "sender"}
            session.commit(states)
            if rng.random() < 0.3:
                session.star(session.current_id)
        else:
            session.navigate(rng.randrange(len(session.nodes)))
    return session, corpus


def test_scripted_random_sessions_replay_exactly():
    for seed in range(50):
        session, corpus = random_session(seed)
        doc = parse_report(session.report_text())
        check_graph(doc)
        assert all(replay(doc, corpus)), f"seed {seed}"
        parents_ok = all(n["parent"] is None or n["parent"] < n["nodeId"]
                         for n in doc["nodes"])
        assert parents_ok


def test_digest_mismatch_detected():
    corpus = make_random_corpus(seed=12)
    session = Session(corpus)
    session.commit(tf_states(0, 86400))
    session.nodes[1].selection_digest = "tampered"
    with pytest.raises(ProvenanceError):
        session.navigate(1)
