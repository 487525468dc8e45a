"""End-to-end acceptance suite.

Each test covers one contract of the toolkit at full stated tolerance and
prints a single PASS/FAIL line so the run reads as a checklist.
"""

import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from commlens import levels, thematic
from commlens.corpus import Corpus, Message, Participant, IngestReport, ingest
from commlens.demo import DEMO_GAZETTEER, generate_demo_corpus
from commlens.dynamics import DynamicsParams, segment_episodes
from commlens.levels import LevelState, apply_all
from commlens.retrieval import (FADE_FLOOR, ForestConfig, LabeledExample,
                                RelevanceModel, _TreeNode, fade_factor, train)
from commlens.provenance import check_graph, parse_report, replay
from commlens.server import (VIEW_DISTRIBUTION, VIEW_DISTRIBUTION_PLUS,
                             VIEW_DYNAMICS, VIEW_VOLUME, create_app,
                             view_for_cell_size)
from commlens.thematic import (Atom, GazetteerTagger, Seq, annotate, matches,
                               parse_query, print_query)
from conftest import make_random_corpus
from oracles import brute_matches, grid_segment
from test_levels import random_states
from test_provenance import random_session
from test_thematic import random_ast


@pytest.fixture()
def checklist(capsys, request):
    """Print one PASS/FAIL line for the criterion, bypassing capture."""
    outcome = {"name": request.node.name, "ok": True}
    yield outcome
    failed = getattr(request.node, "rep_failed", False)
    with capsys.disabled():
        print(f"\n{'FAIL' if failed else 'PASS'}  {outcome['name']}", end="")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if rep.when == "call" and rep.failed:
        item.rep_failed = True


def test_conjunction_property_200_cases(checklist):
    checklist["name"] = "conjunction: applyAll == intersection of singles (200 cases)"
    for seed in range(200):
        rng = random.Random(seed)
        corpus = make_random_corpus(seed=seed % 23, participants=6, messages=60)
        states = random_states(rng, corpus)
        combined = apply_all(corpus, states).message_ids
        expected = frozenset(corpus.by_id)
        for s in states:
            expected &= apply_all(corpus, [s]).message_ids
        assert combined == expected, f"seed {seed}"


def test_episode_oracle_50_corpora(checklist):
    checklist["name"] = "episodes: grid-density oracle agreement (50 corpora) + equivariance"
    params = DynamicsParams()
    for seed in range(50):
        rng = random.Random(seed)
        corpus = make_random_corpus(seed=1000 + seed, participants=4,
                                    messages=rng.randint(10, 60),
                                    time_span=10 * 86400, with_content=False)
        done = set()
        for (a, b) in sorted(corpus.pair_index):
            pair = (min(a, b), max(a, b))
            if pair in done:
                continue
            done.add(pair)
            got = [ep.message_ids for ep in segment_episodes(corpus, pair, params)]
            assert got == grid_segment(corpus, pair, params), f"seed {seed} pair {pair}"

    # shift-equivariance: translating every timestamp translates the episodes
    base = make_random_corpus(seed=77, participants=2, messages=25,
                              time_span=5 * 86400, with_content=False)
    shift = 9_000_000
    shifted = Corpus(
        [Participant(id=p) for p in base.participants],
        [Message(id=m.id, sender=m.sender, receiver=m.receiver,
                 timestamp=m.timestamp + shift, content=m.content)
         for m in base.messages])
    pair = tuple(sorted(base.participants))[:2]
    eps_a = segment_episodes(base, pair, params)
    eps_b = segment_episodes(shifted, pair, params)
    assert [e.message_ids for e in eps_a] == [e.message_ids for e in eps_b]
    for ea, eb in zip(eps_a, eps_b):
        assert eb.start == pytest.approx(ea.start + shift, abs=1.0)
        assert eb.end == pytest.approx(ea.end + shift, abs=1.0)

    # theta-monotonicity: raising the threshold never merges episodes
    for seed in range(10):
        corpus = make_random_corpus(seed=3000 + seed, participants=2, messages=30,
                                    time_span=5 * 86400, with_content=False)
        pair = tuple(sorted(corpus.participants))[:2]
        low = segment_episodes(corpus, pair, DynamicsParams(theta=0.4))
        high = segment_episodes(corpus, pair, DynamicsParams(theta=0.9))
        lows = [set(e.message_ids) for e in low]
        for eh in high:
            containers = [l for l in lows if set(eh.message_ids) <= l]
            assert len(containers) == 1, f"seed {seed}"


def test_query_engine(checklist):
    checklist["name"] = "query DSL: 1000 roundtrips + 1000 enumerator agreements + distance query"
    rng = random.Random(11)
    for i in range(1000):
        ast = random_ast(rng)
        assert parse_query(print_query(ast)) == ast, f"roundtrip case {i}"

    cats = ("PERSON", "ORG", "GPE", "DATE")
    for i in range(1000):
        anns = [thematic.EntityAnnotation(message_id="m", start_word=s,
                                          end_word=s + rng.randint(0, 1),
                                          category=rng.choice(cats), surface="x")
                for s in sorted(rng.sample(range(30), rng.randint(0, 6)))]
        ast = random_ast(rng)
        assert matches(ast, anns) == brute_matches(ast, anns), f"match case {i}"

    assert parse_query("PERSON ~7 GPE") == Seq((Atom("PERSON"), Atom("GPE")), (7,))


def test_fraud_scenario_end_to_end(checklist):
    checklist["name"] = "fraud fixture: filter pipeline isolates planted senders/receiver (<10 s)"
    t0 = time.perf_counter()
    corpus, truth = generate_demo_corpus()
    annotations = annotate(corpus, GazetteerTagger(DEMO_GAZETTEER))
    states = levels.default_states()
    for s in states:
        if s.level_id == "timefilter":
            s.enabled = True
            s.params = {"start": truth["window"][0], "end": truth["window"][1]}
        elif s.level_id == "thematic":
            s.enabled = True
            s.params = {"query": "PERSON AND ORG AND GPE AND LAW"}
    sel = apply_all(corpus, states, annotations=annotations)
    assert sel.message_ids == frozenset(truth["plantedMessageIds"])
    senders = {corpus.by_id[i].sender for i in sel.message_ids}
    assert senders == set(truth["plantedSenders"])

    # the one account that hears from every suspicious sender
    common = set.intersection(*({corpus.by_id[i].receiver for i in sel.message_ids
                                 if corpus.by_id[i].sender == s} for s in senders))
    assert common == {truth["plantedReceiver"]}

    # restricting to that receiver keeps all suspicious senders in view
    for s in states:
        if s.level_id == "userSelection":
            s.enabled = True
            s.params = {"include": [truth["plantedReceiver"]], "exclude": [],
                        "role": "receiver"}
    narrowed = apply_all(corpus, states, annotations=annotations)
    assert narrowed.message_ids < sel.message_ids
    assert {corpus.by_id[i].sender for i in narrowed.message_ids} == senders
    assert {corpus.by_id[i].receiver for i in narrowed.message_ids} == \
        {truth["plantedReceiver"]}
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"pipeline took {elapsed:.1f} s"


def test_relevance_forest(checklist):
    checklist["name"] = "forest: determinism, >=0.95 holdout, uncertainty, fade sweep"
    rng = np.random.RandomState(5)
    def cloud(center, n, label, prefix):
        pts = rng.normal(center, 1.0, size=(n, 2))
        return [LabeledExample(target_id=f"{prefix}{i}", label=label,
                               features=tuple(map(float, p)))
                for i, p in enumerate(pts)]

    train_set = cloud((4, 4), 20, "relevant", "tp") + cloud((-4, -4), 20, "irrelevant", "tn")
    cfg = ForestConfig(tree_count=60, seed=9)
    m1, m2 = train(train_set, cfg), train(train_set, cfg)
    assert m1.to_text() == m2.to_text()  # byte-identical under a fixed seed

    test_set = cloud((4, 4), 100, "relevant", "hp") + cloud((-4, -4), 100, "irrelevant", "hn")
    correct = sum((m1.score(e.features)["p"] >= 0.5) == (e.label == "relevant")
                  for e in test_set)
    assert correct / len(test_set) >= 0.95

    split = RelevanceModel(trees=[_TreeNode(leaf_vote=1), _TreeNode(leaf_vote=0)],
                           config=ForestConfig(tree_count=2), feature_dim=2)
    s = split.score([0.0, 0.0])
    assert s["p"] == 0.5 and s["uncertainty"] == 1.0

    threshold = 0.6
    prev = None
    for k in range(101):
        p = k / 100.0
        f = fade_factor(p, threshold)
        assert FADE_FLOOR <= f <= 1.0
        if prev is not None:
            assert f >= prev - 1e-12  # monotone nondecreasing in p
        prev = f
    assert fade_factor(threshold, threshold) == 1.0
    assert fade_factor(0.0, threshold) == FADE_FLOOR


def test_provenance_replay_50_sessions(checklist):
    checklist["name"] = "provenance: 50 scripted sessions replay with digest match"
    for seed in range(50):
        session, corpus = random_session(seed)
        doc = parse_report(session.report_text())
        check_graph(doc)  # single root, parents precede children
        assert all(replay(doc, corpus)), f"seed {seed}"


def test_scale_ingest_and_matrix(checklist):
    checklist["name"] = "scale: 151 participants / 500k messages, ingest <60 s, matrix <500 ms"
    rng = random.Random(42)
    pids = [f"user{i:03d}" for i in range(151)]
    records = [{"id": f"m{k}", "sender": rng.choice(pids),
                "receiver": rng.choice(pids), "time": rng.randint(0, 400 * 86400),
                "content": ""} for k in range(500_000)]
    t0 = time.perf_counter()
    corpus = ingest(records, {}, IngestReport())
    ingest_s = time.perf_counter() - t0
    assert len(corpus.messages) == 500_000
    assert ingest_s < 60.0, f"ingest took {ingest_s:.1f} s"

    with TestClient(create_app(corpus, {})) as client:
        for _ in range(3):
            t0 = time.perf_counter()
            r = client.get("/matrix", params={"node": 0, "view": "Volume"})
            ms = (time.perf_counter() - t0) * 1000.0
            assert r.status_code == 200
            assert ms < 500.0, f"matrix request took {ms:.0f} ms"
        assert sum(c["count"] for c in r.json()["cells"]) == 500_000


def test_view_ladder_boundaries(checklist):
    checklist["name"] = "view ladder: boundary table at 15/16/31/32/63/64/127/128 px"
    table = {15: VIEW_VOLUME, 16: VIEW_VOLUME, 31: VIEW_VOLUME,
             32: VIEW_DISTRIBUTION, 63: VIEW_DISTRIBUTION,
             64: VIEW_DISTRIBUTION_PLUS, 127: VIEW_DISTRIBUTION_PLUS,
             128: VIEW_DYNAMICS}
    for px, view in table.items():
        assert view_for_cell_size(px) == view, f"{px}px"
