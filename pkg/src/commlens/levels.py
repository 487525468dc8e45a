"""Analysis levels: composable filters over the corpus plus feature emission.

Each level filters messages through a predicate derived from its parameters;
the global selection is the conjunction (intersection) of all enabled levels.
Levels may also emit feature fragments that concatenate, in fixed
registration order, into the vector consumed by the relevance classifier.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import dynamics as dyn
from .corpus import Corpus, Message

_WORD_RE = re.compile(r"\w+", re.UNICODE)


class LevelError(Exception):
    def __init__(self, level_id: str, message: str):
        super().__init__(f"level {level_id!r}: {message}")
        self.level_id = level_id


@dataclass(frozen=True)
class LevelDescriptor:
    level_id: str
    has_view: bool
    has_properties: bool
    feature_names: tuple[str, ...] = ()


@dataclass
class LevelState:
    level_id: str
    enabled: bool = False
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"levelId": self.level_id, "enabled": self.enabled, "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "LevelState":
        return cls(level_id=d["levelId"], enabled=bool(d.get("enabled", False)),
                   params=dict(d.get("params", {})))


@dataclass(frozen=True)
class Selection:
    message_ids: frozenset[str]
    participant_ids: frozenset[str]


def tokenize(text: str) -> list[str]:
    """Unicode word-boundary tokenization shared by keyword search and the
    thematic annotators."""
    return _WORD_RE.findall(text)


# ---------------------------------------------------------------------------
# Level predicates

def timefilter_predicate(corpus: Corpus, params: dict) -> Callable[[Message], bool]:
    start, end = params.get("start"), params.get("end")
    if start is None or end is None:
        raise LevelError("timefilter", "params require 'start' and 'end'")
    start, end = int(start), int(end)
    if start > end:
        raise LevelError("timefilter", f"start {start} > end {end}")
    return lambda m: start <= m.timestamp <= end


def user_selection_predicate(corpus: Corpus, params: dict) -> Callable[[Message], bool]:
    include = set(params.get("include", []))
    exclude = set(params.get("exclude", []))
    role = params.get("role", "either")
    if role not in ("sender", "receiver", "either"):
        raise LevelError("userSelection", f"invalid role {role!r}")
    overlap = include & exclude
    if overlap:
        raise LevelError("userSelection", f"include/exclude overlap: {sorted(overlap)}")

    def side_ok(pid: str) -> bool:
        if pid in exclude:
            return False
        return not include or pid in include

    if role == "sender":
        return lambda m: side_ok(m.sender)
    if role == "receiver":
        return lambda m: side_ok(m.receiver)

    def either(m: Message) -> bool:
        if m.sender in exclude or m.receiver in exclude:
            return False
        return not include or m.sender in include or m.receiver in include

    return either


def keyword_search_predicate(corpus: Corpus, params: dict) -> Callable[[Message], bool]:
    terms = params.get("terms", [])
    if not terms:
        raise LevelError("keywordSearch", "empty term list")
    mode = params.get("mode", "any")
    if mode not in ("any", "all"):
        raise LevelError("keywordSearch", f"invalid mode {mode!r}")
    case_fold = bool(params.get("caseFold", True))
    norm = (lambda s: s.casefold()) if case_fold else (lambda s: s)
    wanted = [norm(t) for t in terms]

    def pred(m: Message) -> bool:
        tokens = {norm(t) for t in tokenize(m.content)}
        hits = sum(1 for t in wanted if t in tokens)
        return hits >= 1 if mode == "any" else hits == len(wanted)

    return pred


def dynamics_predicate(corpus: Corpus, params: dict) -> Optional[Callable[[Message], bool]]:
    """When episodesOnly is set, keep only messages that fall inside some
    episode of their pair; otherwise the dynamics level does not filter."""
    p = dyn.DynamicsParams.from_dict(params)
    if not params.get("episodesOnly", False):
        return None
    member_ids: set[str] = set()
    done_pairs: set[tuple[str, str]] = set()
    for (a, b) in corpus.pair_index:
        key = (min(a, b), max(a, b))
        if key in done_pairs:
            continue
        done_pairs.add(key)
        for ep in dyn.segment_episodes(corpus, key, p):
            member_ids.update(ep.message_ids)
    return lambda m: m.id in member_ids


# ---------------------------------------------------------------------------
# Registry. Order is fixed and corpus-independent; feature concatenation and
# serialized state both rely on it.

@dataclass(frozen=True)
class _LevelImpl:
    descriptor: LevelDescriptor
    predicate_factory: Optional[Callable[[Corpus, dict], Optional[Callable[[Message], bool]]]]


def _thematic_factory(corpus: Corpus, params: dict):
    # implemented in thematic.py; bound late to avoid an import cycle
    from . import thematic
    return thematic.predicate_from_params(corpus, params)


REGISTRY: dict[str, _LevelImpl] = {
    "volume": _LevelImpl(LevelDescriptor("volume", True, False), None),
    "distribution": _LevelImpl(LevelDescriptor("distribution", True, False), None),
    "timefilter": _LevelImpl(LevelDescriptor("timefilter", False, True), timefilter_predicate),
    "userSelection": _LevelImpl(LevelDescriptor("userSelection", False, True),
                                user_selection_predicate),
    "keywordSearch": _LevelImpl(LevelDescriptor("keywordSearch", False, True),
                                keyword_search_predicate),
    "thematic": _LevelImpl(LevelDescriptor("thematic", False, True), _thematic_factory),
    "dynamics": _LevelImpl(LevelDescriptor("dynamics", True, True,
                                           dyn.EPISODE_FEATURE_NAMES), dynamics_predicate),
}


def descriptors() -> list[LevelDescriptor]:
    return [impl.descriptor for impl in REGISTRY.values()]


def default_states() -> list[LevelState]:
    return [LevelState(level_id=lid) for lid in REGISTRY]


def apply_all(corpus: Corpus, states: list[LevelState],
              annotations: Optional[dict] = None) -> Selection:
    """Global selection: the conjunction of every enabled level's predicate.

    ``annotations`` is the thematic annotation index (message id -> entity
    list); required only when the thematic level is enabled.
    """
    predicates = []
    for state in states:
        impl = REGISTRY.get(state.level_id)
        if impl is None:
            raise LevelError(state.level_id, "unknown level")
        if not state.enabled or impl.predicate_factory is None:
            continue
        params = dict(state.params)
        if state.level_id == "thematic":
            params["_annotations"] = annotations or {}
        pred = impl.predicate_factory(corpus, params)
        if pred is not None:
            predicates.append(pred)

    if predicates:
        selected = [m for m in corpus.messages if all(p(m) for p in predicates)]
        mids = frozenset(m.id for m in selected)
        pids = frozenset(pid for m in selected for pid in (m.sender, m.receiver))
    else:
        mids = frozenset(corpus.by_id)
        pids = frozenset(corpus.participants)
    return Selection(message_ids=mids, participant_ids=pids)


# ---------------------------------------------------------------------------
# View aggregates

def volume_aggregate(corpus: Corpus, selection: Selection) -> dict[tuple[str, str], int]:
    """Per ordered pair message counts restricted to the selection."""
    counts: dict[tuple[str, str], int] = {}
    if len(selection.message_ids) == len(corpus.messages):
        # all-pass fast path: the pair index already has the answer
        return {pair: len(ids) for pair, ids in corpus.pair_index.items()}
    for mid in selection.message_ids:
        m = corpus.by_id[mid]
        key = (m.sender, m.receiver)
        counts[key] = counts.get(key, 0) + 1
    return counts


def distribution_aggregate(corpus: Corpus, selection: Selection,
                           pair: tuple[str, str], bins: int,
                           time_range: Optional[tuple[int, int]] = None
                           ) -> tuple[list[float], list[int]]:
    """Histogram of the pair's selected traffic over the active time range.

    Returns (bin_edges, counts) with len(edges) == bins + 1. The range
    defaults to the corpus extent; an active timefilter range should be
    passed so bars stay informative under filtering.
    """
    if bins <= 0:
        raise LevelError("distribution", "bins must be positive")
    if time_range is None:
        if corpus.time_extent is None:
            return ([0.0] * (bins + 1), [0] * bins)
        time_range = corpus.time_extent
    start, end = float(time_range[0]), float(time_range[1])
    span = max(end - start, 1.0)
    edges = [start + span * k / bins for k in range(bins + 1)]
    counts = [0] * bins
    for mid in corpus.pair_index.get(pair, []):
        if mid not in selection.message_ids:
            continue
        ts = corpus.by_id[mid].timestamp
        if ts < start or ts > end:
            continue
        idx = min(int((ts - start) / span * bins), bins - 1)
        counts[idx] += 1
    return edges, counts


# ---------------------------------------------------------------------------
# Feature vectors

def feature_names(states: list[LevelState]) -> list[str]:
    names = []
    for lid, impl in REGISTRY.items():
        state = next((s for s in states if s.level_id == lid), None)
        if state is not None and state.enabled:
            names.extend(f"{lid}.{n}" for n in impl.descriptor.feature_names)
    return names


def feature_vector(corpus: Corpus, target, states: list[LevelState]) -> list[float]:
    """Concatenated features of all enabled feature-emitting levels, in fixed
    registration order. ``target`` is an Episode or a message id; a message id
    is featurized via the episode containing it (zeros when there is none)."""
    out: list[float] = []
    for lid, impl in REGISTRY.items():
        state = next((s for s in states if s.level_id == lid), None)
        if state is None or not state.enabled or not impl.descriptor.feature_names:
            continue
        if lid == "dynamics":
            episode = _resolve_episode(corpus, target, state.params)
            if episode is None:
                out.extend([0.0] * len(dyn.EPISODE_FEATURE_NAMES))
            else:
                out.extend(dyn.episode_features(episode, corpus))
    return out


def _resolve_episode(corpus: Corpus, target, params: dict) -> Optional[dyn.Episode]:
    if isinstance(target, dyn.Episode):
        return target
    if not isinstance(target, str):
        raise LevelError("dynamics", f"unknown feature target: {target!r}")
    msg = corpus.by_id.get(target)
    if msg is None:
        raise LevelError("dynamics", f"unknown message id: {target!r}")
    p = dyn.DynamicsParams.from_dict(params)
    pair = (min(msg.sender, msg.receiver), max(msg.sender, msg.receiver))
    for ep in dyn.segment_episodes(corpus, pair, p):
        if target in ep.message_ids:
            return ep
    return None
