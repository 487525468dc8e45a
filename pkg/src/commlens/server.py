"""HTTP backend for the interactive matrix: zoom-dependent aggregates,
details-on-demand, episode labeling, and provenance navigation.

All handlers are pure functions of (corpus, provenance node state, model);
the only writers are POST /filters, /episode/{id}/label, and the provenance
mutations, serialized per session by a lock.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import dynamics as dyn
from . import levels, provenance, retrieval, thematic
from .corpus import Corpus

VIEW_VOLUME = "Volume"
VIEW_DISTRIBUTION = "Distribution"
VIEW_DISTRIBUTION_PLUS = "Distribution+"
VIEW_DYNAMICS = "Dynamics"

# base cell size 16px; the view switches at every doubling
VIEW_LADDER = (
    (16, VIEW_VOLUME),
    (32, VIEW_DISTRIBUTION),
    (64, VIEW_DISTRIBUTION_PLUS),
    (128, VIEW_DYNAMICS),
)

_BINS = {VIEW_DISTRIBUTION: 8, VIEW_DISTRIBUTION_PLUS: 32}


def view_for_cell_size(px: int) -> str:
    """Volume below 32px (including undersized cells), then one view per
    doubling: [32,64) Distribution, [64,128) Distribution+, >=128 Dynamics."""
    view = VIEW_VOLUME
    for threshold, name in VIEW_LADDER:
        if px >= threshold:
            view = name
    return view


class FiltersBody(BaseModel):
    levels: list[dict]
    threshold: Optional[float] = None


class LabelBody(BaseModel):
    label: str


class NavigateBody(BaseModel):
    nodeId: int


class StarBody(BaseModel):
    nodeId: int
    starred: bool = True


class NoteBody(BaseModel):
    nodeId: int
    note: str


class QueryBody(BaseModel):
    q: str


class AppState:
    def __init__(self, corpus: Corpus, gazetteer: Optional[dict] = None,
                 forest_config: Optional[retrieval.ForestConfig] = None):
        self.corpus = corpus
        gaz = gazetteer if gazetteer is not None else {}
        self.annotations = thematic.annotate(corpus, thematic.GazetteerTagger(gaz))
        self.session = provenance.Session(corpus, self.annotations)
        self.lock = threading.Lock()
        self.labels: dict[str, retrieval.LabeledExample] = {}
        self.model: Optional[retrieval.RelevanceModel] = None
        self.forest_config = forest_config or retrieval.ForestConfig(seed=0)
        self._episode_cache: dict[tuple, list[dyn.Episode]] = {}

    # ------------------------------------------------------------------

    def dynamics_params(self) -> dyn.DynamicsParams:
        state = next((s for s in self.session.states if s.level_id == "dynamics"), None)
        return dyn.DynamicsParams.from_dict(state.params if state else {})

    def episodes_for(self, a: str, b: str) -> list[dyn.Episode]:
        pair = (min(a, b), max(a, b))
        params = self.dynamics_params()
        key = (pair, params)
        if key not in self._episode_cache:
            self._episode_cache[key] = dyn.segment_episodes(self.corpus, pair, params)
        return self._episode_cache[key]

    def find_episode(self, episode_id: str) -> dyn.Episode:
        parts = episode_id.rsplit("--", 2)
        if len(parts) != 3:
            raise HTTPException(404, f"unknown episode: {episode_id}")
        a, b, _ = parts
        try:
            candidates = self.episodes_for(a, b)
        except Exception:
            raise HTTPException(404, f"unknown episode: {episode_id}")
        for ep in candidates:
            if ep.episode_id == episode_id:
                return ep
        raise HTTPException(404, f"unknown episode: {episode_id}")

    def episode_vector(self, episode: dyn.Episode) -> tuple[float, ...]:
        states = [levels.LevelState.from_dict(s.to_dict()) for s in self.session.states]
        for s in states:
            if s.level_id == "dynamics":
                s.enabled = True
        return tuple(levels.feature_vector(self.corpus, episode, states))

    def fade_for(self, episode: dyn.Episode) -> float:
        if self.model is None:
            return 1.0
        score = self.model.score(self.episode_vector(episode))
        return retrieval.fade_factor(score["p"], self.session.threshold)

    def active_time_range(self, node_id: int) -> Optional[tuple[int, int]]:
        states, _ = provenance.states_from_snapshot(
            self.session.node(node_id).state_snapshot)
        tf = next((s for s in states if s.level_id == "timefilter" and s.enabled), None)
        if tf is not None:
            return (int(tf.params["start"]), int(tf.params["end"]))
        return self.corpus.time_extent


def create_app(corpus: Corpus, gazetteer: Optional[dict] = None,
               forest_config: Optional[retrieval.ForestConfig] = None) -> FastAPI:
    app = FastAPI(title="commlens matrix backend")
    state = AppState(corpus, gazetteer, forest_config)
    app.state.commlens = state

    @app.get("/corpus/summary")
    def corpus_summary():
        return {
            "participantCount": len(corpus.participants),
            "messageCount": len(corpus.messages),
            "timeExtent": list(corpus.time_extent) if corpus.time_extent else None,
            "participants": [
                {"id": p.id, "displayName": p.display_name}
                for p in sorted(corpus.participants.values(), key=lambda p: p.id)
            ],
            "levels": [
                {"levelId": d.level_id, "hasView": d.has_view,
                 "hasProperties": d.has_properties,
                 "featureNames": list(d.feature_names)}
                for d in levels.descriptors()
            ],
        }

    def _orders(counts: dict, row_order: str, col_order: str,
                manual_rows: Optional[list[str]], manual_cols: Optional[list[str]]):
        ids = sorted(corpus.participants)

        def ordered(kind: str, manual: Optional[list[str]], axis: int):
            if kind == "manual":
                if manual is None or sorted(manual) != ids:
                    raise HTTPException(400, "manual order must be a permutation "
                                             "of participant ids")
                return manual
            if kind == "volumeDesc":
                marginal: dict[str, int] = {pid: 0 for pid in ids}
                for (s, r), c in counts.items():
                    marginal[s if axis == 0 else r] += c
                return sorted(ids, key=lambda pid: (-marginal[pid], pid))
            if kind == "alphabetical":
                return ids
            raise HTTPException(400, f"unknown order {kind!r}")

        return ordered(row_order, manual_rows, 0), ordered(col_order, manual_cols, 1)

    @app.get("/matrix")
    def matrix(node: int = Query(...), view: Optional[str] = None,
               cellSize: Optional[int] = None,
               rowOrder: str = "alphabetical", colOrder: str = "alphabetical",
               rows: Optional[str] = None, cols: Optional[str] = None):
        try:
            selection = state.session.selection_at(node)
        except provenance.ProvenanceError as exc:
            raise HTTPException(404, str(exc))
        if view is None:
            if cellSize is None:
                raise HTTPException(400, "pass either view= or cellSize=")
            view = view_for_cell_size(cellSize)
        if view not in (VIEW_VOLUME, VIEW_DISTRIBUTION, VIEW_DISTRIBUTION_PLUS,
                        VIEW_DYNAMICS):
            raise HTTPException(400, f"unknown view {view!r}")

        counts = levels.volume_aggregate(corpus, selection)
        manual_rows = rows.split(",") if rows else None
        manual_cols = cols.split(",") if cols else None
        row_ids, col_ids = _orders(counts, rowOrder, colOrder, manual_rows, manual_cols)

        max_count = max(counts.values(), default=0)
        time_range = state.active_time_range(node)
        cells = []
        for (sender, receiver), count in sorted(counts.items()):
            cell = {
                "row": sender, "col": receiver, "count": count,
                "normalizedCount": (count / max_count) if max_count else 0.0,
            }
            if view in _BINS:
                edges, bin_counts = levels.distribution_aggregate(
                    corpus, selection, (sender, receiver), _BINS[view], time_range)
                cell["histogram"] = {"edges": edges, "counts": bin_counts}
            if view == VIEW_DYNAMICS:
                eps = []
                for ep in state.episodes_for(sender, receiver):
                    if not any(mid in selection.message_ids for mid in ep.message_ids):
                        continue
                    eps.append({
                        "episodeId": ep.episode_id, "start": ep.start, "end": ep.end,
                        "messageCount": ep.count, "fadeFactor": state.fade_for(ep),
                    })
                cell["episodes"] = eps
            cells.append(cell)
        # plain JSONResponse: skips the per-field encoder pass, which dominates
        # response time on dense matrices
        return JSONResponse({"view": view, "rowOrder": row_ids, "colOrder": col_ids,
                             "node": node, "cells": cells})

    @app.get("/cell/{row}/{col}")
    def cell_details(row: str, col: str, view: str = VIEW_VOLUME,
                     node: Optional[int] = None, limit: int = 50, offset: int = 0):
        node_id = state.session.current_id if node is None else node
        try:
            selection = state.session.selection_at(node_id)
        except provenance.ProvenanceError as exc:
            raise HTTPException(404, str(exc))
        try:
            forward = corpus.messages_between(row, col)
            backward = corpus.messages_between(col, row) if row != col else []
        except Exception as exc:
            raise HTTPException(404, str(exc))

        bins = _BINS.get(view, 8)
        edges, bin_counts = levels.distribution_aggregate(
            corpus, selection, (row, col), bins, state.active_time_range(node_id))

        tallies: dict[str, int] = {}
        raw = []
        for m in sorted(forward + backward, key=lambda m: (m.timestamp, m.id)):
            if m.id not in selection.message_ids:
                continue
            for ann in state.annotations.get(m.id, []):
                tallies[ann.category] = tallies.get(ann.category, 0) + 1
            raw.append({"id": m.id, "sender": m.sender, "receiver": m.receiver,
                        "timestamp": m.timestamp, "content": m.content})
        total = len(raw)
        page = raw[offset:offset + limit]
        return {
            "histogram": {"edges": edges, "counts": bin_counts},
            "entityTallies": dict(sorted(tallies.items(), key=lambda kv: (-kv[1], kv[0]))),
            "messages": page,
            "messageTotal": total,
            "offset": offset,
        }

    @app.get("/episode/{episode_id}")
    def episode_transcript(episode_id: str):
        ep = state.find_episode(episode_id)
        left = ep.pair[0]
        records = []
        for mid in ep.message_ids:
            m = corpus.by_id[mid]
            records.append({
                "id": m.id,
                "senderSide": "left" if m.sender == left else "right",
                "sender": m.sender,
                "timestamp": m.timestamp,
                "content": m.content,
            })
        score = None
        if state.model is not None:
            score = state.model.score(state.episode_vector(ep))
        return {"episodeId": ep.episode_id, "pair": list(ep.pair),
                "start": ep.start, "end": ep.end, "initiator": ep.initiator,
                "peakDensity": ep.peak_density, "records": records,
                "label": (state.labels[ep.episode_id].label
                          if ep.episode_id in state.labels else None),
                "score": score}

    @app.post("/filters")
    def post_filters(body: FiltersBody):
        try:
            new_states = [levels.LevelState.from_dict(d) for d in body.levels]
        except KeyError as exc:
            raise HTTPException(400, f"malformed level state: missing {exc}")
        with state.lock:
            # validate before committing so bad params never become a node
            try:
                levels.apply_all(corpus, new_states, state.annotations)
            except (levels.LevelError, thematic.QueryParseError,
                    dyn.DynamicsError) as exc:
                raise HTTPException(422, str(exc))
            node_id = state.session.commit(new_states, body.threshold)
            state._episode_cache.clear()
        return {"nodeId": node_id}

    def _retrain_and_fades():
        labels = {e.label for e in state.labels.values()}
        if len(labels) >= 2:
            state.model = retrieval.train(
                list(state.labels.values()), state.forest_config,
                feature_labels=dyn.EPISODE_FEATURE_NAMES)
        fades = {}
        for (pair, _), eps in list(state._episode_cache.items()):
            for ep in eps:
                fades[ep.episode_id] = state.fade_for(ep)
        return fades

    @app.post("/episode/{episode_id}/label")
    def label_episode(episode_id: str, body: LabelBody):
        if body.label not in (retrieval.RELEVANT, retrieval.IRRELEVANT):
            raise HTTPException(400, f"label must be '{retrieval.RELEVANT}' or "
                                     f"'{retrieval.IRRELEVANT}'")
        ep = state.find_episode(episode_id)
        with state.lock:
            state.labels[episode_id] = retrieval.LabeledExample(
                target_id=episode_id, label=body.label,
                features=state.episode_vector(ep))
            fades = _retrain_and_fades()
        return {"labeled": episode_id, "label": body.label,
                "modelTrained": state.model is not None, "fadeFactors": fades}

    @app.get("/ambiguous")
    def ambiguous(k: int = 10):
        if state.model is None:
            return {"targets": []}
        targets: dict[str, tuple[float, ...]] = {}
        done = set()
        for (a, b) in corpus.pair_index:
            key = (min(a, b), max(a, b))
            if key in done:
                continue
            done.add(key)
            for ep in state.episodes_for(*key):
                targets[ep.episode_id] = state.episode_vector(ep)
        ranked = retrieval.rank_ambiguous(state.model, targets, k,
                                          labeled_ids=list(state.labels))
        return {"targets": ranked}

    @app.post("/provenance/navigate")
    def provenance_navigate(body: NavigateBody):
        with state.lock:
            try:
                selection = state.session.navigate(body.nodeId)
            except provenance.ProvenanceError as exc:
                raise HTTPException(404, str(exc))
            state._episode_cache.clear()
        return {"nodeId": body.nodeId, "selectedMessages": len(selection.message_ids)}

    @app.post("/provenance/star")
    def provenance_star(body: StarBody):
        with state.lock:
            try:
                state.session.star(body.nodeId, body.starred)
            except provenance.ProvenanceError as exc:
                raise HTTPException(404, str(exc))
        return {"nodeId": body.nodeId, "starred": body.starred}

    @app.post("/provenance/note")
    def provenance_note(body: NoteBody):
        with state.lock:
            try:
                state.session.set_note(body.nodeId, body.note)
            except provenance.ProvenanceError as exc:
                raise HTTPException(404, str(exc))
        return {"nodeId": body.nodeId}

    @app.get("/provenance/graph")
    def provenance_graph():
        return state.session.graph()

    @app.get("/report")
    def report():
        from fastapi.responses import PlainTextResponse
        return PlainTextResponse(state.session.report_text(),
                                 media_type="text/markdown")

    @app.post("/query/parse")
    def query_parse(body: QueryBody):
        try:
            ast = thematic.parse_query(body.q)
        except thematic.QueryParseError as exc:
            return {"ok": False, "error": str(exc), "position": exc.position}
        return {"ok": True, "canonical": thematic.print_query(ast)}

    return app
