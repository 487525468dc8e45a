"""Branching analysis history: every filter-state change becomes a node.

The history is a single-rooted tree (parents precede children) whose nodes
snapshot all level states plus the classifier threshold. Nodes are
append-only; navigation moves a current pointer and committing from a
non-leaf branches. Reports carry the whole graph in both a human-readable
and a machine-replayable form.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Optional

from . import levels
from .corpus import Corpus

REPORT_FORMAT_VERSION = 1
_REPORT_MARKER = "```commlens-report-json"


class ProvenanceError(Exception):
    pass


@dataclass
class ProvenanceNode:
    node_id: int
    parent: Optional[int]
    state_snapshot: str  # canonical JSON
    selection_digest: str
    created_at: float
    starred: bool = False
    note: Optional[str] = None


def canonical_state(states: list[levels.LevelState], threshold: float) -> str:
    doc = {
        "levels": [s.to_dict() for s in sorted(states, key=lambda s: s.level_id)],
        "threshold": threshold,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def states_from_snapshot(snapshot: str) -> tuple[list[levels.LevelState], float]:
    doc = json.loads(snapshot)
    return ([levels.LevelState.from_dict(d) for d in doc["levels"]],
            float(doc.get("threshold", 0.5)))


def selection_digest(selection: levels.Selection) -> str:
    h = hashlib.sha256()
    for mid in sorted(selection.message_ids):
        h.update(mid.encode())
        h.update(b"\n")
    return h.hexdigest()


class Session:
    """Single-writer analysis session over an immutable corpus."""

    def __init__(self, corpus: Corpus, annotations: Optional[dict] = None,
                 threshold: float = 0.5):
        self.corpus = corpus
        self.annotations = annotations or {}
        self.nodes: list[ProvenanceNode] = []
        self.states: list[levels.LevelState] = levels.default_states()
        self.threshold = threshold
        self._selection_cache: dict[int, levels.Selection] = {}
        root_id = self._append(None, canonical_state(self.states, threshold))
        self.current_id = root_id

    def _append(self, parent: Optional[int], snapshot: str) -> int:
        states, _ = states_from_snapshot(snapshot)
        selection = levels.apply_all(self.corpus, states, self.annotations)
        node = ProvenanceNode(
            node_id=len(self.nodes),
            parent=parent,
            state_snapshot=snapshot,
            selection_digest=selection_digest(selection),
            created_at=time.time(),
        )
        self.nodes.append(node)
        self._selection_cache[node.node_id] = selection
        return node.node_id

    def node(self, node_id: int) -> ProvenanceNode:
        if not (0 <= node_id < len(self.nodes)):
            raise ProvenanceError(f"unknown provenance node: {node_id}")
        return self.nodes[node_id]

    def selection_at(self, node_id: int) -> levels.Selection:
        self.node(node_id)
        if node_id not in self._selection_cache:
            states, _ = states_from_snapshot(self.nodes[node_id].state_snapshot)
            self._selection_cache[node_id] = levels.apply_all(
                self.corpus, states, self.annotations)
        return self._selection_cache[node_id]

    def commit(self, states: list[levels.LevelState],
               threshold: Optional[float] = None) -> int:
        """Record a state change as a child of the current node. Committing a
        snapshot identical to the current one is a no-op."""
        if threshold is None:
            threshold = self.threshold
        snapshot = canonical_state(states, threshold)
        if snapshot == self.nodes[self.current_id].state_snapshot:
            return self.current_id
        new_id = self._append(self.current_id, snapshot)
        self.states = [levels.LevelState.from_dict(d.to_dict()) for d in states]
        self.threshold = threshold
        self.current_id = new_id
        return new_id

    def navigate(self, node_id: int) -> levels.Selection:
        """Restore a previous state; verifies the stored selection digest."""
        node = self.node(node_id)
        states, threshold = states_from_snapshot(node.state_snapshot)
        selection = levels.apply_all(self.corpus, states, self.annotations)
        digest = selection_digest(selection)
        if digest != node.selection_digest:
            raise ProvenanceError(
                f"digest mismatch at node {node_id}: corpus changed under the session?")
        self.states = states
        self.threshold = threshold
        self.current_id = node_id
        self._selection_cache[node_id] = selection
        return selection

    def star(self, node_id: int, starred: bool = True) -> None:
        self.node(node_id).starred = starred

    def set_note(self, node_id: int, note: str) -> None:
        self.node(node_id).note = note

    def graph(self) -> dict:
        return {
            "currentId": self.current_id,
            "nodes": [
                {
                    "nodeId": n.node_id,
                    "parent": n.parent,
                    "starred": n.starred,
                    "note": n.note,
                    "createdAt": n.created_at,
                    "selectionDigest": n.selection_digest,
                    "stateSnapshot": json.loads(n.state_snapshot),
                }
                for n in self.nodes
            ],
        }

    # ------------------------------------------------------------------
    # Reporting

    def report_text(self) -> str:
        """Report in two synchronized forms: markdown for people, an embedded
        JSON block for replay."""
        lines = ["# Analysis session report", ""]
        lines.append(f"- corpus digest: `{self.corpus.identity_digest()}`")
        lines.append(f"- nodes: {len(self.nodes)}")
        lines.append(f"- current node: {self.current_id}")
        lines.append("")
        starred = [n for n in self.nodes if n.starred]
        lines.append("## Starred states")
        lines.append("")
        if starred:
            for n in starred:
                note = f" - {n.note}" if n.note else ""
                lines.append(f"- node {n.node_id}{note}")
        else:
            lines.append("(none)")
        lines.append("")
        lines.append("## History")
        lines.append("")
        for n in self.nodes:
            stamp = time.strftime("%Y-%m-%d %H:%M:%SZ", time.gmtime(n.created_at))
            star = " *" if n.starred else ""
            lines.append(f"### Node {n.node_id}{star}")
            lines.append("")
            lines.append(f"- parent: {n.parent if n.parent is not None else '(root)'}")
            lines.append(f"- created: {stamp}")
            lines.append(f"- selection digest: `{n.selection_digest}`")
            if n.note:
                lines.append(f"- note: {n.note}")
            lines.append("")
            lines.append("```json")
            lines.append(json.dumps(json.loads(n.state_snapshot), indent=2, sort_keys=True))
            lines.append("```")
            lines.append("")

        machine = {
            "format": "commlens-report",
            "version": REPORT_FORMAT_VERSION,
            "corpusDigest": self.corpus.identity_digest(),
            "currentId": self.current_id,
            "nodes": [
                {
                    "nodeId": n.node_id, "parent": n.parent,
                    "stateSnapshot": n.state_snapshot,
                    "selectionDigest": n.selection_digest,
                    "starred": n.starred, "note": n.note, "createdAt": n.created_at,
                }
                for n in self.nodes
            ],
        }
        lines.append("## Machine-readable replay section")
        lines.append("")
        lines.append(_REPORT_MARKER)
        lines.append(json.dumps(machine, sort_keys=True, indent=1))
        lines.append("```")
        lines.append("")
        return "\n".join(lines)

    def export_report(self, path: str) -> None:
        text = self.report_text()
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def parse_report(text: str) -> dict:
    start = text.find(_REPORT_MARKER)
    if start < 0:
        raise ProvenanceError("no machine-readable section found in report")
    start += len(_REPORT_MARKER)
    end = text.find("```", start)
    if end < 0:
        raise ProvenanceError("unterminated machine-readable section")
    doc = json.loads(text[start:end])
    if doc.get("format") != "commlens-report":
        raise ProvenanceError("not a session report")
    return doc


def replay(report: dict, corpus: Corpus, annotations: Optional[dict] = None) -> list[bool]:
    """Recompute every node's selection against the corpus; returns one
    digest-match flag per node, in node order."""
    if report.get("corpusDigest") != corpus.identity_digest():
        raise ProvenanceError("report was produced against a different corpus")
    results = []
    for n in report["nodes"]:
        states, _ = states_from_snapshot(n["stateSnapshot"])
        selection = levels.apply_all(corpus, states, annotations or {})
        results.append(selection_digest(selection) == n["selectionDigest"])
    return results


def check_graph(report: dict) -> None:
    """Structural validation: single root, acyclic, parent precedes child."""
    nodes = report["nodes"]
    roots = [n for n in nodes if n["parent"] is None]
    if len(roots) != 1:
        raise ProvenanceError(f"expected exactly one root, found {len(roots)}")
    seen = set()
    for n in nodes:
        if n["parent"] is not None and n["parent"] not in seen:
            raise ProvenanceError(f"node {n['nodeId']} appears before its parent")
        seen.add(n["nodeId"])
