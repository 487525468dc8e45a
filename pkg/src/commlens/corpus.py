"""Immutable message corpus: participants, timestamp-ordered messages, pair index."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

CORPUS_FORMAT_VERSION = 1

# recipients packed into one field are split on these
_RECIPIENT_SEPARATORS = (";", ",")


class CorpusError(Exception):
    pass


class UnknownParticipantError(CorpusError):
    def __init__(self, participant_id: str):
        super().__init__(f"unknown participant id: {participant_id!r}")
        self.participant_id = participant_id


@dataclass(frozen=True)
class Participant:
    id: str
    display_name: str = ""
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise CorpusError("participant id must be nonempty")


@dataclass(frozen=True)
class Message:
    id: str
    sender: str
    receiver: str
    timestamp: int  # epoch seconds UTC
    content: str = ""
    channel: str = "email"
    meta: dict[str, str] = field(default_factory=dict)


class Corpus:
    """Multidigraph over participants; messages are the (parallel) edges.

    Immutable after construction and safe to share across threads. Messages
    are totally ordered by (timestamp, id); the pair index maps each ordered
    (sender, receiver) pair to its message ids in that same order.
    """

    def __init__(self, participants: Iterable[Participant], messages: Iterable[Message]):
        self.participants: dict[str, Participant] = {}
        for p in participants:
            if p.id in self.participants:
                raise CorpusError(f"duplicate participant id: {p.id!r}")
            self.participants[p.id] = p

        msgs = sorted(messages, key=lambda m: (m.timestamp, m.id))
        seen: set[str] = set()
        for m in msgs:
            if m.id in seen:
                raise CorpusError(f"duplicate message id: {m.id!r}")
            seen.add(m.id)
            if m.sender not in self.participants:
                raise UnknownParticipantError(m.sender)
            if m.receiver not in self.participants:
                raise UnknownParticipantError(m.receiver)
        self.messages: list[Message] = msgs
        self.by_id: dict[str, Message] = {m.id: m for m in msgs}

        self.pair_index: dict[tuple[str, str], list[str]] = {}
        for m in msgs:
            self.pair_index.setdefault((m.sender, m.receiver), []).append(m.id)

        if msgs:
            self.time_extent: Optional[tuple[int, int]] = (msgs[0].timestamp, msgs[-1].timestamp)
        else:
            self.time_extent = None

    def __len__(self) -> int:
        return len(self.messages)

    def require_participant(self, pid: str) -> Participant:
        try:
            return self.participants[pid]
        except KeyError:
            raise UnknownParticipantError(pid) from None

    def messages_between(self, a: str, b: str,
                         time_range: Optional[tuple[int, int]] = None) -> list[Message]:
        """Messages sent a -> b, optionally restricted to [start, end] inclusive."""
        self.require_participant(a)
        self.require_participant(b)
        ids = self.pair_index.get((a, b), [])
        out = [self.by_id[i] for i in ids]
        if time_range is not None:
            start, end = time_range
            out = [m for m in out if start <= m.timestamp <= end]
        return out

    def identity_digest(self) -> str:
        """Stable hash identifying corpus contents; used by provenance reports."""
        import hashlib
        h = hashlib.sha256()
        for m in self.messages:
            h.update(m.id.encode())
            h.update(str(m.timestamp).encode())
        h.update(str(len(self.participants)).encode())
        return h.hexdigest()


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    reject_lines: list[tuple[int, str]] = field(default_factory=list)


def _parse_timestamp(raw) -> int:
    if isinstance(raw, (int, float)):
        return int(raw)
    text = str(raw).strip()
    if not text:
        raise ValueError("empty timestamp")
    try:
        return int(float(text))
    except ValueError:
        pass
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _split_recipients(raw) -> list[str]:
    if isinstance(raw, list):
        return [str(r).strip() for r in raw if str(r).strip()]
    text = str(raw)
    for sep in _RECIPIENT_SEPARATORS:
        if sep in text:
            return [part.strip() for part in text.split(sep) if part.strip()]
    text = text.strip()
    return [text] if text else []


def ingest(records: Iterable[dict], schema: dict[str, str],
           report: Optional[IngestReport] = None) -> Corpus:
    """Build a corpus from raw records.

    ``schema`` maps logical fields (sender, receiver, time, content, id,
    channel) to record keys. A record with k recipients yields k messages
    sharing a ``meta["group"]`` key, one per (sender, recipient) pair.
    Records missing sender, recipient, or timestamp are rejected and counted;
    ingest continues.
    """
    sender_key = schema.get("sender", "sender")
    receiver_key = schema.get("receiver", "receiver")
    time_key = schema.get("time", "time")
    content_key = schema.get("content", "content")
    id_key = schema.get("id")
    channel_key = schema.get("channel")

    if report is None:
        report = IngestReport()

    participants: dict[str, Participant] = {}
    messages: list[Message] = []

    def ensure_participant(pid: str):
        if pid not in participants:
            participants[pid] = Participant(id=pid, display_name=pid)

    for lineno, rec in enumerate(records, start=1):
        sender = str(rec.get(sender_key, "") or "").strip()
        recipients = _split_recipients(rec.get(receiver_key, "") or "")
        raw_time = rec.get(time_key)
        if not sender or not recipients or raw_time is None or str(raw_time).strip() == "":
            report.rejected += 1
            report.reject_lines.append((lineno, "missing sender/recipient/timestamp"))
            continue
        try:
            ts = _parse_timestamp(raw_time)
        except (ValueError, OverflowError):
            report.rejected += 1
            report.reject_lines.append((lineno, f"unparseable timestamp: {raw_time!r}"))
            continue

        content = str(rec.get(content_key, "") or "")
        channel = str(rec.get(channel_key, "email") or "email") if channel_key else "email"
        base_id = str(rec.get(id_key)) if id_key and rec.get(id_key) else f"m{lineno:07d}"

        ensure_participant(sender)
        group = len(recipients) > 1
        for k, recipient in enumerate(recipients):
            ensure_participant(recipient)
            meta = {"group": base_id} if group else {}
            mid = f"{base_id}/{k}" if group else base_id
            messages.append(Message(id=mid, sender=sender, receiver=recipient,
                                    timestamp=ts, content=content, channel=channel,
                                    meta=meta))
        report.accepted += 1

    return Corpus(participants.values(), messages)


def iter_csv(stream: io.TextIOBase) -> Iterable[dict]:
    yield from csv.DictReader(stream)


def iter_jsonl(stream: io.TextIOBase) -> Iterable[dict]:
    for line in stream:
        line = line.strip()
        if line:
            yield json.loads(line)


def save_corpus(corpus: Corpus, path: str) -> None:
    """Write the versioned corpus file: one JSON header line, then one
    message per line. Round-trip stable."""
    with open(path, "w", encoding="utf-8") as f:
        header = {
            "format": "commlens-corpus",
            "version": CORPUS_FORMAT_VERSION,
            "participants": [
                {"id": p.id, "displayName": p.display_name, "attributes": p.attributes}
                for p in sorted(corpus.participants.values(), key=lambda p: p.id)
            ],
        }
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for m in corpus.messages:
            f.write(json.dumps({
                "id": m.id, "sender": m.sender, "receiver": m.receiver,
                "timestamp": m.timestamp, "content": m.content,
                "channel": m.channel, "meta": m.meta,
            }, sort_keys=True) + "\n")


def load_corpus(path: str) -> Corpus:
    with open(path, encoding="utf-8") as f:
        header = json.loads(f.readline())
        if header.get("format") != "commlens-corpus":
            raise CorpusError(f"not a corpus file: {path}")
        if header.get("version") != CORPUS_FORMAT_VERSION:
            raise CorpusError(f"unsupported corpus version: {header.get('version')}")
        participants = [
            Participant(id=p["id"], display_name=p.get("displayName", ""),
                        attributes=p.get("attributes", {}))
            for p in header["participants"]
        ]
        messages = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            messages.append(Message(id=d["id"], sender=d["sender"], receiver=d["receiver"],
                                    timestamp=d["timestamp"], content=d.get("content", ""),
                                    channel=d.get("channel", "email"), meta=d.get("meta", {})))
    return Corpus(participants, messages)
