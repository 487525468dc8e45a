"""Seeded synthetic demo fixture: an Enron-shaped corpus with a planted
financial-fraud scenario.

A small set of senders spreads word about legal trouble tying people to
organizations in California during the first nine months of 2001; exactly
one participant receives such a message from every one of them. All other
traffic is filler that never combines all four entity categories
(PERSON, ORG, LAW, GPE) in a single message, so the concept query pipeline
isolates the plant exactly.
"""

from __future__ import annotations

import random
from datetime import datetime, timezone

from .corpus import Corpus, Message, Participant

DEMO_SEED = 7

FRAUD_WINDOW = (
    int(datetime(2001, 1, 1, tzinfo=timezone.utc).timestamp()),
    int(datetime(2001, 9, 30, 23, 59, 59, tzinfo=timezone.utc).timestamp()),
)

DEMO_GAZETTEER: dict[str, list[str]] = {
    "PERSON": ["Alice", "Bob", "Carol", "David", "Erin", "Frank", "Grace", "Heidi"],
    "ORG": ["Enron", "Dynegy", "Westcorp", "Pacific Utility", "Calpine"],
    "LAW": ["indictment", "Securities Act", "Section 17200", "subpoena", "statute"],
    "GPE": ["California"],
}

_PLANT_TEMPLATES = [
    "please review the {law} naming {person} together with {org} operations in California",
    "heads up the {law} now ties {person} and {org} to filings made in California",
    "confidential the {law} against {person} covers {org} subsidiaries across California",
]

# filler never combines all four categories in one message
_NOISE_TEMPLATES = [
    "meeting notes attached nothing urgent to report this week",
    "{person} asked about the {org} numbers before the call",
    "the {org} desk flagged the {law} language for counsel",
    "{person} is traveling to California for the offsite",
    "reminder the {law} deadline moved please update the tracker",
    "lunch with {person} went long we covered the roadmap",
    "can you forward the {org} summary when it lands",
    "California schedules are final send corrections to the desk",
    "{person} and {person2} want the draft before the weekend",
    "the audit of {org} wrapped without findings",
]

_START = int(datetime(2000, 1, 1, tzinfo=timezone.utc).timestamp())
_END = int(datetime(2002, 6, 30, tzinfo=timezone.utc).timestamp())


def generate_demo_corpus(seed: int = DEMO_SEED, participant_count: int = 151,
                         message_count: int = 5000) -> tuple[Corpus, dict]:
    """Returns (corpus, ground_truth). Deterministic for a fixed seed.

    ground_truth: plantedSenders, plantedReceiver, plantedMessageIds, window.
    """
    rng = random.Random(seed)
    pids = [f"user{i:03d}@corp.example" for i in range(participant_count)]
    participants = [Participant(id=p, display_name=p.split("@")[0]) for p in pids]

    planted_senders = sorted(rng.sample(pids, 6))
    receiver_pool = [p for p in pids if p not in planted_senders]
    planted_receiver = rng.choice(receiver_pool)

    messages: list[Message] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"d{counter:07d}"

    def plant_content() -> str:
        tpl = rng.choice(_PLANT_TEMPLATES)
        return tpl.format(law=rng.choice(DEMO_GAZETTEER["LAW"]),
                          person=rng.choice(DEMO_GAZETTEER["PERSON"]),
                          org=rng.choice(DEMO_GAZETTEER["ORG"]))

    planted_ids = []
    for sender in planted_senders:
        # one planted message to the common receiver, plus a couple elsewhere
        targets = [planted_receiver]
        extra = rng.sample([p for p in receiver_pool if p != planted_receiver], 2)
        targets.extend(extra)
        for tgt in targets:
            ts = rng.randint(FRAUD_WINDOW[0], FRAUD_WINDOW[1])
            mid = next_id()
            planted_ids.append(mid)
            messages.append(Message(id=mid, sender=sender, receiver=tgt,
                                    timestamp=ts, content=plant_content()))

    def noise_content() -> str:
        tpl = rng.choice(_NOISE_TEMPLATES)
        return tpl.format(person=rng.choice(DEMO_GAZETTEER["PERSON"]),
                          person2=rng.choice(DEMO_GAZETTEER["PERSON"]),
                          org=rng.choice(DEMO_GAZETTEER["ORG"]),
                          law=rng.choice(DEMO_GAZETTEER["LAW"]))

    # a few conversation bursts so the dynamics view has episodes to show
    burst_budget = min(message_count // 10, 400)
    while burst_budget > 0:
        a, b = rng.sample(pids, 2)
        t = rng.randint(_START, _END - 86400)
        length = rng.randint(4, 10)
        for k in range(length):
            t += rng.randint(120, 1800)
            sender, receiver = (a, b) if k % 2 == 0 else (b, a)
            messages.append(Message(id=next_id(), sender=sender, receiver=receiver,
                                    timestamp=t, content=noise_content()))
        burst_budget -= length

    while len(messages) < message_count:
        sender, receiver = rng.sample(pids, 2)
        messages.append(Message(id=next_id(), sender=sender, receiver=receiver,
                                timestamp=rng.randint(_START, _END),
                                content=noise_content()))

    corpus = Corpus(participants, messages)
    ground_truth = {
        "plantedSenders": planted_senders,
        "plantedReceiver": planted_receiver,
        "plantedMessageIds": sorted(planted_ids),
        "window": list(FRAUD_WINDOW),
    }
    return corpus, ground_truth
