import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from commlens.corpus import Corpus, Message, Participant
from commlens.demo import generate_demo_corpus

WORDS = ("report budget deadline call draft review forward desk counsel "
         "schedule notes offsite tracker roadmap summary audit weekend").split()


def make_random_corpus(seed: int, participants: int = 8, messages: int = 120,
                       time_span: int = 30 * 86400, with_content: bool = True) -> Corpus:
    rng = random.Random(seed)
    pids = [f"p{i:02d}" for i in range(participants)]
    msgs = []
    for k in range(messages):
        a, b = rng.sample(pids, 2)
        content = " ".join(rng.choices(WORDS, k=rng.randint(3, 10))) if with_content else ""
        msgs.append(Message(id=f"m{k:05d}", sender=a, receiver=b,
                            timestamp=rng.randint(0, time_span), content=content))
    return Corpus([Participant(id=p) for p in pids], msgs)


@pytest.fixture(scope="session")
def demo_fixture():
    corpus, truth = generate_demo_corpus(message_count=2000)
    return corpus, truth
