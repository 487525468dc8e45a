"""Conversational dynamics: density modeling and episode segmentation.

Communication between an ordered pair is modeled as a continuous density,
a sum of unnormalized Gaussian kernels centered at each message time shifted
by mu, with effective width sigma*h. Episodes are maximal intervals where
the density stays at or above theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Corpus, Message


class DynamicsError(Exception):
    pass


@dataclass(frozen=True)
class DynamicsParams:
    mu: float = 0.0              # kernel center shift, seconds
    sigma: float = 6 * 3600.0    # width of temporal influence, seconds
    h: float = 1.0               # bandwidth scale
    theta: float = 0.5           # density threshold
    min_messages: int = 1        # episode granularity

    def __post_init__(self):
        if not (self.sigma > 0):
            raise DynamicsError("sigma must be > 0")
        if not (self.h > 0):
            raise DynamicsError("h must be > 0")
        if not (self.theta > 0):
            raise DynamicsError("theta must be > 0")
        if self.min_messages < 1:
            raise DynamicsError("min_messages must be >= 1")

    @property
    def width(self) -> float:
        return self.sigma * self.h

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicsParams":
        return cls(mu=float(d.get("mu", 0.0)),
                   sigma=float(d.get("sigma", 6 * 3600.0)),
                   h=float(d.get("h", 1.0)),
                   theta=float(d.get("theta", 0.5)),
                   min_messages=int(d.get("minMessages", d.get("min_messages", 1))))


@dataclass
class Episode:
    pair: tuple[str, str]
    message_ids: list[str]
    start: int
    end: int
    initiator: str
    peak_density: float
    episode_id: str = field(default="")

    @property
    def count(self) -> int:
        return len(self.message_ids)


def density(timestamps: list[float], t: float, params: DynamicsParams) -> float:
    """f(t) = sum_i exp(-(t - t_i - mu)^2 / (2 (sigma h)^2)); 0 for no messages."""
    w2 = 2.0 * params.width ** 2
    total = 0.0
    for ti in timestamps:
        d = t - ti - params.mu
        e = (d * d) / w2
        if e < 700.0:  # exp underflow guard
            total += math.exp(-e)
    return total


def _density_at(centers: list[float], t: float, params: DynamicsParams) -> float:
    """Density over pre-shifted kernel centers (mu already applied)."""
    w2 = 2.0 * params.width ** 2
    total = 0.0
    for c in centers:
        e = ((t - c) * (t - c)) / w2
        if e < 700.0:
            total += math.exp(-e)
    return total


def _min_density_between(centers: list[float], a: float, b: float,
                         params: DynamicsParams) -> float:
    """Minimum of the density on [a, b], where no kernel center lies strictly
    inside. Cheap midpoint check first; otherwise the remaining interval is
    narrow enough (a few widths) to sample, then refine by ternary search."""
    if b <= a:
        return _density_at(centers, a, params)
    w = params.width
    mid = 0.5 * (a + b)
    f_mid = _density_at(centers, mid, params)
    if f_mid < params.theta:
        return f_mid
    step = w / 40.0
    n = max(2, int(math.ceil((b - a) / step)))
    best_t, best_f = a, _density_at(centers, a, params)
    for k in range(1, n + 1):
        t = a + (b - a) * k / n
        f = _density_at(centers, t, params)
        if f < best_f:
            best_t, best_f = t, f
    # refine around the best sample
    lo = max(a, best_t - (b - a) / n)
    hi = min(b, best_t + (b - a) / n)
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _density_at(centers, m1, params) < _density_at(centers, m2, params):
            hi = m2
        else:
            lo = m1
    refined = _density_at(centers, 0.5 * (lo + hi), params)
    return min(best_f, refined)


def merged_pair_messages(corpus: Corpus, pair: tuple[str, str]) -> list[Message]:
    """Both directions of traffic between the pair, in corpus order."""
    a, b = pair
    msgs = corpus.messages_between(a, b)
    if a != b:
        msgs = msgs + corpus.messages_between(b, a)
    return sorted(msgs, key=lambda m: (m.timestamp, m.id))


def segment_episodes(corpus: Corpus, pair: tuple[str, str],
                     params: DynamicsParams) -> list[Episode]:
    """Split the pair's merged bidirectional stream into episodes: maximal
    super-threshold runs of the density, dropping runs shorter than
    min_messages. Sorted by start time."""
    msgs = merged_pair_messages(corpus, pair)
    if not msgs:
        return []
    shifted = [m.timestamp + params.mu for m in msgs]

    runs: list[list[int]] = []
    current: list[int] = []
    prev_center = None
    for i, s in enumerate(shifted):
        f_here = _density_at(shifted, s, params)
        if f_here < params.theta:
            if current:
                runs.append(current)
                current = []
            prev_center = None
            continue
        if current and prev_center is not None:
            dip = _min_density_between(shifted, prev_center, s, params)
            if dip < params.theta:
                runs.append(current)
                current = []
        current.append(i)
        prev_center = s
    if current:
        runs.append(current)

    episodes = []
    for k, run in enumerate(r for r in runs if len(r) >= params.min_messages):
        members = [msgs[i] for i in run]
        peak = max(_density_at(shifted, shifted[i], params) for i in run)
        episodes.append(Episode(
            pair=pair,
            message_ids=[m.id for m in members],
            start=members[0].timestamp,
            end=members[-1].timestamp,
            initiator=members[0].sender,
            peak_density=peak,
            episode_id=f"{pair[0]}--{pair[1]}--{k}",
        ))
    return episodes


EPISODE_FEATURE_NAMES = (
    "durationSeconds",
    "messageCount",
    "directionBalance",
    "initiatorIsRowParticipant",
    "meanInterMessageGap",
    "peakDensity",
)


def episode_features(episode: Episode, corpus: Corpus) -> list[float]:
    """Fixed-order feature fragment for one episode (see EPISODE_FEATURE_NAMES)."""
    msgs = [corpus.by_id[i] for i in episode.message_ids]
    a, b = episode.pair
    fwd = sum(1 for m in msgs if m.sender == a)
    bwd = len(msgs) - fwd
    total = len(msgs)
    balance = (fwd - bwd) / total if total else 0.0
    if total > 1:
        gaps = [msgs[i + 1].timestamp - msgs[i].timestamp for i in range(total - 1)]
        mean_gap = sum(gaps) / len(gaps)
    else:
        mean_gap = 0.0
    return [
        float(episode.end - episode.start),
        float(total),
        balance,
        1.0 if episode.initiator == a else 0.0,
        float(mean_gap),
        episode.peak_density,
    ]
