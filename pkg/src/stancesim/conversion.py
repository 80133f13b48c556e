"""Stance infection: per-wake conversion from memory, theme adoption and resistance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SCORING_COLUMNS, STANCES, Stance, columns_of, gather, jaccard, theme_counts, top_themes


@dataclass(frozen=True)
class ConversionWeights:
    w_like: float = 1.0
    w_rt: float = 0.5
    w_reply: float = -0.5
    w_s: float = 1.0
    w_t: float = 0.8


@dataclass(frozen=True)
class ResistancePolicy:
    low: float = 0.5
    mean: float = 0.75
    high: float = 1.0
    sd: float = 0.25
    same_delta: float = 0.01
    adjacent_delta: float = -0.005
    opposite_delta: float = -0.01

    def delta(self, distance: int) -> float:
        return (self.same_delta, self.adjacent_delta, self.opposite_delta)[distance]


HUMAN_ADOPT_FRACTION = 0.6
ZERO_WEIGHT = 1e-12


def init_resistance(policy: ResistancePolicy, rng) -> float:
    """Rejection-sample N(mean, sd) until the draw falls in [low, high]."""
    if policy.sd == 0:
        return policy.mean
    while True:
        x = rng.gauss(policy.mean, policy.sd)
        if policy.low <= x <= policy.high:
            return x


def conversion_candidate_ids(agent) -> np.ndarray:
    """Distinct tweet ids in the agent's seen and own memories, ascending."""
    ids = set(agent.seen)
    ids.update(agent.own)
    return np.array(sorted(ids), dtype=np.int64)


def conversion_candidates(agent, tweets) -> list:
    """Distinct tweets in the agent's seen and own memories, in id order."""
    return [tweets[int(i)] for i in conversion_candidate_ids(agent)]


def stance_weights_columns(stance: int, mask: int, cols, memory: int,
                           weights: ConversionWeights = ConversionWeights()) -> np.ndarray:
    """Conversion weight per stance, indexed ``[con, neu, pro]``.

    w(S) = r_g(S) / m + m * r_c(S) where r_c is the stance's share of total
    compatibility and r_g sums per-metric normalized weighted engagement
    over the stance's tweets. Stances absent from the candidates get 0 and
    negative totals are clamped to 0. ``cols`` is (stance, mask, likes,
    retweets, replies) for the candidate tweets.
    """
    c_stance, c_mask, likes, retweets, replies = cols
    slot = c_stance + 1
    g = np.zeros(len(slot))
    for col, w in ((likes, weights.w_like), (retweets, weights.w_rt), (replies, weights.w_reply)):
        total = col.sum()
        if total:
            g += col * (w / total)
    comp = (1.0 - np.abs(c_stance - int(stance)) * 0.5) * weights.w_s + jaccard(mask, c_mask) * weights.w_t
    rg = np.bincount(slot, weights=g, minlength=3)
    rc = np.bincount(slot, weights=comp, minlength=3)
    present = np.bincount(slot, minlength=3) > 0
    total_c = rc.sum()
    kc = memory / total_c if total_c > 0 else 0.0
    w = rg / memory + rc * kc
    w[~present] = 0.0
    np.maximum(w, 0.0, out=w)
    # engagement terms can cancel to rounding residue; treat that as zero
    if present.any() and w.sum() <= ZERO_WEIGHT:
        w = present.astype(float)
    return w


def stance_weights(stance: int, mask: int, candidates, memory: int,
                   weights: ConversionWeights = ConversionWeights()) -> list[float]:
    """:func:`stance_weights_columns` for a list of Tweet objects."""
    return stance_weights_columns(stance, mask, columns_of(candidates), memory, weights).tolist()


def sample_stance(weights: list[float], u: float) -> Stance:
    total = weights[0] + weights[1] + weights[2]
    x = u * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if x < acc and w > 0:
            return STANCES[i]
    for i in (2, 1, 0):
        if weights[i] > 0:
            return STANCES[i]
    raise ValueError("no stance has positive weight")


def adopt_themes(agent, infecting_masks, capacity: int = 5,
                 fraction: float = HUMAN_ADOPT_FRACTION) -> list[int]:
    """Pick up the infecting stance's most frequent themes that the agent lacks.

    ``infecting_masks`` are the theme masks of the candidate tweets holding
    the infecting stance. Only the top ``floor(fraction * capacity)`` themes
    are considered; when the set is full the least recently acquired theme
    is evicted.
    """
    k = int(fraction * capacity)
    if k <= 0:
        return []
    top = top_themes(theme_counts(infecting_masks), k)
    held = agent.themes
    new = [th for th in top if th not in held]
    if not new:
        return []
    themes = list(held)
    for th in new:
        if len(themes) >= capacity:
            themes.pop(0)
        themes.append(th)
    agent.set_themes(themes)
    return new


def read_conversion(agent, tweets, rng, policy: ResistancePolicy = ResistancePolicy(),
                    weights: ConversionWeights = ConversionWeights(), capacity: int = 5,
                    adopt_fraction: float = HUMAN_ADOPT_FRACTION):
    """One infection check for a human on waking.

    Returns ``(new_stance, adopted_themes)`` when the uniform draw clears the
    agent's resistance, otherwise None. A draw equal to the resistance does
    not clear it, so resistance 1.0 means immunity.
    """
    if agent.is_bot:
        return None
    if rng.random() <= agent.resistance:
        return None
    ids = conversion_candidate_ids(agent)
    if len(ids) == 0:
        return None
    cols = gather(tweets, ids, SCORING_COLUMNS + ("author",))
    w = stance_weights_columns(agent.stance, agent.mask, cols[:5], agent.memory, weights)
    new = sample_stance(w.tolist(), rng.random())
    old = agent.stance
    r = agent.resistance + policy.delta(abs(old - new))
    agent.resistance = 0.0 if r < 0.0 else 1.0 if r > 1.0 else r
    hit = cols[0] == int(new)
    adopted = adopt_themes(agent, cols[1][hit], capacity, adopt_fraction)
    if new != old:
        agent.stance = new
        me = agent.id
        for author in cols[5][hit].tolist():
            if author != me:
                agent.influenced_by[author] += 1
    return new, adopted
