"""Bot behaviour: landscape polling, greedy targeting, reply tactics and theme handling."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from ..model import SCORING_COLUMNS, TweetLog, columns_of, gather, theme_counts, top_themes
from .human import ActionWeight, ActionWeights, compat_columns, engagement_columns

VULNERABLE = "vulnerable"
ENGAGE = "engage"


def _bot_weights():
    # compatibility weights as for humans; metric weights favour controversy on reply
    return {
        "like": ActionWeight(1.0, 1.0, 1.0, 0.8, 1.0, 0.1, 0.1),
        "retweet": ActionWeight(1.0, 1.0, 1.0, 0.8, 1.0, 1.2, 1.0),
        "quote": ActionWeight(1.0, 1.0, 1.0, 0.8, 1.0, 1.0, 1.0),
        "reply": ActionWeight(1.0, 1.0, 0.8, 1.0, 0.8, 1.0, 1.2, contrarian=True),
    }


def bot_action_weights() -> ActionWeights:
    return ActionWeights(_bot_weights())


@dataclass
class BotPolicy:
    reply_tactic_mix: float = 1.0          # P(vulnerable tactic) per reply
    poll_size: int = 40
    adopt_themes: bool = True
    conserved_themes: frozenset = field(default_factory=frozenset)
    max_new_theme_fraction: float = 0.4

    def __post_init__(self):
        self.conserved_themes = frozenset(self.conserved_themes)
        if self.poll_size <= 0:
            raise ValueError("poll_size must be positive")
        if not 0.0 <= self.reply_tactic_mix <= 1.0:
            raise ValueError("reply_tactic_mix must lie in [0, 1]")
        if not 0.0 <= self.max_new_theme_fraction <= 1.0:
            raise ValueError("max_new_theme_fraction must lie in [0, 1]")


def poll_tweets(bot, world) -> int:
    """Save the newest tweets by others into the bot's memory, as a search would.

    Only tweets created since the bot's previous poll are considered, so a
    quiet feed does not flood memory with copies of the same results.
    Returns the number of tweets stored.
    """
    ids = world.content_ids
    if not ids:
        return 0
    tweets = world.tweets
    size = bot.policy.poll_size if bot.policy else 40
    me = bot.id
    lo = bisect_right(ids, bot.last_polled)
    bot.last_polled = ids[-1]
    # own tweets are skipped, so look a little further back than ``size``
    start = max(lo, len(ids) - size - 8)
    while True:
        window = ids[start:]
        if isinstance(tweets, TweetLog):
            arr = np.array(window, dtype=np.int64)
            authors = tweets.author[arr]
            keep = authors != me
            picked = arr[keep][-size:].tolist()
            picked_authors = authors[keep][-size:].tolist()
        else:
            picked = [tid for tid in window if tweets[tid].author != me][-size:]
            picked_authors = [tweets[tid].author for tid in picked]
        if len(picked) >= size or start == lo:
            break
        start = max(lo, start - 2 * size)
    bot.seen.extend(picked)
    bot.authors.extend(picked_authors)
    bot.seen_all.update(picked_authors)
    return len(picked)


def bot_scores_columns(bot_stance: int, bot_mask: int, cols, follower_counts, w: ActionWeight) -> np.ndarray:
    """Unweighted g/sum(g) + c/sum(c) + f/sum(f); zero totals drop their term.

    ``cols`` is (stance, mask, likes, retweets, replies) and
    ``follower_counts`` the candidate authors' follower counts.
    """
    stance, mask, likes, retweets, replies = cols
    g = engagement_columns(likes, retweets, replies, w)
    c = compat_columns(bot_stance, bot_mask, stance, mask, w)
    f = np.asarray(follower_counts, dtype=float)
    total = np.zeros(len(g))
    for col in (g, c, f):
        sc = col.sum()
        if sc > 0:
            total += col / sc
    return total


def bot_scores(bot, candidates, w: ActionWeight, followers) -> list[float]:
    """Scores for candidate tweets; ``followers[a]`` is author ``a``'s follower collection."""
    if not candidates:
        return []
    f = [len(followers[t.author]) for t in candidates]
    return bot_scores_columns(bot.stance, bot.mask, columns_of(candidates), f, w).tolist()


def _argmax_lowest_id(ids, scores) -> int:
    best, best_score = -1, -math.inf
    for i, sc in zip(ids, scores):
        if sc > best_score or (sc == best_score and i < best):
            best, best_score = i, sc
    return best


def bot_select_target(bot, candidates, action: str, weights: ActionWeights, followers):
    """Deterministic argmax of the bot score; ties go to the lower tweet id."""
    if not candidates:
        return None
    scores = bot_scores(bot, candidates, weights[action], followers)
    best = _argmax_lowest_id([t.id for t in candidates], scores)
    return next(t for t in candidates if t.id == best)


def bot_select_target_ids(bot, ids: np.ndarray, tweets, action: str, weights: ActionWeights,
                          follower_counts: np.ndarray):
    """Id-array form of :func:`bot_select_target`; ``follower_counts`` is indexed by agent id."""
    if len(ids) == 0:
        return None
    cols = gather(tweets, ids, SCORING_COLUMNS + ("author",))
    scores = bot_scores_columns(bot.stance, bot.mask, cols[:5], follower_counts[cols[5]], weights[action])
    # ids ascend, so the first maximum is the lowest id
    return tweets[int(ids[int(np.argmax(scores))])]


def lower_quartile(values) -> float:
    """25th percentile with linear interpolation between order statistics."""
    xs = sorted(values)
    pos = 0.25 * (len(xs) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


def draw_tactic(policy: BotPolicy, rng) -> str:
    return VULNERABLE if rng.random() < policy.reply_tactic_mix else ENGAGE


def bot_reply_candidates(bot, candidates, tactic: str, followees) -> list:
    """Vulnerable tactic keeps tweets whose authors sit in the lowest followee quartile.

    ``followees[a]`` is author ``a``'s followee collection.
    """
    if tactic != VULNERABLE or not candidates:
        return list(candidates)
    per_author = {a: len(followees[a]) for a in {t.author for t in candidates}}
    cut = lower_quartile(per_author.values())
    return [t for t in candidates if per_author[t.author] <= cut]


def bot_reply_candidate_ids(ids: np.ndarray, tweets, tactic: str, followee_counts: np.ndarray) -> np.ndarray:
    """Id-array form of :func:`bot_reply_candidates`; counts are indexed by agent id."""
    if tactic != VULNERABLE or len(ids) == 0:
        return ids
    (authors,) = gather(tweets, ids, ("author",))
    counts = followee_counts[authors]
    cut = lower_quartile(followee_counts[np.unique(authors)].tolist())
    return ids[counts <= cut]


def seen_theme_counts(bot, tweets) -> dict[int, int]:
    """How many tweets in the bot's seen memory carry each theme."""
    if not bot.seen:
        return {}
    ids = np.fromiter(bot.seen, dtype=np.int64, count=len(bot.seen))
    (masks,) = gather(tweets, ids, ("mask",))
    return theme_counts(masks)


def _enforce_conserved(chosen: list[int], other_half: list[int], conserved, capacity: int, rng):
    for t in sorted(conserved):
        if t not in chosen:
            chosen.append(t)
    while len(chosen) > capacity:
        victims = [t for t in other_half if t in chosen and t not in conserved]
        if not victims:
            victims = [t for t in chosen if t not in conserved]
        chosen.remove(victims[int(rng.random() * len(victims))])
    return chosen


def bot_compose_themes(bot, parent, rng, tweets=None, capacity: int = 5) -> list[int]:
    """Half the slots from the parent (or the bot's most-seen themes), half from the bot's own pool.

    The outside half gets the extra slot when ``capacity`` is odd. Conserved
    themes are then forced in, pushing out outside-half themes first.
    """
    outside_slots = (capacity + 1) // 2
    own_slots = capacity - outside_slots
    if parent is not None:
        pool = sorted(parent.themes)
        outside = rng.sample(pool, min(outside_slots, len(pool)))
    else:
        counts = seen_theme_counts(bot, tweets) if tweets is not None else {}
        outside = top_themes(counts, outside_slots)
    own_pool = [t for t in bot.themes if t not in outside]
    own = rng.sample(own_pool, min(own_slots, len(own_pool)))
    chosen = outside + own
    conserved = bot.policy.conserved_themes if bot.policy else frozenset()
    if conserved:
        chosen = _enforce_conserved(chosen, outside, conserved, capacity, rng)
    if not chosen:
        chosen = list(bot.themes[:1])
    return chosen


def bot_adopt_themes(bot, tweets, capacity: int = 5) -> list[int]:
    """Take up to floor(fraction * capacity) of the most frequent seen themes not yet held.

    Candidates are the top themes in memory; those already held are skipped
    rather than replaced by less popular ones. When full, the least recently
    acquired non-conserved theme makes room. Returns the adopted themes.
    """
    policy = bot.policy
    if policy is not None and not policy.adopt_themes:
        return []
    fraction = policy.max_new_theme_fraction if policy else 0.4
    k = int(fraction * capacity)
    if k <= 0 or not bot.seen:
        return []
    conserved = policy.conserved_themes if policy else frozenset()
    top = top_themes(seen_theme_counts(bot, tweets), k)
    adopted = [t for t in top if t not in bot.themes]
    if not adopted:
        return []
    themes = list(bot.themes)
    for t in adopted:
        if len(themes) >= capacity:
            evictable = [x for x in themes if x not in conserved and x not in adopted]
            if not evictable:
                break
            themes.remove(evictable[0])
        themes.append(t)
    bot.set_themes(themes)
    return adopted
