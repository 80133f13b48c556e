"""Human action selection and execution."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..model import (ACTIONS, NAMESAKE, Activity, Kind, Role, Tweet, TweetLog, columns_of,
                     gather, jaccard)

log = logging.getLogger(__name__)

FOLLOW_RATE = 0.02 / 30.0     # 0.0666...% of all actions
UNFOLLOW_RATE = 0.01 / 30.0   # 0.0333...%
REPLY_AUDIENCE = 0.10


# --- weights ----------------------------------------------------------------

@dataclass(frozen=True)
class ActionWeight:
    """Selection weights for one targeted action.

    ``w_g``/``w_c`` weigh normalized engagement against normalized
    compatibility; ``w_s``/``w_t`` weigh stance against theme compatibility;
    the metric weights turn a tweet's counters into an engagement score.
    """

    w_g: float
    w_c: float
    w_s: float
    w_t: float
    w_like: float
    w_rt: float
    w_reply: float
    contrarian: bool = False   # reply variant scores stance *in*compatibility


def _human_weights():
    return {
        "like": ActionWeight(1.0, 1.0, 1.0, 0.8, 1.0, 0.1, 0.1),
        "retweet": ActionWeight(0.8, 1.0, 1.0, 0.8, 0.1, 1.0, 0.1),
        "quote": ActionWeight(0.8, 1.0, 1.0, 0.8, 0.1, 1.0, 0.1),
        "reply": ActionWeight(0.5, 1.0, 0.8, 1.0, 1.0, 1.0, 0.5, contrarian=True),
    }


@dataclass
class ActionWeights:
    per_action: dict = field(default_factory=_human_weights)

    def __getitem__(self, action: str) -> ActionWeight:
        return self.per_action[action]


# --- role tables --------------------------------------------------------------

# Mix over the non-social actions before a role's namesake boost.
BASE_PROFILE = {"like": 0.50, "tweet": 0.245, "quote": 0.04, "retweet": 0.18, "reply": 0.035}

NAMESAKE_SHARE = {
    Activity.HIGH: 0.55,
    Activity.MEDIUM: 0.60,
    Activity.LOW: 0.65,
}

SUPER_REPLIER_SHARE = 0.80


def role_vector(role: Role, activity: Activity, base: dict | None = None,
                namesake_share: float | None = None, *, super_share: float = SUPER_REPLIER_SHARE,
                follow_rate: float = FOLLOW_RATE, unfollow_rate: float = UNFOLLOW_RATE) -> dict:
    """Action distribution for one (role, activity) cell.

    The namesake action takes ``namesake_share``; follow/unfollow take their
    fixed rates; what is left is split over the other actions in proportion
    to ``base`` (or equally, for the SuperReplier).
    """
    base = dict(base or BASE_PROFILE)
    social = follow_rate + unfollow_rate
    main = NAMESAKE[role]
    if role is Role.SUPER_REPLIER:
        share = super_share
        others = [a for a in base if a != main]
        rest = {a: (1.0 - share - social) / len(others) for a in others}
    else:
        share = NAMESAKE_SHARE[Activity(activity)] if namesake_share is None else namesake_share
        others = {a: w for a, w in base.items() if a != main}
        total = sum(others.values())
        rest = {a: (1.0 - share - social) * w / total for a, w in others.items()}
    vec = {a: 0.0 for a in ACTIONS}
    vec.update(rest)
    vec[main] = share
    vec["follow"] = follow_rate
    vec["unfollow"] = unfollow_rate
    return vec


class RoleActionTable:
    """Per (role, activity) probability vectors over ``ACTIONS``."""

    def __init__(self, cells: dict | None = None):
        if cells is None:
            cells = {(r, a): role_vector(r, a) for r in Role for a in Activity}
        self.cells = {}
        for (role, act), vec in cells.items():
            vec = {k: float(vec.get(k, 0.0)) for k in ACTIONS}
            unknown = set(vec) - set(ACTIONS)
            if unknown:
                raise ValueError(f"unknown actions {sorted(unknown)}")
            if abs(sum(vec.values()) - 1.0) > 1e-9:
                raise ValueError(f"{role}/{act}: action probabilities sum to {sum(vec.values())}")
            if any(p < 0 for p in vec.values()):
                raise ValueError(f"{role}/{act}: negative probability")
            self.cells[(Role(role), Activity(act))] = vec

    def vector(self, role, activity) -> dict:
        return self.cells[(Role(role), Activity(activity))]

    def cumulative(self, role, activity, bot: bool = False) -> tuple[list[str], list[float]]:
        vec = dict(self.vector(role, activity))
        if bot:
            # bots never unfollow
            vec["follow"] += vec["unfollow"]
            vec["unfollow"] = 0.0
        names, cum, acc = [], [], 0.0
        for a in ACTIONS:
            if vec[a] > 0:
                acc += vec[a]
                names.append(a)
                cum.append(acc)
        cum[-1] = 1.0
        return names, cum


def choose_action(names: list[str], cum: list[float], u: float) -> str:
    for name, c in zip(names, cum):
        if u < c:
            return name
    return names[-1]


# --- scoring ------------------------------------------------------------------

def stance_compat(user: int, tweet: int) -> float:
    return 1.0 - abs(user - tweet) / 2.0


def theme_compat(user_mask: int, tweet_mask: int) -> float:
    union = (user_mask | tweet_mask).bit_count()
    if union == 0:
        log.debug("theme compatibility of two empty sets taken as 0")
        return 0.0
    return (user_mask & tweet_mask).bit_count() / union


def compatibility(user_stance: int, user_mask: int, tweet: Tweet, w: ActionWeight) -> float:
    cs = 1.0 - abs(user_stance - tweet.stance) / 2.0
    if w.contrarian:
        cs = 1.0 - cs
    return cs * w.w_s + theme_compat(user_mask, tweet.mask) * w.w_t


def engagement_score(tweet: Tweet, w: ActionWeight) -> float:
    return tweet.likes * w.w_like + tweet.retweets * w.w_rt + tweet.replies * w.w_reply


def compat_columns(user_stance: int, user_mask: int, stance, mask, w: ActionWeight) -> np.ndarray:
    s = 1.0 - np.abs(stance - int(user_stance)) * 0.5
    if w.contrarian:
        s = 1.0 - s
    return s * w.w_s + jaccard(user_mask, mask) * w.w_t


def engagement_columns(likes, retweets, replies, w: ActionWeight) -> np.ndarray:
    return likes * w.w_like + retweets * w.w_rt + replies * w.w_reply


def selection_weights_columns(user_stance: int, user_mask: int, cols, w: ActionWeight) -> np.ndarray:
    """p_x = w_g * g_x / sum(g) + w_c * c_x / sum(c) over column arrays.

    ``cols`` is (stance, mask, likes, retweets, replies); a zero total drops
    its term.
    """
    stance, mask, likes, retweets, replies = cols
    g = engagement_columns(likes, retweets, replies, w)
    c = compat_columns(user_stance, user_mask, stance, mask, w)
    p = np.zeros(len(g))
    sg = g.sum()
    if sg > 0:
        p += g * (w.w_g / sg)
    sc = c.sum()
    if sc > 0:
        p += c * (w.w_c / sc)
    return p


def selection_weights(user_stance: int, user_mask: int, candidates, w: ActionWeight) -> list[float]:
    return selection_weights_columns(user_stance, user_mask, columns_of(candidates), w).tolist()


def pick_index(weights, u: float) -> int:
    """Index drawn with probability proportional to ``weights`` using uniform ``u``.

    All-zero weights fall back to a uniform pick.
    """
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    cum = np.cumsum(weights)
    if n == 0:
        raise ValueError("cannot pick from an empty sequence")
    if cum[-1] <= 0:
        return min(int(u * n), n - 1)
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, n - 1)


def weighted_pick(items, weights, rng):
    return items[pick_index(weights, rng.random())]


def candidate_ids(agent, tweets, action: str) -> np.ndarray:
    """Ids of distinct seen tweets the agent may still act on, ascending."""
    ids = set(agent.seen)
    ids.difference_update(agent.dedup(action))
    arr = np.array(sorted(ids), dtype=np.int64)
    if arr.size == 0:
        return arr
    (authors,) = gather(tweets, arr, ("author",))
    return arr[authors != agent.id]


def target_candidates(agent, tweets, action: str) -> list[Tweet]:
    """Distinct seen tweets the agent may still act on, in id order."""
    return [tweets[int(i)] for i in candidate_ids(agent, tweets, action)]


def select_target(agent, candidates, action: str, weights: ActionWeights, rng):
    """Weighted random choice among candidate tweets; None when there are none."""
    if not candidates:
        return None
    if len(candidates) == 1:
        return candidates[0]
    p = selection_weights_columns(agent.stance, agent.mask, columns_of(candidates), weights[action])
    return candidates[pick_index(p, rng.random())]


def select_target_ids(agent, ids: np.ndarray, tweets, action: str, weights: ActionWeights, rng):
    """As :func:`select_target` over candidate ids, gathering columns from ``tweets``."""
    if len(ids) == 0:
        return None
    if len(ids) == 1:
        return tweets[int(ids[0])]
    p = selection_weights_columns(agent.stance, agent.mask, gather(tweets, ids), weights[action])
    return tweets[int(ids[pick_index(p, rng.random())])]


# --- composing --------------------------------------------------------------

def compose_original_themes(agent, rng) -> list[int]:
    """Random non-empty subset of the agent's themes, favouring ones used before 2:1."""
    pool = list(agent.themes)
    if not pool:
        return []
    k = 1 + int(rng.random() * len(pool))
    weights = [2.0 if t in agent.used_themes else 1.0 for t in pool]
    chosen = []
    for _ in range(k):
        t = weighted_pick(pool, weights, rng)
        i = pool.index(t)
        pool.pop(i)
        weights.pop(i)
        chosen.append(t)
    return chosen


def reply_audience(author_followers, rng, share: float = REPLY_AUDIENCE) -> list[int]:
    """Uniform sample of the parent author's followers, size round-half-up(share*n), min 1."""
    n = len(author_followers)
    if n == 0:
        return []
    k = max(1, int(share * n + 0.5))
    return rng.sample(sorted(author_followers), k)


# --- executing actions ----------------------------------------------------------
# ``world`` is the engine state: it exposes ``agents``, ``graph``, ``tweets``,
# ``content_ids`` (non-retweet tweet ids in creation order) and ``step_index``.

def deliver(world, tweet_id: int, author: int, recipients) -> None:
    agents = world.agents
    for r in recipients:
        a = agents[r]
        a.seen.append(tweet_id)
        a.authors.append(author)
        a.seen_all[author] += 1


def _bump(world, tweet: Tweet, counter: str) -> None:
    if isinstance(world.tweets, TweetLog):
        world.tweets.bump(tweet, counter)
    else:
        setattr(tweet, counter, getattr(tweet, counter) + 1)


def post(world, agent, kind: Kind, themes, parent: Tweet | None = None) -> Tweet:
    t = Tweet(len(world.tweets), agent.id, agent.stance, themes, kind,
              None if parent is None else parent.id, world.step_index)
    world.tweets.append(t)
    if kind is not Kind.RETWEET:
        world.content_ids.append(t.id)
        agent.own.append(t.id)
    return t


def compose_tweet(world, agent, rng, themes=None) -> Tweet:
    if themes is None:
        themes = compose_original_themes(agent, rng)
        agent.used_themes.update(themes)
    t = post(world, agent, Kind.ORIGINAL, themes)
    deliver(world, t.id, agent.id, world.graph.followers[agent.id])
    return t


def compose_reply(world, agent, parent: Tweet, rng, themes=None) -> Tweet | None:
    """Reply reaches the parent's author, a 10% sample of their followers and the replier's followers."""
    if parent.id in agent.replied:
        return None
    agent.replied.add(parent.id)
    _bump(world, parent, "replies")
    t = post(world, agent, Kind.REPLY, parent.themes if themes is None else themes, parent)
    followers = world.graph.followers
    recipients = set(followers[agent.id])
    recipients.add(parent.author)
    recipients.update(reply_audience(followers[parent.author], rng,
                                     getattr(world, "reply_share", REPLY_AUDIENCE)))
    recipients.discard(agent.id)
    deliver(world, t.id, agent.id, sorted(recipients))
    return t


def compose_quote(world, agent, parent: Tweet, rng, themes=None) -> Tweet | None:
    if parent.id in agent.quoted:
        return None
    agent.quoted.add(parent.id)
    _bump(world, parent, "quotes")
    t = post(world, agent, Kind.QUOTE, parent.themes if themes is None else themes, parent)
    deliver(world, t.id, agent.id, world.graph.followers[agent.id])
    return t


def do_retweet(world, agent, parent: Tweet) -> Tweet | None:
    """Share ``parent`` unchanged: its id (not a new one) lands in followers' memory."""
    if parent.id in agent.retweeted:
        return None
    agent.retweeted.add(parent.id)
    _bump(world, parent, "retweets")
    record = post(world, agent, Kind.RETWEET, parent.themes, parent)
    agent.own.append(parent.id)
    deliver(world, parent.id, parent.author, world.graph.followers[agent.id])
    return record


def do_like(world, agent, parent: Tweet) -> bool:
    if parent.id in agent.liked:
        return False
    agent.liked.add(parent.id)
    _bump(world, parent, "likes")
    return True


# --- follow / unfollow ---------------------------------------------------------

def follow_weights(agent, agents, candidates, counts, w: ActionWeight) -> list[float]:
    out = []
    for c in candidates:
        other = agents[c]
        s = 1.0 - abs(agent.stance - other.stance) * 0.5
        union = (agent.mask | other.mask).bit_count()
        ct = (agent.mask & other.mask).bit_count() / union if union else 0.0
        out.append(counts[c] * (1.0 + s * w.w_s + ct * w.w_t))
    return out


def choose_follow_target(agent, agents, graph, weights: ActionWeights, rng):
    counts: dict[int, int] = {}
    following = graph.followees[agent.id]
    for a in agent.authors:
        if a != agent.id and a not in following:
            counts[a] = counts.get(a, 0) + 1
    if not counts:
        return None
    cands = sorted(counts)
    return weighted_pick(cands, follow_weights(agent, agents, cands, counts, weights["like"]), rng)


def choose_unfollow_target(agent, agents, graph, weights: ActionWeights, rng):
    cands = sorted(graph.followees[agent.id])
    if not cands:
        return None
    w = weights["like"]
    top = w.w_s + w.w_t
    ws = []
    for c in cands:
        other = agents[c]
        s = 1.0 - abs(agent.stance - other.stance) * 0.5
        union = (agent.mask | other.mask).bit_count()
        ct = (agent.mask & other.mask).bit_count() / union if union else 0.0
        ws.append(1.0 - (s * w.w_s + ct * w.w_t) / top)
    return weighted_pick(cands, ws, rng)


__all__ = [
    "ActionWeight", "ActionWeights", "RoleActionTable", "role_vector", "choose_action",
    "stance_compat", "theme_compat", "compatibility", "engagement_score", "selection_weights",
    "select_target", "select_target_ids", "target_candidates", "candidate_ids", "pick_index", "compose_original_themes", "reply_audience",
    "choose_follow_target", "choose_unfollow_target", "weighted_pick", "deliver", "post",
    "compose_tweet", "compose_reply", "compose_quote", "do_retweet", "do_like",
    "FOLLOW_RATE", "UNFOLLOW_RATE",
]
