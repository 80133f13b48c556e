"""Domain types shared across the simulator: stances, themes, tweets, memory and agents."""

from __future__ import annotations

from collections import Counter, deque
from enum import Enum, IntEnum
from typing import Iterable, NamedTuple

import numpy as np


class Stance(IntEnum):
    NEG = -1
    NEU = 0
    POS = 1

    @property
    def label(self) -> str:
        return {-1: "con", 0: "neu", 1: "pro"}[self.value]


STANCES = (Stance.NEG, Stance.NEU, Stance.POS)


def stance_distance(a: int, b: int) -> int:
    return abs(int(a) - int(b))


class Kind(str, Enum):
    ORIGINAL = "original"
    REPLY = "reply"
    QUOTE = "quote"
    RETWEET = "retweet"


class Role(str, Enum):
    TWEETER = "Tweeter"
    QUOTER = "Quoter"
    RETWEETER = "Retweeter"
    REPLIER = "Replier"
    LIKER = "Liker"
    SUPER_REPLIER = "SuperReplier"


class Activity(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


# Action names double as keys into role tables and weight bundles.
ACTIONS = ("like", "tweet", "quote", "retweet", "reply", "follow", "unfollow")
TARGETED_ACTIONS = ("like", "retweet", "quote", "reply")

NAMESAKE = {
    Role.TWEETER: "tweet",
    Role.QUOTER: "quote",
    Role.RETWEETER: "retweet",
    Role.REPLIER: "reply",
    Role.LIKER: "like",
    Role.SUPER_REPLIER: "reply",
}


# --- themes -----------------------------------------------------------------
# Theme sets are carried as plain sets/lists for the API and as int bitmasks
# (bit t set <=> theme t held) for the compatibility hot path.

def theme_mask(themes: Iterable[int]) -> int:
    mask = 0
    for t in themes:
        mask |= 1 << t
    return mask


# popcount of every mask over theme bits 0..13
POPCOUNT = np.array([bin(i).count("1") for i in range(1 << 14)], dtype=np.int64)


def mask_themes(mask: int) -> frozenset[int]:
    out = []
    t = 0
    while mask:
        if mask & 1:
            out.append(t)
        mask >>= 1
        t += 1
    return frozenset(out)


class ThemeSet:
    """A bounded, duplicate-free set of theme ids drawn from ``1..total``."""

    __slots__ = ("themes", "capacity", "total")

    def __init__(self, themes: Iterable[int] = (), capacity: int = 5, total: int = 12):
        if capacity >= total:
            raise ValueError("theme capacity must be lower than the number of themes")
        items = list(dict.fromkeys(themes))
        if len(items) > capacity:
            raise ValueError(f"{len(items)} themes exceed capacity {capacity}")
        for t in items:
            if not 1 <= t <= total:
                raise ValueError(f"theme {t} outside 1..{total}")
        self.themes = frozenset(items)
        self.capacity = capacity
        self.total = total

    def __contains__(self, t: int) -> bool:
        return t in self.themes

    def __iter__(self):
        return iter(sorted(self.themes))

    def __len__(self) -> int:
        return len(self.themes)

    def __eq__(self, other) -> bool:
        if isinstance(other, ThemeSet):
            return self.themes == other.themes
        return self.themes == frozenset(other)

    def __hash__(self) -> int:
        return hash(self.themes)

    def __repr__(self) -> str:
        return f"ThemeSet({sorted(self.themes)})"

    @property
    def mask(self) -> int:
        return theme_mask(self.themes)


# --- tweets -----------------------------------------------------------------

class EngagementCounters(NamedTuple):
    likes: int = 0
    retweets: int = 0
    quotes: int = 0
    replies: int = 0


class Tweet:
    """A message record. Content fields are fixed at creation; counters only grow."""

    __slots__ = (
        "id", "author", "stance", "themes", "mask", "kind", "parent", "created_step",
        "likes", "retweets", "quotes", "replies",
    )

    def __init__(self, id: int, author: int, stance: int, themes: Iterable[int],
                 kind: Kind = Kind.ORIGINAL, parent: int | None = None, created_step: int = 0):
        if kind is Kind.ORIGINAL and parent is not None:
            raise ValueError("original tweets have no parent")
        if kind is not Kind.ORIGINAL and parent is None:
            raise ValueError(f"{kind.value} requires a parent tweet")
        self.id = id
        self.author = author
        self.stance = Stance(stance)
        self.themes = frozenset(themes)
        self.mask = theme_mask(self.themes)
        self.kind = kind
        self.parent = parent
        self.created_step = created_step
        self.likes = 0
        self.retweets = 0
        self.quotes = 0
        self.replies = 0

    @property
    def counters(self) -> EngagementCounters:
        return EngagementCounters(self.likes, self.retweets, self.quotes, self.replies)

    def __repr__(self) -> str:
        return (f"Tweet(id={self.id}, author={self.author}, stance={self.stance.label}, "
                f"themes={sorted(self.themes)}, kind={self.kind.value})")


class TweetLog:
    """Append-only tweet store; ids equal positions.

    Besides the Tweet objects it keeps numpy columns (author, stance, theme
    mask and the engagement counters) so scoring can gather candidate
    attributes by id array. Counters must be changed through :meth:`bump`
    to keep both views in step.
    """

    COLUMNS = ("author", "stance", "mask", "likes", "retweets", "quotes", "replies")

    def __init__(self, capacity: int = 4096):
        self._items: list[Tweet] = []
        self._cap = max(16, capacity)
        for c in self.COLUMNS:
            setattr(self, c, np.zeros(self._cap, dtype=np.int64))

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def __iter__(self):
        return iter(self._items)

    def _grow(self) -> None:
        self._cap *= 2
        for c in self.COLUMNS:
            old = getattr(self, c)
            new = np.zeros(self._cap, dtype=np.int64)
            new[:len(old)] = old
            setattr(self, c, new)

    def append(self, t: Tweet) -> None:
        i = len(self._items)
        if t.id != i:
            raise ValueError(f"tweet id {t.id} does not match log position {i}")
        if i >= self._cap:
            self._grow()
        self._items.append(t)
        self.author[i] = t.author
        self.stance[i] = t.stance
        self.mask[i] = t.mask
        self.likes[i] = t.likes
        self.retweets[i] = t.retweets
        self.quotes[i] = t.quotes
        self.replies[i] = t.replies

    def bump(self, t: Tweet, counter: str, by: int = 1) -> None:
        setattr(t, counter, getattr(t, counter) + by)
        getattr(self, counter)[t.id] += by


SCORING_COLUMNS = ("stance", "mask", "likes", "retweets", "replies")


def columns_of(tweets, names=SCORING_COLUMNS) -> list[np.ndarray]:
    """Attribute columns for a sequence of Tweet objects."""
    return [np.array([getattr(t, n) for t in tweets], dtype=np.int64) for n in names]


def gather(log, ids, names=SCORING_COLUMNS) -> list[np.ndarray]:
    """Attribute columns for tweet ``ids`` from a TweetLog or a plain list of tweets."""
    if isinstance(log, TweetLog):
        return [getattr(log, n)[ids] for n in names]
    return columns_of([log[int(i)] for i in ids], names)


def jaccard(user_mask: int, masks: np.ndarray) -> np.ndarray:
    """Theme Jaccard similarity of one mask against many; two empty sets give 0."""
    masks = np.asarray(masks, dtype=np.int64)
    inter = POPCOUNT[masks & user_mask]
    union = POPCOUNT[masks | user_mask]
    out = np.zeros(len(masks))
    np.divide(inter, union, out=out, where=union > 0)
    return out


_BITS = np.arange(14, dtype=np.int64)
# row m holds the 0/1 theme indicators of mask m
BIT_TABLE = ((np.arange(1 << 14, dtype=np.int64)[:, None] >> _BITS) & 1).astype(np.int32)


def theme_counts(masks) -> dict[int, int]:
    """Number of masks carrying each theme, for themes that occur at all."""
    masks = np.asarray(masks, dtype=np.int64)
    if masks.size == 0:
        return {}
    per_bit = BIT_TABLE[masks].sum(axis=0).tolist()
    return {t: k for t, k in enumerate(per_bit) if k}


def top_themes(counts: dict, k: int, exclude=()) -> list[int]:
    """The ``k`` most frequent themes, ties to the lower id."""
    ranked = sorted((t for t in counts if t not in exclude), key=lambda t: (-counts[t], t))
    return ranked[:k]


# --- memory -----------------------------------------------------------------

class MemoryBin(deque):
    """Fixed-capacity FIFO; pushing into a full bin drops the oldest entry."""

    def __init__(self, capacity: int, items: Iterable = ()):
        if capacity <= 0:
            raise ValueError("memory capacity must be positive")
        super().__init__(items, maxlen=capacity)

    @property
    def capacity(self) -> int:
        return self.maxlen

    def push(self, item):
        evicted = self[0] if len(self) == self.maxlen else None
        self.append(item)
        return evicted


def memory_insert(bin: MemoryBin, item):
    """Append ``item``; return the evicted oldest entry, or None."""
    return bin.push(item)


# --- agents -----------------------------------------------------------------

HUMAN_MEMORY = 30
BOT_MEMORY = 120


class Agent:
    __slots__ = (
        "id", "is_bot", "stance", "themes", "mask", "resistance", "role", "activity",
        "memory", "seen", "own", "authors", "actions_used",
        "liked", "retweeted", "quoted", "replied",
        "used_themes", "seen_all", "influenced_by", "policy", "last_polled",
    )

    def __init__(self, id: int, stance: int, themes: Iterable[int], *, is_bot: bool = False,
                 resistance: float = 1.0, role: Role = Role.TWEETER,
                 activity: Activity = Activity.LOW, memory: int | None = None, policy=None):
        self.id = id
        self.is_bot = is_bot
        self.stance = Stance(stance)
        # acquisition order, oldest first
        self.themes: list[int] = list(dict.fromkeys(themes))
        self.mask = theme_mask(self.themes)
        self.resistance = resistance
        self.role = role
        self.activity = activity
        self.memory = memory or (BOT_MEMORY if is_bot else HUMAN_MEMORY)
        self.seen = MemoryBin(self.memory)
        self.own = MemoryBin(self.memory)
        self.authors = MemoryBin(self.memory)
        self.actions_used = 0
        self.liked: set[int] = set()
        self.retweeted: set[int] = set()
        self.quoted: set[int] = set()
        self.replied: set[int] = set()
        self.used_themes: set[int] = set()
        # diagnostics only; never read by behaviour
        self.seen_all: Counter = Counter()
        self.influenced_by: Counter = Counter()
        self.policy = policy
        self.last_polled = -1

    def dedup(self, action: str) -> set[int]:
        return {"like": self.liked, "retweet": self.retweeted,
                "quote": self.quoted, "reply": self.replied}[action]

    def set_themes(self, themes: Iterable[int]) -> None:
        self.themes = list(dict.fromkeys(themes))
        self.mask = theme_mask(self.themes)

    @property
    def theme_set(self) -> frozenset[int]:
        return frozenset(self.themes)

    def __repr__(self) -> str:
        kind = "bot" if self.is_bot else "human"
        return f"Agent({self.id}, {kind}, {self.stance.label}, themes={self.themes})"
