import random

import numpy as np
import pytest

from conftest import World
from stancesim.behavior import bot as bb
from stancesim.model import Agent, Tweet

BW = bb.bot_action_weights()


def make_bot(id=0, themes=(1, 2), policy=None, stance=-1):
    return Agent(id, stance, list(themes), is_bot=True, policy=policy or bb.BotPolicy())


def fill(world, n, author=1, **kw):
    return [world.add_tweet(author, **kw) for _ in range(n)]


def test_policy_validation():
    with pytest.raises(ValueError):
        bb.BotPolicy(poll_size=0)
    with pytest.raises(ValueError):
        bb.BotPolicy(reply_tactic_mix=1.5)


def test_poll_fewer_than_size_inserts_all(world):
    b = make_bot()
    fill(world, 25)
    assert bb.poll_tweets(b, world) == 25
    assert list(b.seen) == list(range(25)) and list(b.authors) == [1] * 25


def test_poll_takes_newest_and_skips_own(world):
    b = make_bot()
    fill(world, 60, author=1)
    fill(world, 40, author=0)
    assert bb.poll_tweets(b, world) == 40
    assert list(b.seen) == list(range(20, 60))


def test_poll_only_new_since_last(world):
    b = make_bot()
    fill(world, 10)
    bb.poll_tweets(b, world)
    assert bb.poll_tweets(b, world) == 0
    fill(world, 3)
    assert bb.poll_tweets(b, world) == 3 and list(b.seen)[-3:] == [10, 11, 12]


def test_poll_uses_no_quota(world):
    b = make_bot()
    fill(world, 5)
    bb.poll_tweets(b, world)
    assert b.actions_used == 0


def test_one_candidate_selected(world):
    t = world.add_tweet(1)
    b = make_bot()
    assert bb.bot_select_target_ids(b, np.array([t.id]), world.tweets, "like", BW,
                                    world.graph.follower_counts()) is t


def test_follower_count_dominates():
    w = World(60)
    for i in range(2, 52):
        w.graph.follow(i, 1)
    for i in range(52, 57):
        w.graph.follow(i, 3)
    a = w.add_tweet(3)
    c = w.add_tweet(1)
    b = make_bot()
    t = bb.bot_select_target_ids(b, np.array([a.id, c.id]), w.tweets, "like", BW, w.graph.follower_counts())
    assert t is c


def test_reply_weights_prefer_replied_tweet():
    w = World(4)
    liked = w.add_tweet(1, likes=10)
    replied = w.add_tweet(2, replies=10)
    b = make_bot()
    t = bb.bot_select_target_ids(b, np.array([liked.id, replied.id]), w.tweets, "reply", BW,
                                 w.graph.follower_counts())
    assert t is replied


def test_ties_go_to_lower_id():
    w = World(4)
    ts = [w.add_tweet(1) for _ in range(3)]
    b = make_bot()
    t = bb.bot_select_target_ids(b, np.array([t.id for t in ts]), w.tweets, "like", BW,
                                 w.graph.follower_counts())
    assert t is ts[0]
    assert bb.bot_select_target(b, ts, "like", BW, w.graph.followers) is ts[0]


def test_object_and_id_paths_agree():
    rng = random.Random(4)
    w = World(30, edges=[(i, j) for i in range(30) for j in range(30) if i != j and rng.random() < 0.2])
    for _ in range(40):
        w.add_tweet(rng.randrange(1, 30), rng.choice([-1, 0, 1]), rng.sample(range(1, 13), 2),
                    likes=rng.randint(0, 5), retweets=rng.randint(0, 5), replies=rng.randint(0, 5))
    b = make_bot()
    ids = np.arange(40)
    for action in ("like", "retweet", "quote", "reply"):
        x = bb.bot_select_target_ids(b, ids, w.tweets, action, BW, w.graph.follower_counts())
        y = bb.bot_select_target(b, list(w.tweets), action, BW, w.graph.followers)
        assert x is y


def test_lower_quartile():
    assert bb.lower_quartile([1, 2, 3, 4, 5]) == 2
    assert bb.lower_quartile([4, 4, 4]) == 4
    assert bb.lower_quartile([1, 100]) == pytest.approx(25.75)


def test_vulnerable_filter():
    w = World(5)
    for i in range(2, 5):
        w.graph.follow(1, i)
    a = w.add_tweet(1)
    c = w.add_tweet(2)
    ids = np.array([a.id, c.id])
    kept = bb.bot_reply_candidate_ids(ids, w.tweets, bb.VULNERABLE, w.graph.followee_counts())
    assert list(kept) == [c.id]
    same = World(3)
    ts = [same.add_tweet(1), same.add_tweet(2)]
    kept = bb.bot_reply_candidate_ids(np.array([0, 1]), same.tweets, bb.VULNERABLE, same.graph.followee_counts())
    assert list(kept) == [0, 1]
    assert list(bb.bot_reply_candidate_ids(ids, w.tweets, bb.ENGAGE, w.graph.followee_counts())) == [0, 1]


def test_tactic_mix_extremes(rng):
    assert all(bb.draw_tactic(bb.BotPolicy(reply_tactic_mix=1.0), rng) == bb.VULNERABLE for _ in range(10_000))
    assert all(bb.draw_tactic(bb.BotPolicy(reply_tactic_mix=0.0), rng) == bb.ENGAGE for _ in range(10_000))


def test_conserved_theme_always_emitted(rng, world):
    b = make_bot(themes=[7, 1, 2], policy=bb.BotPolicy(conserved_themes={7}))
    fill(world, 50, themes=(3, 4, 5))
    bb.poll_tweets(b, world)
    parent = world.add_tweet(1, themes=(8, 9, 10, 11, 12))
    for _ in range(300):
        assert 7 in bb.bot_compose_themes(b, parent, rng, world.tweets)
        assert 7 in bb.bot_compose_themes(b, None, rng, world.tweets)


def test_compose_subset_rules(rng):
    b = make_bot(themes=[2, 3, 4])
    parent = Tweet(0, 1, 0, [2, 3, 4])
    for _ in range(100):
        assert set(bb.bot_compose_themes(b, parent, rng)) <= {2, 3, 4}
        assert set(bb.bot_compose_themes(b, None, rng)) <= {2, 3, 4}


def test_adopts_dominant_theme(world):
    b = make_bot(themes=[1, 2])
    fill(world, 40, themes=(3,))
    bb.poll_tweets(b, world)
    assert 3 in bb.bot_adopt_themes(b, world.tweets)
    assert 3 in b.themes


def test_adoption_disabled_keeps_themes(world):
    b = make_bot(themes=[1, 2], policy=bb.BotPolicy(adopt_themes=False))
    fill(world, 40, themes=(3, 4))
    bb.poll_tweets(b, world)
    assert bb.bot_adopt_themes(b, world.tweets) == [] and b.themes == [1, 2]


def test_conserved_theme_never_displaced(world):
    b = make_bot(themes=[7, 1, 2, 5, 6], policy=bb.BotPolicy(conserved_themes={7}))
    fill(world, 40, themes=(3, 4, 8, 9, 10))
    bb.poll_tweets(b, world)
    for _ in range(5):
        bb.bot_adopt_themes(b, world.tweets)
        assert 7 in b.themes and len(b.themes) <= 5


def test_adoption_cap_is_two_of_five(world):
    b = make_bot(themes=[1])
    fill(world, 40, themes=(3, 4, 5, 6))
    bb.poll_tweets(b, world)
    assert len(bb.bot_adopt_themes(b, world.tweets)) == 2
