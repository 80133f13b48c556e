import random

import pytest

from stancesim.graph import SocialGraph
from stancesim.model import Agent, Kind, Tweet, TweetLog
from stancesim.scenario import preset


class World:
    """Minimal engine stand-in for exercising behaviour functions."""

    def __init__(self, n_agents=4, edges=(), bots=()):
        self.graph = SocialGraph.from_edges(n_agents, edges)
        self.agents = [Agent(i, 0, [1], is_bot=i in bots, resistance=0.5) for i in range(n_agents)]
        self.tweets = TweetLog()
        self.content_ids = []
        self.step_index = 0
        self.reply_share = 0.10

    def add_tweet(self, author, stance=0, themes=(1,), likes=0, retweets=0, replies=0, quotes=0):
        t = Tweet(len(self.tweets), author, stance, themes)
        self.tweets.append(t)
        self.content_ids.append(t.id)
        for name, k in (("likes", likes), ("retweets", retweets), ("replies", replies), ("quotes", quotes)):
            if k:
                self.tweets.bump(t, name, k)
        return t


@pytest.fixture
def world():
    return World()


@pytest.fixture
def rng():
    return random.Random(1234)


def small_config(name="sim1", **over):
    """A preset shrunk to a size that runs in well under a second."""
    cfg = preset(name)
    data = cfg.to_dict()
    data.update({"n_agents": 60, "steps": 48, "runs": 2})
    data["graph"] = dict(data["graph"], mean_out_degree=4)
    data.update(over)
    return type(cfg).model_validate(data)


# criterion number -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
