"""Run orchestration: initialization from a scenario config and the per-step loop."""

from __future__ import annotations

import gc
import logging
import random
from collections import Counter
from contextlib import contextmanager

import numpy as np

from . import conversion as conv
from .behavior import bot as botb
from .behavior import human as hb
from .graph import GraphGenParams, attach_fringe_bots, generate_scale_free, load_edge_list
from .metrics import MetricsCollector, RunMetrics
from .model import STANCES, Activity, Agent, Role, TweetLog
from .scheduling import STEPS_PER_WEEK, ActivityTable, QuotaPolicy, default_activity_table

log = logging.getLogger(__name__)


class InitError(ValueError):
    pass


def apportion(total: int, weights) -> list[int]:
    """Largest-remainder split of ``total`` in proportion to ``weights``; ties go left."""
    s = float(sum(weights))
    if total == 0 or s == 0:
        return [0] * len(weights)
    raw = [total * w / s for w in weights]
    out = [int(x) for x in raw]
    rest = total - sum(out)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - out[i]), i))
    for i in order[:rest]:
        out[i] += 1
    return out


def stance_plan(n_agents: int, bot_fraction: float, bot_ratio, population_ratio):
    """Bot and human stance counts, each as ``[con, neu, pro]``.

    Population totals follow ``population_ratio``; humans fill whatever the
    bots leave. Raises InitError when bots alone overshoot a stance target.
    """
    n_bots = int(round(bot_fraction * n_agents))
    target = apportion(n_agents, population_ratio)
    ratio = population_ratio if bot_ratio == "march" else bot_ratio
    bots = apportion(n_bots, ratio)
    humans = []
    for s, t, b in zip(STANCES, target, bots):
        if b > t:
            raise InitError(f"bot count {b} for stance {s.label} exceeds its population target {t}")
        humans.append(t - b)
    return bots, humans


def _cumulative(weights):
    acc, out = 0.0, []
    total = float(sum(weights))
    for w in weights:
        acc += w / total
        out.append(acc)
    out[-1] = 1.0
    return out


def _draw(cum, u):
    for i, c in enumerate(cum):
        if u < c:
            return i
    return len(cum) - 1


def sample_themes(rng: random.Random, weights, per_agent: dict, capacity: int) -> list[int]:
    """Draw a theme count, then that many distinct themes weighted by ``weights``."""
    counts = sorted(per_agent)
    k = counts[_draw(_cumulative([per_agent[c] for c in counts]), rng.random())]
    k = min(k, capacity, sum(1 for w in weights if w > 0))
    pool = list(range(1, len(weights) + 1))
    w = list(weights)
    chosen = []
    for _ in range(k):
        i = _draw(_cumulative(w), rng.random())
        chosen.append(pool.pop(i))
        w.pop(i)
    return chosen


def _weights_bundle(spec, defaults: hb.ActionWeights) -> hb.ActionWeights:
    if not spec:
        return defaults
    per = dict(defaults.per_action)
    for action, w in spec.items():
        per[action] = hb.ActionWeight(w.w_g, w.w_c, w.w_s, w.w_t, w.w_like, w.w_rt, w.w_reply, w.contrarian)
    return hb.ActionWeights(per)


def build_role_table(cfg) -> hb.RoleActionTable:
    a = cfg.actions
    if a.role_table:
        cells = {}
        for key, vec in a.role_table.items():
            role, _, act = key.partition("/")
            cells[(Role(role), Activity(act))] = vec
        for r in Role:
            for act in Activity:
                cells.setdefault((r, act), hb.role_vector(
                    r, act, a.base_profile, a.namesake_share[act], super_share=a.super_replier_share,
                    follow_rate=a.follow_rate, unfollow_rate=a.unfollow_rate))
        return hb.RoleActionTable(cells)
    return hb.RoleActionTable({
        (r, act): hb.role_vector(r, act, a.base_profile, a.namesake_share[act],
                                 super_share=a.super_replier_share,
                                 follow_rate=a.follow_rate, unfollow_rate=a.unfollow_rate)
        for r in Role for act in Activity})


class Simulation:
    """Mutable state of one run; behaviour modules treat it as ``world``."""

    def __init__(self, cfg, seed: int):
        self.cfg = cfg
        self.seed = seed
        ss = np.random.SeedSequence(seed)
        graph_ss, bulk_ss, scalar_ss = ss.spawn(3)
        self.graph_seed = int(graph_ss.generate_state(1)[0])
        self.np_rng = np.random.default_rng(bulk_ss)
        self.rng = random.Random(int(scalar_ss.generate_state(1, np.uint64)[0]))
        self.step_index = 0
        self.tweets = TweetLog()
        self.content_ids: list[int] = []
        self.reply_share = cfg.actions.reply_audience
        self.action_tally: Counter = Counter()
        self.fallbacks = 0

        if cfg.schedule.table_path:
            self.table = ActivityTable.from_csv(cfg.schedule.table_path, cfg.schedule.damping)
        else:
            self.table = default_activity_table(cfg.schedule.damping)
        self.quota = QuotaPolicy(dict(cfg.schedule.weekly_max), cfg.schedule.overflow_prob)
        self.role_table = build_role_table(cfg)
        self.human_weights = _weights_bundle(cfg.human_weights, hb.ActionWeights())
        self.bot_weights = _weights_bundle(cfg.bot_weights, botb.bot_action_weights())
        c = cfg.conversion
        self.conv_weights = conv.ConversionWeights(c.w_like, c.w_rt, c.w_reply, c.w_s, c.w_t)
        r = cfg.resistance
        self.resistance = conv.ResistancePolicy(r.low, r.mean, r.high, r.sd,
                                                r.same_delta, r.adjacent_delta, r.opposite_delta)
        self.bot_policy = botb.BotPolicy(
            reply_tactic_mix=cfg.bots.reply_tactic_mix, poll_size=cfg.bots.poll_size,
            adopt_themes=cfg.bots.adopt_themes, conserved_themes=frozenset(cfg.bots.conserved_themes),
            max_new_theme_fraction=cfg.bots.max_new_theme_fraction)
        self._build_population()
        self.collector = MetricsCollector(self)
        self.collector.record(self)

    # --- initialization ---------------------------------------------------------

    def _build_population(self) -> None:
        cfg, rng = self.cfg, self.rng
        n = cfg.n_agents
        bot_counts, human_counts = stance_plan(n, cfg.bot_fraction, cfg.bot_stance_ratio,
                                               cfg.population_stance_ratio)
        n_bots = sum(bot_counts)
        n_humans = n - n_bots
        fringe = cfg.graph.bot_placement == "fringe" and n_bots > 0

        if cfg.graph.source == "file":
            g = load_edge_list(cfg.graph.path)
            want = n_humans if fringe else n
            if g.n_agents != want:
                raise InitError(f"graph file has {g.n_agents} nodes, scenario needs {want}")
        else:
            g = generate_scale_free(GraphGenParams(
                n_nodes=n_humans if fringe else n, target_mean_out_degree=cfg.graph.mean_out_degree,
                reciprocity_fraction=cfg.graph.reciprocity,
                attachment_exponent=cfg.graph.attachment_exponent, seed=self.graph_seed))
        if fringe:
            bot_ids = list(range(n_humans, n))
            attach_fringe_bots(g, bot_ids, rng)
        else:
            bot_ids = sorted(rng.sample(range(n), n_bots))
        self.graph = g
        is_bot = [False] * n
        for b in bot_ids:
            is_bot[b] = True

        bot_stances = [s for s, k in zip(STANCES, bot_counts) for _ in range(k)]
        human_stances = [s for s, k in zip(STANCES, human_counts) for _ in range(k)]
        rng.shuffle(bot_stances)
        rng.shuffle(human_stances)

        hs = cfg.humans
        act_levels = list(hs.activity_distribution)
        act_cum = _cumulative([hs.activity_distribution[a] for a in act_levels])
        role_cum = {}
        for act, roles in hs.role_distribution.items():
            names = list(roles)
            role_cum[act] = (names, _cumulative([roles[r] for r in names]))

        def draw_activity():
            return act_levels[_draw(act_cum, rng.random())]

        def draw_role(act):
            names, cum = role_cum[act]
            return names[_draw(cum, rng.random())]

        bs = cfg.bots
        cap = cfg.theme_capacity
        bot_theme_weights = bs.theme_weights or cfg.theme_marginals
        conserved = list(bs.conserved_themes)
        agents = []
        bi = hi = 0
        for i in range(n):
            if is_bot[i]:
                stance = bot_stances[bi]
                bi += 1
                activity = draw_activity() if bs.activity == "mixed" else Activity(bs.activity)
                role = draw_role(activity) if bs.role == "mixed" else Role(bs.role)
                themes = sample_themes(rng, bot_theme_weights, cfg.themes_per_agent, cap)
                if conserved:
                    themes = [t for t in themes if t not in conserved]
                    themes = themes[:max(0, cap - len(conserved))] + conserved
                a = Agent(i, stance, themes, is_bot=True, resistance=1.0, role=role,
                          activity=activity, memory=bs.memory, policy=self.bot_policy)
            else:
                stance = human_stances[hi]
                hi += 1
                activity = draw_activity()
                role = draw_role(activity)
                themes = sample_themes(rng, cfg.theme_marginals, cfg.themes_per_agent, cap)
                a = Agent(i, stance, themes, is_bot=False,
                          resistance=conv.init_resistance(self.resistance, rng),
                          role=role, activity=activity, memory=hs.memory)
            agents.append(a)
        self.agents = agents
        self.initial_stances = [a.stance for a in agents]
        self._cum = {}
        for a in agents:
            key = (a.role, a.activity, a.is_bot)
            if key not in self._cum:
                self._cum[key] = self.role_table.cumulative(a.role, a.activity, bot=a.is_bot)
        self.human_adopt_fraction = hs.max_new_theme_fraction

    # --- the loop -------------------------------------------------------------

    def step(self) -> None:
        s = self.step_index
        agents = self.agents
        if s % STEPS_PER_WEEK == 0:
            for a in agents:
                a.actions_used = 0
        n = len(agents)
        order = self.np_rng.permutation(n)
        awake = self.np_rng.random(n) < self.table.wake_probability(s)
        tweets = self.tweets
        rng = self.rng
        quota = self.quota.weekly_max
        overflow = self.quota.overflow_prob
        resistance = self.resistance
        cw = self.conv_weights
        cap = self.cfg.theme_capacity
        adopt_fraction = self.human_adopt_fraction
        for i in order[awake[order]].tolist():
            a = agents[i]
            if a.is_bot:
                botb.poll_tweets(a, self)
                if a.seen:
                    botb.bot_adopt_themes(a, tweets, cap)
            else:
                old = a.stance
                conv.read_conversion(a, tweets, rng, resistance, cw, cap, adopt_fraction)
                if a.stance != old:
                    self.collector.conversions += 1
            if a.actions_used >= quota[a.activity] and rng.random() >= overflow:
                continue
            a.actions_used += 1
            self.act(a)
        self.step_index = s + 1
        self.collector.record(self)

    def act(self, a) -> str:
        """Pick one action from the agent's role table and execute it.

        Returns the action actually executed; anything without a valid target
        becomes an original tweet.
        """
        names, cum = self._cum[(a.role, a.activity, a.is_bot)]
        u = self.rng.random()
        action = names[-1]
        for name, c in zip(names, cum):
            if u < c:
                action = name
                break
        done = self._execute(a, action)
        if not done:
            self.fallbacks += 1
            self._tweet(a)
            action = "tweet"
        self.action_tally[action] += 1
        return action

    def _tweet(self, a) -> None:
        if a.is_bot:
            themes = botb.bot_compose_themes(a, None, self.rng, self.tweets, self.cfg.theme_capacity)
            hb.compose_tweet(self, a, self.rng, themes)
        else:
            hb.compose_tweet(self, a, self.rng)

    def _execute(self, a, action: str) -> bool:
        if action == "tweet":
            self._tweet(a)
            return True
        rng = self.rng
        if action == "follow":
            target = hb.choose_follow_target(a, self.agents, self.graph,
                                             self.bot_weights if a.is_bot else self.human_weights, rng)
            return target is not None and self.graph.follow(a.id, target)
        if action == "unfollow":
            if a.is_bot:
                return False
            target = hb.choose_unfollow_target(a, self.agents, self.graph, self.human_weights, rng)
            return target is not None and self.graph.unfollow(a.id, target)

        tweets = self.tweets
        ids = hb.candidate_ids(a, tweets, action)
        if len(ids) == 0:
            return False
        if a.is_bot:
            if action == "reply":
                tactic = botb.draw_tactic(a.policy, rng)
                ids = botb.bot_reply_candidate_ids(ids, tweets, tactic, self.graph.followee_counts())
            target = botb.bot_select_target_ids(a, ids, tweets, action, self.bot_weights,
                                                self.graph.follower_counts())
        else:
            target = hb.select_target_ids(a, ids, tweets, action, self.human_weights, rng)
        if target is None:
            return False
        cap = self.cfg.theme_capacity
        if action == "like":
            return hb.do_like(self, a, target)
        if action == "retweet":
            return hb.do_retweet(self, a, target) is not None
        themes = botb.bot_compose_themes(a, target, rng, self.tweets, cap) if a.is_bot else None
        if action == "reply":
            return hb.compose_reply(self, a, target, rng, themes) is not None
        if action == "quote":
            return hb.compose_quote(self, a, target, rng, themes) is not None
        raise ValueError(f"unknown action {action!r}")

    def result(self) -> RunMetrics:
        return self.collector.finish(self)


def initialize(cfg, seed: int) -> Simulation:
    return Simulation(cfg, seed)


@contextmanager
def relaxed_gc(threshold: int = 100_000):
    """Collect young objects less often; the loop allocates many short-lived ones."""
    old = gc.get_threshold()
    gc.set_threshold(threshold, old[1], old[2])
    try:
        yield
    finally:
        gc.set_threshold(*old)


def run(cfg, seed: int, steps: int | None = None) -> RunMetrics:
    with relaxed_gc():
        sim = initialize(cfg, seed)
        for _ in range(cfg.steps if steps is None else steps):
            sim.step()
        return sim.result()
