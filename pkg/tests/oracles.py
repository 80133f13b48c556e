"""Independent reference computations used as test oracles.

Written from the rule descriptions with plain loops and set arithmetic;
nothing here imports the package's scoring code.
"""


def conversion_weights(user_stance, user_themes, tweets, memory, wl=1.0, wrt=0.5, wrep=-0.5, ws=1.0, wt=0.8):
    """Per-stance conversion weight for candidates given as dicts.

    Each tweet dict has stance, themes (set), likes, retweets, replies.
    Returns {stance: weight} over -1, 0, 1.
    """
    totals = {k: sum(t[k] for t in tweets) for k in ("likes", "retweets", "replies")}
    metric_w = {"likes": wl, "retweets": wrt, "replies": wrep}

    def eng(t):
        s = 0.0
        for k, w in metric_w.items():
            if totals[k] != 0:
                s += w * t[k] / totals[k]
        return s

    def compat(t):
        cs = 1 - abs(user_stance - t["stance"]) / 2
        union = user_themes | t["themes"]
        ct = len(user_themes & t["themes"]) / len(union) if union else 0.0
        return cs * ws + ct * wt

    all_c = sum(compat(t) for t in tweets)
    out = {}
    for s in (-1, 0, 1):
        group = [t for t in tweets if t["stance"] == s]
        if not group:
            out[s] = 0.0
            continue
        rc = sum(compat(t) for t in group) / all_c if all_c else 0.0
        rg = sum(eng(t) for t in group)
        out[s] = max(0.0, rg / memory + memory * rc)
    if sum(out.values()) == 0:
        present = {t["stance"] for t in tweets}
        out = {s: (1.0 if s in present else 0.0) for s in (-1, 0, 1)}
    return out


def conversion_probabilities(*args, **kw):
    w = conversion_weights(*args, **kw)
    z = sum(w.values())
    return {s: v / z for s, v in w.items()}
