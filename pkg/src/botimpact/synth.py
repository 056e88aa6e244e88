"""Seeded synthetic corpora with planted ground truth.

Three topologies cover the pipeline's interesting regimes:

* ``two_block_polarized`` — two partisan communities, dense follow edges
  inside each block and an ``eps``-scaled fraction across, opinions planted
  near the block means;
* ``core_periphery_qanon`` — an interconnected bot core whose periphery
  humans follow only core bots and never each other, with either an ``echo``
  audience (opinions matching the core) or a ``mixed`` one;
* ``planted_bot_retweet`` — retweet behavior where bots retweet humans at a
  high rate, humans retweet humans moderately, and everything into bots is
  rare.

All randomness is counter-based (Philox keyed by seed, stream, and entity
index), so identical specs produce byte-identical files regardless of
generation order.  Planted labels go to a sidecar file that inference never
reads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

TOPOLOGIES = ("two_block_polarized", "core_periphery_qanon", "planted_bot_retweet")

_STREAMS = {
    "opinion": 0,
    "follow": 1,
    "tweets": 2,
    "description": 3,
    "structure": 4,
}

_ANTI_TERMS = ("#resist", "#voteblue", "#theresistance")
_PRO_TERMS = ("#maga", "#kag", "#trump2020")
_QANON_TERM = "#wwg1wga"

# synthetic rated news domains, low to high trust
_DOMAIN_POOL = tuple((f"site{k:02d}.example", 1.0 + 4.0 * k / 9.0) for k in range(10))


class SynthSpecError(ValueError):
    """Invalid generator specification; message names the offending field."""


@dataclass
class SynthSpec:
    seed: int = 0
    topology: str = "two_block_polarized"
    days: int = 30
    start_day: date = date(2020, 1, 1)
    human_rate: float = 1.0  # tweets/day
    bot_rate: float = 100.0  # bots post about two orders of magnitude more
    retweet_frac: float = 0.3
    url_prob: float = 0.15
    opinion_concentration: float = 8.0
    tweet_score_concentration: float = 60.0
    # two_block_polarized
    humans_per_block: int = 50
    bots_per_block: int = 5
    humans_block_b: int = -1  # -1 mirrors block a
    bots_block_b: int = -1
    qanon_bot_frac: float = 0.0  # fraction of pro-block bots marked Qanon
    qanon_human_frac: float = 0.0  # fraction of pro-block humans marked Qanon
    p_intra: float = 0.2
    eps: float = 0.05  # cross-block follow probability = eps * p_intra
    anti_mean: float = 0.12
    pro_mean: float = 0.88
    # core_periphery_qanon
    core_bots: int = 10
    periphery_humans: int = 100
    k_follow: int = 3
    p_core: float = 0.5
    audience: str = "echo"  # echo | mixed
    core_opinion_mean: float = 0.92
    # planted_bot_retweet
    n_bots: int = 30
    n_humans: int = 300
    bot_rt_human: float = 8.0  # expected retweets/day
    human_rt_human: float = 3.0
    human_rt_bot: float = 0.01
    bot_rt_bot: float = 0.01
    amplify_targets: int = 3  # bots concentrate retweets on this many accounts
    follow_out: int = 10

    def validate(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise SynthSpecError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        positive = ("days", "human_rate", "bot_rate", "opinion_concentration",
                    "tweet_score_concentration")
        for name in positive:
            if getattr(self, name) <= 0:
                raise SynthSpecError(f"{name} must be positive")
        unit = ("retweet_frac", "url_prob", "qanon_bot_frac", "qanon_human_frac",
                "p_intra", "p_core", "anti_mean", "pro_mean", "core_opinion_mean")
        for name in unit:
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SynthSpecError(f"{name} must be in [0,1]")
        if self.eps < 0:
            raise SynthSpecError("eps must be >= 0")
        if self.topology == "two_block_polarized":
            if self.humans_per_block + self.bots_per_block < 1:
                raise SynthSpecError("humans_per_block + bots_per_block must be >= 1")
            if min(self.humans_per_block, self.bots_per_block) < 0:
                raise SynthSpecError("block sizes must be >= 0")
        if self.topology == "core_periphery_qanon":
            if self.core_bots < 1:
                raise SynthSpecError("core_bots must be >= 1")
            if self.periphery_humans < 1:
                raise SynthSpecError("periphery_humans must be >= 1")
            if self.k_follow < 1:
                raise SynthSpecError("k_follow must be >= 1")
            if self.audience not in ("echo", "mixed"):
                raise SynthSpecError("audience must be 'echo' or 'mixed'")
        if self.topology == "planted_bot_retweet":
            if self.n_bots < 0:
                raise SynthSpecError("n_bots must be >= 0")
            if self.n_humans < 1:
                raise SynthSpecError("n_humans must be >= 1")
            if self.amplify_targets < 1:
                raise SynthSpecError("amplify_targets must be >= 1")

    @staticmethod
    def from_file(path: str | Path) -> "SynthSpec":
        """Parse a ``key = value`` spec file (# comments allowed)."""
        known = {f.name: f for f in fields(SynthSpec)}
        kwargs: dict = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SynthSpecError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise SynthSpecError(f"{path}:{lineno}: unknown field {key!r}")
            kwargs[key] = _coerce(known[key].type, value, key)
        spec = SynthSpec(**kwargs)
        spec.validate()
        return spec


def _coerce(annotation: str, value: str, key: str):
    try:
        if annotation == "int":
            return int(value)
        if annotation == "float":
            return float(value)
        if annotation == "date":
            return date.fromisoformat(value)
        return value
    except ValueError:
        raise SynthSpecError(f"field {key!r}: cannot parse {value!r} as {annotation}") from None


def _rng(seed: int, stream: str, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_STREAMS[stream], *index))
    return np.random.Generator(np.random.Philox(ss))


def _beta(rng: np.random.Generator, mean: float, concentration: float) -> float:
    mean = min(max(mean, 1e-3), 1.0 - 1e-3)
    return float(rng.beta(mean * concentration, (1.0 - mean) * concentration))


@dataclass
class _Account:
    account_id: str
    index: int
    block: str
    is_bot: bool
    qanon: bool
    opinion: float
    rate: float
    description: str
    following: list[str]
    retweet_pool: list[str]  # candidate accounts this one retweets
    domain_tier: tuple[int, int]  # index range into the rated domain pool


def generate(spec: SynthSpec, outdir: str | Path) -> dict:
    """Generate the corpus for ``spec`` into ``outdir``.

    Writes ``tweets.jsonl``, ``profiles.jsonl``, ``ratings.csv``,
    ``labels_truth.csv`` and ``synth_summary.json``; returns the summary.
    """
    spec.validate()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if spec.topology == "two_block_polarized":
        roster = _roster_two_block(spec)
    elif spec.topology == "core_periphery_qanon":
        roster = _roster_core_periphery(spec)
    else:
        roster = _roster_planted_retweets(spec)
    return _emit(spec, roster, outdir)


def gen_two_block(spec: SynthSpec, outdir: str | Path) -> dict:
    spec.topology = "two_block_polarized"
    return generate(spec, outdir)


def gen_core_periphery(spec: SynthSpec, outdir: str | Path) -> dict:
    spec.topology = "core_periphery_qanon"
    return generate(spec, outdir)


def gen_planted_bot_retweets(spec: SynthSpec, outdir: str | Path) -> dict:
    spec.topology = "planted_bot_retweet"
    return generate(spec, outdir)


# -- rosters --------------------------------------------------------------------


def _account_id(index: int) -> str:
    return f"u{index:05d}"


def _description(spec: SynthSpec, index: int, block: str, qanon: bool) -> str:
    rng = _rng(spec.seed, "description", index)
    parts = ["synthetic account"]
    terms = _ANTI_TERMS if block == "anti" else _PRO_TERMS
    if block in ("anti", "pro") and rng.random() < 0.6:
        parts.append(terms[int(rng.integers(len(terms)))])
    if qanon:
        parts.append(_QANON_TERM)
    return " ".join(parts)


def _roster_two_block(spec: SynthSpec) -> list[_Account]:
    humans_b = spec.humans_block_b if spec.humans_block_b >= 0 else spec.humans_per_block
    bots_b = spec.bots_block_b if spec.bots_block_b >= 0 else spec.bots_per_block
    blocks = []
    for name, mean, humans, bots in (
        ("anti", spec.anti_mean, spec.humans_per_block, spec.bots_per_block),
        ("pro", spec.pro_mean, humans_b, bots_b),
    ):
        members = ["human"] * humans + ["bot"] * bots
        blocks.append((name, mean, members))
    roster: list[_Account] = []
    index = 0
    for name, mean, members in blocks:
        for kind in members:
            is_bot = kind == "bot"
            rng_o = _rng(spec.seed, "opinion", index)
            opinion = _beta(rng_o, mean if not is_bot else (0.04 if name == "anti" else 0.96),
                            spec.opinion_concentration)
            qanon_frac = spec.qanon_bot_frac if is_bot else spec.qanon_human_frac
            qanon = name == "pro" and rng_o.random() < qanon_frac
            roster.append(
                _Account(
                    account_id=_account_id(index),
                    index=index,
                    block=f"{name}_qanon" if qanon else name,
                    is_bot=is_bot,
                    qanon=qanon,
                    opinion=opinion,
                    rate=spec.bot_rate if is_bot else spec.human_rate,
                    description=_description(spec, index, name, qanon),
                    following=[],
                    retweet_pool=[],
                    domain_tier=(0, 5) if is_bot else (4, 10),
                    )
            )
            index += 1

    def _side(account: _Account) -> str:
        return "anti" if account.block.startswith("anti") else "pro"

    by_side: dict[str, list[_Account]] = {"anti": [], "pro": []}
    for acct in roster:
        by_side[_side(acct)].append(acct)
    p_cross = min(spec.eps * spec.p_intra, 1.0)
    for acct in roster:
        rng_f = _rng(spec.seed, "follow", acct.index)
        following = []
        for other in roster:
            if other.index == acct.index:
                continue
            p = spec.p_intra if _side(other) == _side(acct) else p_cross
            if rng_f.random() < p:
                following.append(other.account_id)
        acct.following = following
        # retweets flow into humans: bots amplify, they rarely get amplified
        same = [
            a.account_id
            for a in by_side[_side(acct)]
            if a.index != acct.index and not a.is_bot
        ]
        other_side = "pro" if _side(acct) == "anti" else "anti"
        cross = [a.account_id for a in by_side[other_side] if not a.is_bot]
        acct.retweet_pool = same + cross[: int(round(len(cross) * min(spec.eps, 1.0)))]
    return roster


def _roster_core_periphery(spec: SynthSpec) -> list[_Account]:
    roster: list[_Account] = []
    for index in range(spec.core_bots):
        rng_o = _rng(spec.seed, "opinion", index)
        roster.append(
            _Account(
                account_id=_account_id(index),
                index=index,
                block="core",
                is_bot=True,
                qanon=True,
                opinion=_beta(rng_o, spec.core_opinion_mean, 4 * spec.opinion_concentration),
                rate=spec.bot_rate,
                description=_description(spec, index, "pro", True),
                following=[],
                retweet_pool=[],
                domain_tier=(0, 5),
            )
        )
    for offset in range(spec.periphery_humans):
        index = spec.core_bots + offset
        rng_o = _rng(spec.seed, "opinion", index)
        if spec.audience == "echo":
            opinion = _beta(rng_o, spec.core_opinion_mean, 4 * spec.opinion_concentration)
        else:
            opinion = _beta(rng_o, 0.5, 2.0)  # spread audience
        roster.append(
            _Account(
                account_id=_account_id(index),
                index=index,
                block="periphery",
                is_bot=False,
                qanon=False,
                opinion=opinion,
                rate=spec.human_rate,
                description=_description(spec, index, "pro", False),
                following=[],
                retweet_pool=[],
                domain_tier=(4, 10),
            )
        )

    core_ids = [a.account_id for a in roster[: spec.core_bots]]
    for acct in roster:
        rng_f = _rng(spec.seed, "follow", acct.index)
        if acct.block == "core":
            acct.following = [
                other
                for other in core_ids
                if other != acct.account_id and rng_f.random() < spec.p_core
            ]
            acct.retweet_pool = [c for c in core_ids if c != acct.account_id]
        else:
            k = min(spec.k_follow, len(core_ids))
            picks = rng_f.choice(len(core_ids), size=k, replace=False)
            acct.following = [core_ids[int(p)] for p in sorted(picks)]
            acct.retweet_pool = list(acct.following)
    return roster


def _roster_planted_retweets(spec: SynthSpec) -> list[_Account]:
    roster: list[_Account] = []
    total = spec.n_bots + spec.n_humans
    for index in range(total):
        is_bot = index < spec.n_bots
        rng_o = _rng(spec.seed, "opinion", index)
        roster.append(
            _Account(
                account_id=_account_id(index),
                index=index,
                block="bot" if is_bot else "human",
                is_bot=is_bot,
                qanon=False,
                opinion=_beta(rng_o, 0.5, 4.0),
                rate=spec.bot_rate if is_bot else spec.human_rate,
                description="synthetic account",
                following=[],
                retweet_pool=[],
                domain_tier=(0, 5) if is_bot else (4, 10),
            )
        )
    ids = [a.account_id for a in roster]
    humans = ids[spec.n_bots :]
    for acct in roster:
        rng_f = _rng(spec.seed, "follow", acct.index)
        k = min(spec.follow_out, total - 1)
        picks = rng_f.choice(total - 1, size=k, replace=False)
        pool = [i for i in range(total) if i != acct.index]
        acct.following = [ids[pool[int(p)]] for p in sorted(picks)]
        if acct.is_bot and humans:
            # bots amplify a fixed handful of accounts rather than spraying
            k_amp = min(spec.amplify_targets, len(humans))
            amp = rng_f.choice(len(humans), size=k_amp, replace=False)
            acct.retweet_pool = [humans[int(i)] for i in sorted(amp)]
    return roster


# -- emission ---------------------------------------------------------------------


def _emit(spec: SynthSpec, roster: list[_Account], outdir: Path) -> dict:
    bots = [a.account_id for a in roster if a.is_bot]
    humans = [a.account_id for a in roster if not a.is_bot]
    planted = spec.topology == "planted_bot_retweet"

    tweets_path = outdir / "tweets.jsonl"
    n_tweets = 0
    n_retweets = 0
    with open(tweets_path, "w", encoding="utf-8") as fh:
        for acct in roster:
            rng_t = _rng(spec.seed, "tweets", acct.index)
            for day_offset in range(spec.days):
                day = spec.start_day + timedelta(days=day_offset)
                if planted:
                    events = _planted_day_events(spec, acct, rng_t, bots, humans)
                else:
                    events = _generic_day_events(spec, acct, rng_t)
                if day_offset == 0 and not events:
                    events = [None]  # every account enters the corpus
                for k, retweeted in enumerate(events):
                    n_tweets += 1
                    n_retweets += retweeted is not None
                    fh.write(_tweet_json(spec, acct, day, k, retweeted, rng_t))
                    fh.write("\n")

    profiles_path = outdir / "profiles.jsonl"
    with open(profiles_path, "w", encoding="utf-8") as fh:
        for acct in roster:
            fh.write(
                json.dumps(
                    {
                        "account_id": acct.account_id,
                        "description": acct.description,
                        "following_ids": acct.following,
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")

    ratings_path = outdir / "ratings.csv"
    with open(ratings_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "rating"])
        for domain, rating in _DOMAIN_POOL:
            writer.writerow([domain, f"{rating:.4f}"])

    labels_path = outdir / "labels_truth.csv"
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["account_id", "is_bot", "block"])
        for acct in roster:
            writer.writerow([acct.account_id, int(acct.is_bot), acct.block])

    summary = {
        "topology": spec.topology,
        "seed": spec.seed,
        "accounts": len(roster),
        "bots": len(bots),
        "days": spec.days,
        "tweets": n_tweets,
        "retweets": n_retweets,
        "files": {
            "tweets": tweets_path.name,
            "profiles": profiles_path.name,
            "ratings": ratings_path.name,
            "labels_truth": labels_path.name,
        },
    }
    (outdir / "synth_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary


def _generic_day_events(
    spec: SynthSpec, acct: _Account, rng: np.random.Generator
) -> list[str | None]:
    count = int(rng.poisson(acct.rate))
    events: list[str | None] = []
    for _ in range(count):
        if acct.retweet_pool and rng.random() < spec.retweet_frac:
            events.append(acct.retweet_pool[int(rng.integers(len(acct.retweet_pool)))])
        else:
            events.append(None)
    return events


def _planted_day_events(
    spec: SynthSpec,
    acct: _Account,
    rng: np.random.Generator,
    bots: list[str],
    humans: list[str],
) -> list[str | None]:
    if acct.is_bot:
        rt_human, rt_bot = spec.bot_rt_human, spec.bot_rt_bot
        originals = rng.poisson(max(acct.rate - rt_human - rt_bot, 0.0))
        human_pool = acct.retweet_pool or humans
    else:
        rt_human, rt_bot = spec.human_rt_human, spec.human_rt_bot
        originals = rng.poisson(max(acct.rate, 0.1))
        human_pool = humans
    events: list[str | None] = [None] * int(originals)
    for pool, rate in ((human_pool, rt_human), (bots, rt_bot)):
        candidates = [p for p in pool if p != acct.account_id]
        if not candidates:
            continue
        for _ in range(int(rng.poisson(rate))):
            events.append(candidates[int(rng.integers(len(candidates)))])
    return events


def _tweet_json(
    spec: SynthSpec,
    acct: _Account,
    day: date,
    k: int,
    retweeted: str | None,
    rng: np.random.Generator,
) -> str:
    seconds = int(rng.integers(86_400))
    ts = datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(
        seconds=seconds
    )
    urls: list[str] = []
    if retweeted is None and rng.random() < spec.url_prob:
        lo, hi = acct.domain_tier
        domain = _DOMAIN_POOL[int(rng.integers(lo, hi))][0]
        urls.append(f"https://{domain}/story{int(rng.integers(1000)):03d}")
    opinion = _beta(rng, acct.opinion, spec.tweet_score_concentration)
    toxicity = _beta(rng, 0.15 if acct.is_bot else 0.25, 10.0)
    record = {
        "tweet_id": f"t-{acct.account_id}-{day.isoformat()}-{k:04d}",
        "author_id": acct.account_id,
        "timestamp": ts.isoformat(),
        "text": f"synthetic tweet {k} by {acct.account_id}",
        "retweeted_author_id": retweeted,
        "urls": urls,
        "opinion": round(opinion, 6),
        "toxicity": round(toxicity, 6),
    }
    return json.dumps(record, sort_keys=True)
