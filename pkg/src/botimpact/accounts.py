"""Per-account labels, aggregates, and group statistics.

Partisanship comes from the mean opinion score of an account's scored
tweets (anti at or below the cutoff, pro above).  Qanon status is a
keyword rule over profile descriptions, applied to pro accounts only.
Media quality averages fact-checker trust ratings over the rated news
domains an account linked to.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit

import numpy as np
from scipy import stats

from .graph import DirectedGraph
from .ingest import TweetRecord

PARTISAN_CUTOFF = 0.5
ANTI = "anti"
PRO = "pro"

_TOKEN_RE = re.compile(r"[0-9a-z]+")


@dataclass
class AccountRecord:
    account_id: str
    opinion: float
    tweet_rate: float
    tweet_count: int
    partisanship: str
    qanon: bool
    bot: bool
    media_quality: float | None = None
    mean_toxicity: float | None = None
    scored: bool = True  # False when no tweet carried an opinion score


# -- keyword sets ------------------------------------------------------------


@dataclass(frozen=True)
class KeywordSet:
    """Case-folded match terms for one label.

    Single-word terms match whole tokens (hashtag marks are ignored on both
    sides, so the term ``maga`` matches ``#MAGA`` in text); multiword terms
    match as case-insensitive substrings.
    """

    label: str
    tokens: frozenset[str]
    phrases: tuple[str, ...]

    @staticmethod
    def from_terms(label: str, terms: Iterable[str]) -> "KeywordSet":
        tokens: set[str] = set()
        phrases: list[str] = []
        for raw in terms:
            term = raw.strip().casefold().lstrip("#")
            if not term:
                continue
            if any(ch.isspace() for ch in term):
                phrases.append(term)
            else:
                tokens.add(term)
        return KeywordSet(label, frozenset(tokens), tuple(sorted(phrases)))

    def matches(self, text: str) -> bool:
        folded = text.casefold()
        if any(p in folded for p in self.phrases):
            return True
        return not self.tokens.isdisjoint(_TOKEN_RE.findall(folded))


def load_keywords(path: str | Path, label: str) -> KeywordSet:
    """Load a one-term-per-line keyword file; ``#``-prefixed lines are comments.

    Hashtag keywords are therefore stored bare (``maga`` rather than
    ``#MAGA``); matching ignores hashtag marks anyway.
    """
    terms = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(line)
    return KeywordSet.from_terms(label, terms)


def packaged_keywords(label: str) -> KeywordSet:
    """Keyword set shipped with the package: anti_trump, pro_trump, qanon, collection."""
    ref = resources.files("botimpact.data").joinpath(f"{label}_keywords.txt")
    with resources.as_file(ref) as path:
        return load_keywords(path, label)


# -- labels ------------------------------------------------------------------


def label_partisanship(mean_opinion: float, cutoff: float = PARTISAN_CUTOFF) -> str:
    """``anti`` at or below the cutoff, ``pro`` above it."""
    if not 0.0 <= mean_opinion <= 1.0:
        raise ValueError(f"mean opinion {mean_opinion} outside [0,1]")
    return ANTI if mean_opinion <= cutoff else PRO


def label_qanon(description: str, partisanship: str, qanon_keywords: KeywordSet) -> bool:
    """True iff the account is pro and its description matches a Qanon term."""
    return partisanship == PRO and qanon_keywords.matches(description)


def keyword_ground_truth(
    description: str, anti_keywords: KeywordSet, pro_keywords: KeywordSet
) -> int | None:
    """Strong-partisan label from a profile description.

    0 = anti terms only, 1 = pro terms only, None otherwise.  Used to build
    labeled corpora for external classifiers.
    """
    has_anti = anti_keywords.matches(description)
    has_pro = pro_keywords.matches(description)
    if has_anti and not has_pro:
        return 0
    if has_pro and not has_anti:
        return 1
    return None


# -- media quality -----------------------------------------------------------


class MediaRatingsTable:
    """Trust ratings (1-5) keyed by registrable news-site domain.

    A URL matches a rated domain when its host equals the domain or is a
    subdomain of it, so ``www.example.com/a`` matches a rated
    ``example.com``.  This keys matching off the ratings list itself and
    avoids carrying a public-suffix database.
    """

    def __init__(self, ratings: Mapping[str, float]):
        self._ratings: dict[str, float] = {}
        for domain, rating in ratings.items():
            domain = domain.strip().casefold().lstrip(".")
            rating = float(rating)
            if not 1.0 <= rating <= 5.0:
                raise ValueError(f"rating for {domain!r} outside [1,5]: {rating}")
            self._ratings[domain] = rating

    def __len__(self) -> int:
        return len(self._ratings)

    @staticmethod
    def from_csv(path: str | Path) -> "MediaRatingsTable":
        """Read ``domain,rating`` rows (header required)."""
        ratings: dict[str, float] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                ratings[row["domain"]] = float(row["rating"])
        return MediaRatingsTable(ratings)

    def rating_for_url(self, url: str) -> float | None:
        """Rating of the URL's site, or None when unrated.

        Raises ValueError for URLs without a parseable host.
        """
        host = urlsplit(url if "//" in url else "//" + url).hostname
        if not host:
            raise ValueError(f"no host in URL {url!r}")
        host = host.casefold()
        while True:
            rating = self._ratings.get(host)
            if rating is not None:
                return rating
            dot = host.find(".")
            if dot == -1:
                return None
            host = host[dot + 1 :]


def media_quality_score(
    tweets: Iterable[TweetRecord], ratings: MediaRatingsTable
) -> tuple[float | None, int]:
    """Mean trust rating over every rated URL the account shared.

    Each rated URL occurrence counts once, including several in one tweet.
    Returns (score or None when no rated URL was shared, malformed URL tally).
    """
    total = 0.0
    n = 0
    malformed = 0
    for t in tweets:
        for url in t.urls:
            try:
                rating = ratings.rating_for_url(url)
            except ValueError:
                malformed += 1
                continue
            if rating is not None:
                total += rating
                n += 1
    return (total / n if n else None), malformed


# -- account assembly ---------------------------------------------------------


def build_account_records(
    tweets_by_author: Mapping[str, Sequence[TweetRecord]],
    rates: Mapping[str, float],
    bots: set[str],
    descriptions: Mapping[str, str],
    qanon_keywords: KeywordSet,
    ratings: MediaRatingsTable | None = None,
    cutoff: float = PARTISAN_CUTOFF,
) -> dict[str, AccountRecord]:
    """Assemble one AccountRecord per author.

    Accounts with zero scored tweets get the neutral opinion 0.5 and are
    flagged unscored so partisan statistics can exclude them.
    """
    out: dict[str, AccountRecord] = {}
    for account in sorted(tweets_by_author):
        tweets = tweets_by_author[account]
        opinions = [t.opinion for t in tweets if t.opinion is not None]
        toxicities = [t.toxicity for t in tweets if t.toxicity is not None]
        opinion = sum(opinions) / len(opinions) if opinions else 0.5
        partisanship = label_partisanship(opinion, cutoff)
        quality = None
        if ratings is not None:
            quality, _ = media_quality_score(tweets, ratings)
        out[account] = AccountRecord(
            account_id=account,
            opinion=opinion,
            tweet_rate=rates.get(account, 0.0),
            tweet_count=len(tweets),
            partisanship=partisanship,
            qanon=label_qanon(descriptions.get(account, ""), partisanship, qanon_keywords),
            bot=account in bots,
            media_quality=quality,
            mean_toxicity=sum(toxicities) / len(toxicities) if toxicities else None,
            scored=bool(opinions),
        )
    return out


# -- group statistics ----------------------------------------------------------


@dataclass
class GroupRow:
    partisanship: str  # "" on the totals row
    bot: bool | None
    qanon: bool | None
    accounts: int
    tweets: int
    mean_rate: float
    mean_media_quality: float | None
    mean_toxicity: float | None


def group_summary(accounts: Iterable[AccountRecord]) -> list[GroupRow]:
    """One row per populated (partisanship, bot, qanon) cell plus a totals row."""
    cells: dict[tuple[str, bool, bool], list[AccountRecord]] = {}
    everyone: list[AccountRecord] = []
    for rec in accounts:
        cells.setdefault((rec.partisanship, rec.bot, rec.qanon), []).append(rec)
        everyone.append(rec)

    def _mean_opt(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    def _row(key_part: str, bot, qanon, members: list[AccountRecord]) -> GroupRow:
        return GroupRow(
            partisanship=key_part,
            bot=bot,
            qanon=qanon,
            accounts=len(members),
            tweets=sum(r.tweet_count for r in members),
            mean_rate=sum(r.tweet_rate for r in members) / len(members),
            mean_media_quality=_mean_opt(
                [r.media_quality for r in members if r.media_quality is not None]
            ),
            mean_toxicity=_mean_opt(
                [r.mean_toxicity for r in members if r.mean_toxicity is not None]
            ),
        )

    rows = [
        _row(part, bot, qanon, members)
        for (part, bot, qanon), members in sorted(cells.items())
    ]
    if everyone:
        rows.append(_row("", None, None, everyone))
    return rows


def retweet_leaderboard(
    retweet_network: DirectedGraph,
    retweeter_filter: Callable[[str], bool],
    k: int,
) -> list[tuple[str, float]]:
    """Top-k accounts by retweets received from retweeters passing the filter.

    Descending by count; ties broken by account id ascending.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    src, tgt, w = retweet_network.edge_arrays()
    received: dict[str, float] = {}
    for e in range(len(src)):
        retweeter = retweet_network.label(int(tgt[e]))
        if retweeter_filter(retweeter):
            author = retweet_network.label(int(src[e]))
            received[author] = received.get(author, 0.0) + float(w[e])
    ranked = sorted(received.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def follower_overlap(
    follower_network: DirectedGraph, set_a: set[str], set_b: set[str]
) -> tuple[int, int, int]:
    """(A-only, B-only, both) follower counts for two account sets."""

    def _followers(ids: set[str]) -> set[str]:
        out: set[str] = set()
        for account in ids:
            targets, _ = follower_network.followers_of(follower_network.index(account))
            out.update(follower_network.label(int(t)) for t in targets)
        return out

    fa = _followers(set_a)
    fb = _followers(set_b)
    both = fa & fb
    return len(fa - both), len(fb - both), len(both)


def co_partisan_fraction(
    follower_network: DirectedGraph, bot: str, labels: Mapping[str, str]
) -> float | None:
    """Fraction of a bot's labeled followers sharing the bot's partisanship.

    None (not 0) when the bot has no labeled followers.
    """
    own = labels.get(bot)
    if own is None:
        return None
    targets, _ = follower_network.followers_of(follower_network.index(bot))
    labeled = 0
    shared = 0
    for t in targets:
        side = labels.get(follower_network.label(int(t)))
        if side is None:
            continue
        labeled += 1
        if side == own:
            shared += 1
    return shared / labeled if labeled else None


# -- two-sample significance tests ----------------------------------------------


def welch_t_test(group_a: Sequence[float], group_b: Sequence[float]) -> tuple[float, float]:
    """Welch's unequal-variance t-test; returns (mean difference, two-sided p).

    Both groups degenerate with equal means gives p = 1.
    """
    if len(group_a) < 2 or len(group_b) < 2:
        raise ValueError("each group needs n >= 2")
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    diff = float(a.mean() - b.mean())
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        return diff, 1.0 if diff == 0.0 else 0.0
    se2 = va / len(a) + vb / len(b)
    t = diff / math.sqrt(se2)
    dof = se2**2 / (
        (va / len(a)) ** 2 / (len(a) - 1) + (vb / len(b)) ** 2 / (len(b) - 1)
    )
    p = float(2.0 * stats.t.sf(abs(t), dof))
    return diff, p


def two_proportion_z_test(
    successes_a: int, n_a: int, successes_b: int, n_b: int
) -> tuple[float, float]:
    """Two-proportion z-test; returns (rate difference, two-sided p)."""
    if n_a < 1 or n_b < 1:
        raise ValueError("each group needs n >= 1")
    pa, pb = successes_a / n_a, successes_b / n_b
    diff = pa - pb
    pooled = (successes_a + successes_b) / (n_a + n_b)
    var = pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b)
    if var == 0.0:
        return diff, 1.0 if diff == 0.0 else 0.0
    z = diff / math.sqrt(var)
    return diff, float(2.0 * stats.norm.sf(abs(z)))
