"""File-to-file pipeline stages behind the CLI.

Every stage reads flat files, writes flat files atomically (temp then
rename), and updates ``manifest.json`` with row counts and content
checksums.  Outputs carry no timestamps, so identical inputs and
configuration reproduce byte-identical results.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import accounts as acc
from . import botdetect, ingest
from .config import PipelineConfig
from .ghic import SolveSettings, daily_ghic_series, ghic_per_bot
from .graph import DirectedGraph, load_edge_list, save_edge_list
from .opinion import identify_stubborn

log = logging.getLogger(__name__)

GROUP_NAMES = ("all_bots", "anti_bots", "pro_bots", "qanon_bots")


class StageError(RuntimeError):
    """A pipeline stage could not run (usually missing prior outputs)."""


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _atomic_write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    tmp.replace(path)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _update_manifest(out_dir: Path, stage: str, payload: dict, files: Iterable[Path]) -> None:
    manifest_path = out_dir / "manifest.json"
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    payload = dict(payload)
    payload["checksums"] = {p.name: _sha256(p) for p in sorted(files)}
    manifest[stage] = payload
    _atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map over a bounded thread pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- build ------------------------------------------------------------------------


def stage_build(cfg: PipelineConfig) -> dict:
    """Parse raw files into networks, rates, and daily activity tables."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tweet_stats = ingest.ParseStats()
    tweets = list(ingest.load_tweets(cfg.tweets, stats=tweet_stats))
    if not tweets:
        raise ingest.IngestError(f"no parseable tweets in {cfg.tweets}")
    window = ingest.observed_window(tweets)
    corpus = ingest.corpus_accounts(tweets)
    counts = ingest.tweet_counts(tweets, window)
    by_day = ingest.bucket_by_day(tweets)
    days = sorted(by_day)

    profile_stats = ingest.ParseStats()
    profiles = ingest.load_profiles(
        cfg.profiles, stats=profile_stats, followings_cap=cfg.followings_cap
    )
    follower = ingest.build_follower_network(profiles, corpus)
    save_edge_list(follower, out_dir / "follower.tsv")

    def _build_day(day: date) -> tuple[date, DirectedGraph]:
        return day, ingest.build_daily_retweet_network(by_day[day], day)

    retweet_weight = 0.0
    written: list[Path] = [out_dir / "follower.tsv"]
    for day, net in _pmap(_build_day, days, cfg.workers):
        path = out_dir / f"retweet_{day.isoformat()}.tsv"
        save_edge_list(net, path)
        retweet_weight += net.total_weight()
        written.append(path)

    duration = window.duration_days
    _atomic_write_rows(
        out_dir / "rates.csv",
        ["account_id", "tweet_count", "tweet_rate"],
        [(a, counts[a], _fmt(counts[a] / duration)) for a in sorted(counts)],
    )
    written.append(out_dir / "rates.csv")

    _atomic_write_rows(
        out_dir / "daily_active.csv",
        ["day", "account_id"],
        [
            (day.isoformat(), account)
            for day in days
            for account in sorted(ingest.active_set(by_day[day], day))
        ],
    )
    written.append(out_dir / "daily_active.csv")

    payload = {
        "config": cfg.snapshot(),
        "window": {"start": window.start.isoformat(), "end": window.end.isoformat(),
                   "duration_days": duration},
        "tweets_parsed": tweet_stats.parsed,
        "tweets_skipped": tweet_stats.skipped,
        "profiles_parsed": profile_stats.parsed,
        "profiles_skipped": profile_stats.skipped,
        "accounts": len(corpus),
        "days": len(days),
        "follower_edges": follower.edge_count,
        "retweets_total": int(retweet_weight),
    }
    _update_manifest(out_dir, "build", payload, written)
    return payload


# -- bot detection -----------------------------------------------------------------


def _retweet_paths(out_dir: Path) -> list[Path]:
    return sorted(out_dir.glob("retweet_*.tsv"))


def stage_detect(cfg: PipelineConfig) -> dict:
    """Daily factor-graph inference, threshold, and cross-day union."""
    out_dir = Path(cfg.out_dir)
    day_paths = _retweet_paths(out_dir)
    if not day_paths:
        raise StageError(f"no daily retweet networks under {out_dir}; run build first")
    params = botdetect.FactorGraphParams(
        prior_bot=cfg.bp_prior_bot,
        psi_hh=cfg.bp_psi_hh,
        psi_hb=cfg.bp_psi_hb,
        psi_bh=cfg.bp_psi_bh,
        psi_bb=cfg.bp_psi_bb,
        weight_cap=cfg.bp_weight_cap,
        damping=cfg.bp_damping,
        max_iterations=cfg.bp_max_iterations,
        tolerance=cfg.bp_tolerance,
    )

    def _infer(path: Path) -> tuple[str, botdetect.BotPosterior]:
        day = path.stem.removeprefix("retweet_")
        return day, botdetect.infer_bot_probabilities(load_edge_list(path), params)

    results = _pmap(_infer, day_paths, cfg.workers)

    written: list[Path] = []
    daily_sets = []
    pooled_values: list[float] = []
    for day, posterior in results:
        path = out_dir / f"posterior_{day}.csv"
        _atomic_write_rows(
            path,
            ["account_id", "bot_probability", "converged"],
            [
                (a, _fmt(p), str(posterior.converged).lower())
                for a, p in sorted(posterior.marginals.items())
            ],
        )
        written.append(path)
        daily_sets.append(botdetect.threshold_bots(posterior, cfg.bot_threshold))
        pooled_values.extend(posterior.marginals.values())

    bots = botdetect.union_daily_bots(daily_sets)
    bots_path = out_dir / "bots.txt"
    _atomic_write_text(bots_path, "".join(f"{b}\n" for b in sorted(bots)))
    written.append(bots_path)

    pooled = botdetect.BotPosterior(
        marginals={str(i): v for i, v in enumerate(pooled_values)},
        converged=True,
        residual=0.0,
        iterations=0,
    )
    hist_counts, edges = botdetect.probability_histogram(pooled, cfg.histogram_bins)
    hist_path = out_dir / "histogram.csv"
    _atomic_write_rows(
        hist_path,
        ["bin_low", "bin_high", "count"],
        [
            (_fmt(edges[i]), _fmt(edges[i + 1]), hist_counts[i])
            for i in range(len(hist_counts))
        ],
    )
    written.append(hist_path)

    payload = {
        "days": len(results),
        "bots": len(bots),
        "unconverged_days": sum(1 for _, post in results if not post.converged),
    }
    _update_manifest(out_dir, "detect", payload, written)
    return payload


# -- classification ------------------------------------------------------------------


def _load_bots(out_dir: Path) -> set[str]:
    path = out_dir / "bots.txt"
    if not path.exists():
        raise StageError(f"{path} missing; run detect-bots first")
    return {line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()}


def _load_rates(out_dir: Path) -> tuple[dict[str, int], dict[str, float]]:
    path = out_dir / "rates.csv"
    if not path.exists():
        raise StageError(f"{path} missing; run build first")
    counts: dict[str, int] = {}
    rates: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            counts[row["account_id"]] = int(row["tweet_count"])
            rates[row["account_id"]] = float(row["tweet_rate"])
    return counts, rates


def _keyword_set(path: str, label: str) -> acc.KeywordSet:
    if path:
        return acc.load_keywords(path, label)
    return acc.packaged_keywords(label)


def stage_classify(cfg: PipelineConfig) -> dict:
    """Per-account labels and aggregates plus the group summary table."""
    out_dir = Path(cfg.out_dir)
    _, rates = _load_rates(out_dir)
    bots = _load_bots(out_dir)

    ratings = None
    warning = None
    if Path(cfg.ratings).exists():
        ratings = acc.MediaRatingsTable.from_csv(cfg.ratings)
    else:
        warning = f"ratings file {cfg.ratings} missing; media quality columns omitted"
        log.warning(warning)

    descriptions: dict[str, str] = {}
    for profile in ingest.load_profiles(cfg.profiles, followings_cap=cfg.followings_cap):
        descriptions[profile.account_id] = profile.description

    tweets_by_author: dict[str, list[ingest.TweetRecord]] = {}
    for tweet in ingest.load_tweets(cfg.tweets):
        tweets_by_author.setdefault(tweet.author_id, []).append(tweet)
        if tweet.retweeted_author_id is not None:
            # retweeted-only accounts stay in the table with zero activity
            tweets_by_author.setdefault(tweet.retweeted_author_id, [])

    qanon_kw = _keyword_set(cfg.qanon_keywords, "qanon")
    records = acc.build_account_records(
        tweets_by_author,
        rates,
        bots,
        descriptions,
        qanon_kw,
        ratings=ratings,
        cutoff=cfg.partisan_cutoff,
    )

    def _opt(x: float | None) -> str:
        return "" if x is None else _fmt(x)

    accounts_path = out_dir / "accounts.csv"
    _atomic_write_rows(
        accounts_path,
        ["account_id", "opinion", "partisanship", "qanon", "bot", "scored",
         "tweet_count", "tweet_rate", "media_quality", "mean_toxicity"],
        [
            (
                r.account_id, _fmt(r.opinion), r.partisanship, int(r.qanon),
                int(r.bot), int(r.scored), r.tweet_count, _fmt(r.tweet_rate),
                _opt(r.media_quality), _opt(r.mean_toxicity),
            )
            for r in (records[a] for a in sorted(records))
        ],
    )

    summary_path = out_dir / "group_summary.csv"
    rows = []
    for row in acc.group_summary(records.values()):
        rows.append(
            (
                row.partisanship or "all",
                "" if row.bot is None else int(row.bot),
                "" if row.qanon is None else int(row.qanon),
                row.accounts,
                row.tweets,
                _fmt(row.mean_rate),
                _opt(row.mean_media_quality),
                _opt(row.mean_toxicity),
            )
        )
    _atomic_write_rows(
        summary_path,
        ["partisanship", "bot", "qanon", "accounts", "tweets",
         "mean_tweet_rate", "mean_media_quality", "mean_toxicity"],
        rows,
    )

    payload = {
        "accounts": len(records),
        "bots": sum(1 for r in records.values() if r.bot),
        "qanon": sum(1 for r in records.values() if r.qanon),
        "warning": warning,
    }
    _update_manifest(out_dir, "classify", payload, [accounts_path, summary_path])
    return payload


# -- ghic -----------------------------------------------------------------------------


def _load_accounts_csv(out_dir: Path) -> list[dict]:
    path = out_dir / "accounts.csv"
    if not path.exists():
        raise StageError(f"{path} missing; run classify first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _load_daily_active(out_dir: Path) -> dict[date, set[str]]:
    path = out_dir / "daily_active.csv"
    if not path.exists():
        raise StageError(f"{path} missing; run build first")
    active: dict[date, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            active.setdefault(date.fromisoformat(row["day"]), set()).add(row["account_id"])
    return active


def ghic_groups_from_rows(rows: list[dict], requested: Iterable[str]) -> dict[str, set[str]]:
    """Bot group definitions over the classified account table."""
    groups: dict[str, set[str]] = {name: set() for name in requested}
    unknown = set(groups) - set(GROUP_NAMES)
    if unknown:
        raise StageError(f"unknown ghic groups: {sorted(unknown)}; known: {GROUP_NAMES}")
    for row in rows:
        if row["bot"] != "1":
            continue
        account = row["account_id"]
        if "all_bots" in groups:
            groups["all_bots"].add(account)
        if row["partisanship"] == "anti" and "anti_bots" in groups:
            groups["anti_bots"].add(account)
        if row["partisanship"] == "pro" and row["qanon"] != "1" and "pro_bots" in groups:
            groups["pro_bots"].add(account)
        if row["qanon"] == "1" and "qanon_bots" in groups:
            groups["qanon_bots"].add(account)
    return groups


def stage_ghic(cfg: PipelineConfig) -> dict:
    """Daily influence series and per-bot efficiency distributions."""
    out_dir = Path(cfg.out_dir)
    follower_path = out_dir / "follower.tsv"
    if not follower_path.exists():
        raise StageError(f"{follower_path} missing; run build first")
    follower = load_edge_list(follower_path)
    _, rates = _load_rates(out_dir)
    rows = _load_accounts_csv(out_dir)
    active_by_day = _load_daily_active(out_dir)

    opinions = {row["account_id"]: float(row["opinion"]) for row in rows}
    bots = {row["account_id"] for row in rows if row["bot"] == "1"}
    assignment = identify_stubborn(
        opinions, bots, cfg.stubborn_low_pct, cfg.stubborn_high_pct
    )
    requested = [name.strip() for name in cfg.ghic_groups.split(",") if name.strip()]
    groups = ghic_groups_from_rows(rows, requested)

    settings = SolveSettings(
        tol=cfg.solver_tol, max_iter=cfg.solver_max_iter, dense_cutoff=cfg.dense_fallback
    )
    series = daily_ghic_series(
        follower, active_by_day, rates, assignment, opinions, groups, settings
    )
    per_bot = ghic_per_bot(series, groups)

    series_path = out_dir / "ghic_series.csv"
    series_rows = []
    for entry in series.entries:
        for name in sorted(groups):
            if name not in entry.results:
                continue
            result = entry.results[name]
            active_members = entry.group_active[name]
            per_bot_value = _fmt(result.value / active_members) if active_members else ""
            series_rows.append(
                (
                    entry.day.isoformat(), name, _fmt(result.value),
                    entry.active_nodes, active_members, per_bot_value,
                )
            )
    _atomic_write_rows(
        series_path,
        ["day", "group", "ghic", "active_nodes", "group_active_count", "ghic_per_bot"],
        series_rows,
    )

    box_path = out_dir / "ghic_per_bot.csv"
    box_rows = []
    for name in sorted(groups):
        stats = per_bot.get(name)
        if stats is None:
            box_rows.append((name, "", "", "", "", "", "", 0))
        else:
            box_rows.append(
                (
                    name, _fmt(stats.minimum), _fmt(stats.q1), _fmt(stats.median),
                    _fmt(stats.q3), _fmt(stats.maximum), _fmt(stats.mean), stats.n,
                )
            )
    _atomic_write_rows(
        box_path, ["group", "min", "q1", "median", "q3", "max", "mean", "n"], box_rows
    )

    payload = {
        "days_computed": len(series.entries),
        "days_skipped": len(series.skipped_days),
        "groups": sorted(groups),
    }
    _update_manifest(out_dir, "ghic", payload, [series_path, box_path])
    return payload
