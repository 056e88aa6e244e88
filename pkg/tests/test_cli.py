import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from botimpact.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _write_spec(path: Path, **overrides) -> Path:
    fields = {
        "seed": 21,
        "topology": "two_block_polarized",
        "days": 3,
        "humans_per_block": 12,
        "bots_per_block": 3,
        "qanon_bot_frac": 0.5,
        "human_rate": 1.0,
        "bot_rate": 8.0,
    }
    fields.update(overrides)
    path.write_text("".join(f"{k} = {v}\n" for k, v in fields.items()))
    return path


def _write_config(path: Path, corpus: Path, out: Path) -> Path:
    path.write_text(
        f"tweets = {corpus / 'tweets.jsonl'}\n"
        f"profiles = {corpus / 'profiles.jsonl'}\n"
        f"ratings = {corpus / 'ratings.csv'}\n"
        f"out_dir = {out}\n"
    )
    return path


def _run(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    return result


@pytest.fixture
def corpus(tmp_path, runner):
    spec = _write_spec(tmp_path / "spec.txt")
    out = tmp_path / "corpus"
    result = _run(runner, ["--out", str(out), "synth", "--spec", str(spec)])
    assert result.exit_code == 0, result.output
    return out


def test_synth_writes_expected_files(corpus):
    for name in ("tweets.jsonl", "profiles.jsonl", "ratings.csv",
                 "labels_truth.csv", "synth_summary.json"):
        assert (corpus / name).exists()


def test_full_pipeline_and_manifest_counts(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = _write_config(tmp_path / "cfg.txt", corpus, out)
    for cmd in ("build", "detect-bots", "classify", "ghic", "report"):
        result = _run(runner, ["--config", str(cfg), cmd])
        assert result.exit_code == 0, f"{cmd}: {result.output}"

    manifest = json.loads((out / "manifest.json").read_text())
    summary = json.loads((corpus / "synth_summary.json").read_text())
    assert manifest["build"]["accounts"] == summary["accounts"]
    assert manifest["build"]["days"] == summary["days"]
    assert manifest["build"]["tweets_parsed"] == summary["tweets"]
    assert manifest["build"]["retweets_total"] == summary["retweets"]
    report_text = (out / "report.txt").read_text()
    for section in ("Corpus", "Account types", "Network structure", "Impact"):
        assert section in report_text


def test_rerun_produces_identical_checksums(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = _write_config(tmp_path / "cfg.txt", corpus, out)
    checksums = []
    for _ in range(2):
        for cmd in ("build", "detect-bots", "classify", "ghic"):
            result = _run(runner, ["--config", str(cfg), cmd])
            assert result.exit_code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        checksums.append(
            {stage: payload["checksums"] for stage, payload in manifest.items()}
        )
    assert checksums[0] == checksums[1]


def test_missing_profiles_file_exits_nonzero_with_path(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        f"tweets = {corpus / 'tweets.jsonl'}\n"
        f"profiles = {tmp_path / 'missing_profiles.jsonl'}\n"
        f"out_dir = {out}\n"
    )
    result = runner.invoke(main, ["--config", str(cfg), "build"])
    assert result.exit_code == 3
    assert "missing_profiles.jsonl" in result.output


def test_bad_config_value_exits_2(tmp_path, runner):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("bot_threshold = 0.3\n")
    result = runner.invoke(main, ["--config", str(cfg), "build"])
    assert result.exit_code == 2
    assert "bot_threshold" in result.output


def test_unknown_config_key_exits_2(tmp_path, runner):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("mystery_knob = 5\n")
    result = runner.invoke(main, ["--config", str(cfg), "build"])
    assert result.exit_code == 2


def test_stage_order_enforced(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = _write_config(tmp_path / "cfg.txt", corpus, out)
    result = runner.invoke(main, ["--config", str(cfg), "detect-bots"])
    assert result.exit_code == 3  # build outputs missing


def test_invalid_synth_spec_exits_2(tmp_path, runner):
    spec = tmp_path / "spec.txt"
    spec.write_text("topology = mars_colony\n")
    result = runner.invoke(main, ["synth", "--spec", str(spec)])
    assert result.exit_code == 2
    assert "topology" in result.output


def test_seed_flag_overrides_spec(tmp_path, runner):
    spec = _write_spec(tmp_path / "spec.txt", days=1)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    r1 = _run(runner, ["--out", str(out_a), "--seed", "99", "synth", "--spec", str(spec)])
    r2 = _run(runner, ["--out", str(out_b), "--seed", "99", "synth", "--spec", str(spec)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (out_a / "tweets.jsonl").read_bytes() == (out_b / "tweets.jsonl").read_bytes()
    summary = json.loads((out_a / "synth_summary.json").read_text())
    assert summary["seed"] == 99


def test_report_without_ghic_notes_missing_section(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = _write_config(tmp_path / "cfg.txt", corpus, out)
    for cmd in ("build", "detect-bots", "classify"):
        assert _run(runner, ["--config", str(cfg), cmd]).exit_code == 0
    result = _run(runner, ["--config", str(cfg), "report"])
    assert result.exit_code == 0
    assert "Impact" in result.output
    assert "not available" in result.output


def test_workers_flag_matches_serial_output(tmp_path, runner, corpus):
    out1, out2 = tmp_path / "w1", tmp_path / "w4"
    cfg1 = _write_config(tmp_path / "c1.txt", corpus, out1)
    cfg2 = _write_config(tmp_path / "c2.txt", corpus, out2)
    for cfg, workers in ((cfg1, "1"), (cfg2, "4")):
        for cmd in ("build", "detect-bots"):
            result = _run(runner, ["--config", str(cfg), "--workers", workers, cmd])
            assert result.exit_code == 0
    posts1 = sorted(p.name for p in out1.glob("posterior_*.csv"))
    posts2 = sorted(p.name for p in out2.glob("posterior_*.csv"))
    assert posts1 == posts2
    for name in posts1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_planted_qanon_bot_prevalence_reported(tmp_path, runner):
    """With a detection-capable potential table, the reported bot prevalence
    among Qanon accounts tracks the planted fraction from the truth sidecar."""
    import csv

    corpus = tmp_path / "corpus"
    spec = _write_spec(
        tmp_path / "spec.txt",
        seed=5, days=3, humans_per_block=200, bots_per_block=20,
        qanon_bot_frac=0.2, qanon_human_frac=0.18,
        human_rate=1.0, bot_rate=50.0, retweet_frac=0.4, p_intra=0.05,
    )
    assert _run(runner, ["--out", str(corpus), "synth", "--spec", str(spec)]).exit_code == 0
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        f"tweets = {corpus / 'tweets.jsonl'}\n"
        f"profiles = {corpus / 'profiles.jsonl'}\n"
        f"ratings = {corpus / 'ratings.csv'}\n"
        f"out_dir = {out}\n"
        "bp_psi_hh = 1.5\nbp_psi_hb = 2.0\nbp_psi_bh = 1.0\nbp_psi_bb = 0.5\n"
    )
    for cmd in ("build", "detect-bots", "classify", "report"):
        assert _run(runner, ["--config", str(cfg), cmd]).exit_code == 0

    with open(corpus / "labels_truth.csv", newline="") as fh:
        truth = {row["account_id"]: row for row in csv.DictReader(fh)}
    planted_bots = {a for a, row in truth.items() if row["is_bot"] == "1"}
    qanon_truth = {a for a, row in truth.items() if row["block"].endswith("qanon")}
    planted_fraction = len(qanon_truth & planted_bots) / len(qanon_truth)

    with open(out / "accounts.csv", newline="") as fh:
        rows = {row["account_id"]: row for row in csv.DictReader(fh)}
    detected = {a for a, row in rows.items() if row["bot"] == "1"}
    qanon = {a for a, row in rows.items() if row["qanon"] == "1"}
    reported_fraction = len(qanon & detected) / len(qanon)
    assert reported_fraction == pytest.approx(planted_fraction, abs=0.05)

    report_text = (out / "report.txt").read_text()
    assert f"qanon        {reported_fraction:.4f}" in report_text


def test_classify_without_ratings_warns_and_omits_media(tmp_path, runner, corpus):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        f"tweets = {corpus / 'tweets.jsonl'}\n"
        f"profiles = {corpus / 'profiles.jsonl'}\n"
        f"ratings = {tmp_path / 'no_ratings.csv'}\n"
        f"out_dir = {out}\n"
    )
    for cmd in ("build", "detect-bots", "classify"):
        assert _run(runner, ["--config", str(cfg), cmd]).exit_code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert "no_ratings.csv" in manifest["classify"]["warning"]
    import csv

    with open(out / "accounts.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(row["media_quality"] == "" for row in rows)
