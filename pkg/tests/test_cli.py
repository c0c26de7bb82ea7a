"""End-to-end tests of the command-line surface."""

import json
import math

import pytest
from click.testing import CliRunner

from freqsketch.cli import main
from freqsketch.core import read_frequency_tsv


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_generate_zipf_and_fit(runner, tmp_path):
    out = tmp_path / "zipf.tsv"
    run_ok(runner, ["generate-zipf", "--alpha", "1.5", "--n", "100", "--out", str(out)])
    w = read_frequency_tsv(str(out))
    assert w.n == 100
    assert w.ranked_weights[0] == 1.0
    assert w.ranked_weights[1] == pytest.approx(2.0 ** (-1.5))


def test_aggregate(runner, tmp_path):
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    a.write_text("x\t1.0\ny\t2.0\nx\t0.5\n")
    b.write_text("y\t1.0\nz\t3.0\n")
    out = tmp_path / "agg.tsv"
    run_ok(runner, ["aggregate", str(a), str(b), "--out", str(out)])
    w = read_frequency_tsv(str(out))
    assert w.entries == {"x": 1.5, "y": 3.0, "z": 3.0}


def test_sketch_merge_estimate_pipeline(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("".join(f"p{i:03d}\t{float(i)}\n" for i in range(1, 41)))
    shard_a = tmp_path / "a.tsv"
    shard_b = tmp_path / "b.tsv"
    shard_a.write_text("".join(f"p{i:03d}\t{float(i)}\n" for i in range(1, 21)))
    shard_b.write_text("".join(f"p{i:03d}\t{float(i)}\n" for i in range(21, 41)))

    whole = tmp_path / "whole.json"
    sk_a = tmp_path / "sa.json"
    sk_b = tmp_path / "sb.json"
    merged = tmp_path / "merged.json"
    common = ["--k", "8", "--q", "1", "--hash-seed", "5"]
    run_ok(runner, ["sketch", "--in", str(data), "--out", str(whole)] + common)
    run_ok(runner, ["sketch", "--in", str(shard_a), "--out", str(sk_a)] + common)
    run_ok(runner, ["sketch", "--in", str(shard_b), "--out", str(sk_b)] + common)
    run_ok(runner, ["merge", str(sk_a), str(sk_b), "--out", str(merged)])
    assert merged.read_bytes() == whole.read_bytes()

    est = tmp_path / "est.tsv"
    run_ok(runner, ["estimate", "--sketch", str(whole), "--fn", "moment:2",
                    "--out", str(est)])
    lines = est.read_text().splitlines()
    assert lines[0].startswith("#total\t")
    total = float(lines[0].split("\t")[1])
    assert total > 0
    assert len(lines) == 9  # total line + 8 sampled keys


def test_estimate_with_domain(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("a\t4.0\nb\t2.0\nc\t1.0\n")
    sk = tmp_path / "sk.json"
    run_ok(runner, ["sketch", "--in", str(data), "--out", str(sk), "--k", "10"])
    domain = tmp_path / "domain.txt"
    domain.write_text("a\nc\n")
    est = tmp_path / "est.tsv"
    run_ok(runner, ["estimate", "--sketch", str(sk), "--fn", "moment:2",
                    "--domain-file", str(domain), "--out", str(est)])
    lines = est.read_text().splitlines()
    # full sample, so estimates are exact: 16 + 1 over the domain
    assert float(lines[0].split("\t")[1]) == pytest.approx(17.0)


def test_advice_sketch_cli(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("".join(f"q{i:02d}\t{float(i)}\n" for i in range(1, 16)))
    advice = tmp_path / "advice.tsv"
    advice.write_text("".join(f"q{i:02d}\t{float(i)}\n" for i in range(1, 16)))
    sk = tmp_path / "adv.json"
    run_ok(runner, ["sketch", "--in", str(data), "--out", str(sk),
                    "--advice", str(advice), "--kh", "3", "--kp", "4", "--ku", "3",
                    "--fn", "moment:2", "--hash-seed", "2"])
    blob = json.loads(sk.read_text())
    assert blob["format"] == "advice-sketch"
    est = tmp_path / "est.tsv"
    run_ok(runner, ["estimate", "--sketch", str(sk), "--out", str(est)])
    assert est.read_text().startswith("#total\t")


def test_rank_dist_with_plot(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("".join(f"r{i:03d}\t{1.0 / i}\n" for i in range(1, 101)))
    sk = tmp_path / "sk.json"
    run_ok(runner, ["sketch", "--in", str(data), "--out", str(sk), "--k", "20"])
    out = tmp_path / "rank.tsv"
    fig = tmp_path / "rank.png"
    run_ok(runner, ["rank-dist", "--sketch", str(sk), "--out", str(out),
                    "--plot", str(fig), "--data", str(data)])
    lines = out.read_text().splitlines()
    assert lines[0] == "#frequency\testimated_rank"
    assert len(lines) == 21
    assert fig.stat().st_size > 0


def test_evaluate_with_plot(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("".join(f"e{i:02d}\t{float(i)}\n" for i in range(1, 21)))
    out = tmp_path / "eval.tsv"
    fig = tmp_path / "eval.png"
    run_ok(runner, ["evaluate", "--data", str(data), "--fn", "moment:2",
                    "--samplers", "ppswor,wr:1", "--k-grid", "4,8",
                    "--trials", "10", "--out", str(out), "--plot", str(fig)])
    lines = out.read_text().splitlines()
    assert lines[0] == "#sampler\tk\tnrmse\tbenchmark"
    assert len(lines) == 5
    names = {line.split("\t")[0] for line in lines[1:]}
    assert names == {"ppswor", "wr:1"}
    assert fig.stat().st_size > 0


def test_evaluate_advice_sampler(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("".join(f"e{i:02d}\t{float(i)}\n" for i in range(1, 21)))
    advice = tmp_path / "advice.tsv"
    advice.write_text("".join(f"e{i:02d}\t{float(i)}\n" for i in range(1, 21)))
    out = tmp_path / "eval.tsv"
    run_ok(runner, ["evaluate", "--data", str(data), "--fn", "moment:2",
                    "--samplers", "advice", "--k-grid", "8", "--trials", "5",
                    "--advice", str(advice), "--out", str(out)])
    lines = out.read_text().splitlines()
    assert len(lines) == 2


def test_overhead_report_cli(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("a\t4.0\nb\t2.0\nc\t1.0\n")
    out = tmp_path / "report.json"
    tsv = tmp_path / "report.tsv"
    fig = tmp_path / "report.png"
    run_ok(runner, ["overhead", "--data", str(data), "--targets", "3,10",
                    "--out", str(out), "--tsv", str(tsv), "--plot", str(fig)])
    report = json.loads(out.read_text())
    assert report["schemes"]["l2"]["max_overhead"]["3"] == pytest.approx(84.0 / 73.0)
    assert tsv.read_text().startswith("#scheme\ttarget")
    assert fig.stat().st_size > 0


def test_config_file_defaults(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "n": 10}))
    out = tmp_path / "zipf.tsv"
    run_ok(runner, ["generate-zipf", "--config", str(cfg), "--out", str(out)])
    w = read_frequency_tsv(str(out))
    assert w.n == 10
    assert w.ranked_weights[1] == pytest.approx(0.25)
    # explicit flags win over the config file
    out2 = tmp_path / "zipf2.tsv"
    run_ok(runner, ["generate-zipf", "--config", str(cfg), "--n", "5",
                    "--out", str(out2)])
    assert read_frequency_tsv(str(out2)).n == 5


def test_cli_error_reporting(runner, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\t1.0\nbroken-line\n")
    result = runner.invoke(main, ["aggregate", str(bad), "--out",
                                  str(tmp_path / "x.tsv")])
    assert result.exit_code == 1
    err = json.loads(result.stderr.strip())
    assert "error" in err and "bad.tsv:2" in err["error"]


def test_merge_requires_two_inputs(runner, tmp_path):
    data = tmp_path / "data.tsv"
    data.write_text("a\t1.0\n")
    sk = tmp_path / "sk.json"
    run_ok(runner, ["sketch", "--in", str(data), "--out", str(sk), "--k", "2"])
    result = runner.invoke(main, ["merge", str(sk), "--out", str(tmp_path / "m.json")])
    assert result.exit_code == 1
