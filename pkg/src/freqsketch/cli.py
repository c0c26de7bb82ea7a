"""Batch command-line surface for the sampling/estimation pipeline.

Every run is fully determined by its options (optionally seeded from a JSON
config file) and input files; all randomness flows from explicit 64-bit
seeds.  Outputs are TSV or JSON; report commands can additionally render a
matplotlib figure next to the delimited output via --plot.
"""

from __future__ import annotations

import functools
import json
import math
import sys

import click

from . import core, estimation, overhead as overhead_mod
from .advice import AdviceMap, AdviceParams, AdviceSketch, advice_noise
from .core import FreqFn, FrequencyVector, ZipfModel
from .samplers import BottomKSketch, SamplerConfig


def _fail(message: str) -> None:
    sys.stderr.write(json.dumps({"error": message}) + "\n")
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError, KeyError, TypeError) as exc:
            _fail(str(exc))

    return wrapper


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _opt(value, cfg: dict, key: str, default):
    """Resolution order: explicit flag > config file entry > default."""
    if value is not None:
        return value
    if key in cfg:
        return cfg[key]
    return default


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="JSON config file supplying defaults for the command's options.",
)


@click.group()
def main():
    """Weighted-sampling sketches, estimators, and overhead reports."""


@main.command("generate-zipf")
@config_option
@click.option("--alpha", type=float, default=None)
@click.option("--n", "n_keys", type=int, default=None)
@click.option("--w1", type=float, default=None)
@click.option("--c", "slack", type=float, default=None, help="sub-Zipf slack (>= 1)")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def cmd_generate_zipf(config_path, alpha, n_keys, w1, slack, seed, out):
    """Write an aggregated TSV with (sub-)Zipf frequencies."""
    cfg = _load_config(config_path)
    model = ZipfModel(
        alpha=_opt(alpha, cfg, "alpha", 1.0),
        n=_opt(n_keys, cfg, "n", 1000),
        w1=_opt(w1, cfg, "w1", 1.0),
        c=_opt(slack, cfg, "c", 1.0),
    )
    w = core.gen_zipf(model, rng_seed=_opt(seed, cfg, "seed", 0))
    core.write_frequency_tsv(w, out)


@main.command("aggregate")
@click.argument("inputs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def cmd_aggregate(inputs, out):
    """Aggregate element TSVs (key<TAB>value) into key<TAB>frequency."""
    total = FrequencyVector({})
    for path in inputs:
        total = total.add(core.aggregate(core.read_elements_tsv(path)))
    core.write_frequency_tsv(total, out)


def _advice_with_noise(cfg, advice_path, noise):
    advice = AdviceMap.from_tsv(advice_path)
    if noise:
        model, _, arg = noise.partition(":")
        advice = advice_noise(
            advice, model, float(arg or 0.0), rng_seed=int(cfg.get("noise-seed", 0))
        )
    return advice


@main.command("sketch")
@config_option
@click.option("--in", "input_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--scheme", type=click.Choice(["ppswor", "priority"]), default=None)
@click.option("--q", type=float, default=None, help="weight exponent (bottom-k mode)")
@click.option("--k", type=int, default=None, help="sample size (bottom-k mode)")
@click.option("--hash-seed", type=int, default=None)
@click.option("--advice", "advice_path", type=click.Path(exists=True), default=None,
              help="advice TSV; switches to the sample-by-advice sketch")
@click.option("--kh", type=int, default=None)
@click.option("--kp", type=int, default=None)
@click.option("--ku", type=int, default=None)
@click.option("--fn", "fn_spec", type=str, default=None,
              help="target FreqFn for the advice sketch, e.g. moment:3")
@click.option("--noise", type=str, default=None,
              help="advice noise, e.g. multiplicative:4 or dropout:0.5")
@handle_errors
def cmd_sketch(config_path, input_path, out, scheme, q, k, hash_seed,
               advice_path, kh, kp, ku, fn_spec, noise):
    """Sketch an aggregated TSV into a serialized sampling sketch."""
    cfg = _load_config(config_path)
    w = core.read_frequency_tsv(input_path)
    scheme = _opt(scheme, cfg, "scheme", "ppswor")
    seed = _opt(hash_seed, cfg, "hash-seed", 0)
    advice_path = _opt(advice_path, cfg, "advice", None)
    if advice_path:
        params = AdviceParams(
            k_h=_opt(kh, cfg, "kh", 0),
            k_p=_opt(kp, cfg, "kp", 0),
            k_u=_opt(ku, cfg, "ku", 0),
            fn=FreqFn.parse(_opt(fn_spec, cfg, "fn", "identity")),
            scheme=scheme,
            seed=seed,
        )
        advice = _advice_with_noise(cfg, advice_path, _opt(noise, cfg, "noise", None))
        sketch = AdviceSketch(params, advice).process_batch(w)
    else:
        config = SamplerConfig(
            k=_opt(k, cfg, "k", 64), q=_opt(q, cfg, "q", 1.0), scheme=scheme, seed=seed
        )
        sketch = BottomKSketch(config).process(w)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(sketch.to_json() + "\n")


def _load_sketch(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    kind = json.loads(text).get("format")
    if kind == "bottomk-sketch":
        return BottomKSketch.from_json(text)
    if kind == "advice-sketch":
        return AdviceSketch.from_json(text)
    raise ValueError(f"{path}: unrecognized sketch format {kind!r}")


@main.command("merge")
@click.argument("inputs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def cmd_merge(inputs, out):
    """Merge sketches of key-disjoint shards into the sketch of the union."""
    if len(inputs) < 2:
        raise ValueError("merge requires at least two sketches")
    merged = _load_sketch(inputs[0])
    for path in inputs[1:]:
        merged = merged.merge(_load_sketch(path))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(merged.to_json() + "\n")


@main.command("estimate")
@click.option("--sketch", "sketch_path", type=click.Path(exists=True), required=True)
@click.option("--fn", "fn_spec", type=str, default=None,
              help="FreqFn for bottom-k sketches (advice sketches carry their own)")
@click.option("--domain-file", type=click.Path(exists=True), default=None,
              help="restrict to keys listed one per line")
@click.option("--coeff-file", type=click.Path(exists=True), default=None,
              help="TSV key<TAB>coefficient for weighted statistics")
@click.option("--out", type=click.Path(), required=True)
@handle_errors
def cmd_estimate(sketch_path, fn_spec, domain_file, coeff_file, out):
    """Estimate f-statistics from a serialized sketch; writes TSV rows."""
    sketch = _load_sketch(sketch_path)
    domain = None
    if domain_file:
        with open(domain_file, "r", encoding="utf-8") as fh:
            domain = {line.strip() for line in fh if line.strip()}
    coeffs = None
    if coeff_file:
        coeffs = dict(
            (key, value)
            for key, value, _ in core._parse_tsv_lines(
                open(coeff_file, encoding="utf-8"), coeff_file
            )
        )
    if isinstance(sketch, AdviceSketch):
        if domain is None and coeffs is None:
            per_key, total = sketch.estimate()
        else:
            per_key, _ = sketch.estimate()
            per_key = {
                k: v * (1.0 if coeffs is None else coeffs.get(k, 1.0))
                for k, v in per_key.items()
                if domain is None or k in domain
            }
            total = sum(per_key.values())
    else:
        if not fn_spec:
            raise ValueError("--fn is required for bottom-k sketches")
        fn = FreqFn.parse(fn_spec)
        sample = sketch.finalize()
        query = estimation.DomainQuery(fn, domain=domain, coefficients=coeffs)
        total = estimation.estimate_query(sample, query)
        per_key = {
            rec.key: float(fn(rec.weight)) / rec.probability
            for rec in sample.records
            if query.in_domain(rec.key)
        }
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"#total\t{total!r}\n")
        for key in sorted(per_key):
            fh.write(f"{key}\t{per_key[key]!r}\n")


@main.command("rank-dist")
@click.option("--sketch", "sketch_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--plot", "plot_path", type=click.Path(), default=None)
@click.option("--data", "data_path", type=click.Path(exists=True), default=None,
              help="aggregated TSV for the exact curve in the figure")
@handle_errors
def cmd_rank_dist(sketch_path, out, plot_path, data_path):
    """Estimate the rank-vs-frequency distribution from a bottom-k sketch."""
    sketch = _load_sketch(sketch_path)
    if isinstance(sketch, AdviceSketch):
        raise ValueError("rank-dist requires a bottom-k sketch")
    pairs = estimation.estimate_rank_distribution(sketch.finalize())
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("#frequency\testimated_rank\n")
        for freq, rank in pairs:
            fh.write(f"{freq!r}\t{rank!r}\n")
    if plot_path:
        from .plotting import plot_rank_distribution

        truth = core.read_frequency_tsv(data_path) if data_path else None
        plot_rank_distribution(pairs, plot_path, truth=truth)


def _parse_sampler_specs(text: str, cfg, advice_args) -> dict[str, object]:
    """Parse e.g. "ppswor,bottomk:2,wr:1,wr:2,advice" into evaluator protos."""
    out: dict[str, object] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, arg = item.partition(":")
        if name == "ppswor":
            out[item] = ("bottomk", "ppswor", float(arg or 1.0))
        elif name in ("bottomk", "priority"):
            scheme = "ppswor" if name == "bottomk" else "priority"
            out[item] = ("bottomk", scheme, float(arg or 1.0))
        elif name == "wr":
            out[item] = ("wr", float(arg or 1.0))
        elif name == "advice":
            advice_path, noise, balance = advice_args
            if not advice_path:
                raise ValueError("sampler 'advice' requires --advice")
            advice = _advice_with_noise(cfg, advice_path, noise)
            out[item] = ("advice", advice, arg or balance)
        else:
            raise ValueError(f"unknown sampler spec: {item!r}")
    return out


def _advice_sizes(balance: str, k: int) -> tuple[int, int, int]:
    if balance == "equal":
        half = max((k + 1) // 2, 1)
        return 0, half, half
    if balance == "ku32":
        return 0, max(k - 32, 1), min(32, k)
    raise ValueError(f"unknown advice balance {balance!r} (use equal or ku32)")


@main.command("evaluate")
@config_option
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--fn", "fn_spec", type=str, default=None)
@click.option("--samplers", type=str, default=None,
              help="comma list: ppswor, bottomk:Q, priority:Q, wr:Q, advice")
@click.option("--k-grid", type=str, default=None, help="comma list of sample sizes")
@click.option("--trials", type=int, default=None)
@click.option("--hash-seed", type=int, default=None)
@click.option("--advice", "advice_path", type=click.Path(exists=True), default=None)
@click.option("--noise", type=str, default=None)
@click.option("--advice-balance", type=str, default=None,
              help="equal (k_p = k_u) or ku32 (k_u = 32)")
@click.option("--out", type=click.Path(), required=True)
@click.option("--plot", "plot_path", type=click.Path(), default=None)
@handle_errors
def cmd_evaluate(config_path, data_path, fn_spec, samplers, k_grid, trials,
                 hash_seed, advice_path, noise, advice_balance, out, plot_path):
    """NRMSE vs sample size per sampler; TSV rows (sampler, k, nrmse, 1/sqrt(k))."""
    cfg = _load_config(config_path)
    w = core.read_frequency_tsv(data_path)
    fn = FreqFn.parse(_opt(fn_spec, cfg, "fn", "moment:3"))
    trials = _opt(trials, cfg, "trials", estimation.DEFAULT_TRIALS)
    seed = _opt(hash_seed, cfg, "hash-seed", 0)
    balance = _opt(advice_balance, cfg, "advice-balance", "equal")
    advice_path = _opt(advice_path, cfg, "advice", None)
    protos = _parse_sampler_specs(
        _opt(samplers, cfg, "samplers", "ppswor,bottomk:2,wr:1,wr:2"),
        cfg,
        (advice_path, _opt(noise, cfg, "noise", None), balance),
    )
    k_values = [
        int(x) for x in str(_opt(k_grid, cfg, "k-grid", "16,64,256")).split(",") if x
    ]

    def make_spec(proto, k):
        kind = proto[0]
        if kind == "wr":
            return estimation.WithReplacementSpec(f_or_q=proto[1], k=k)
        if kind == "bottomk":
            return estimation.BottomKSpec(k=k, q=proto[2], scheme=proto[1])
        advice, bal = proto[1], proto[2]
        k_h, k_p, k_u = _advice_sizes(bal, k)
        params = AdviceParams(k_h=k_h, k_p=k_p, k_u=k_u, fn=fn, seed=seed)
        return estimation.AdviceSpec(params=params, advice=advice)

    rows = estimation.nrmse_rows(
        w, fn, protos, k_values, make_spec, trials=trials, base_seed=seed
    )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("#sampler\tk\tnrmse\tbenchmark\n")
        for name, k, nrmse, bench in rows:
            fh.write(f"{name}\t{k}\t{nrmse!r}\t{bench!r}\n")
    if plot_path:
        from .plotting import plot_nrmse_curves

        plot_nrmse_curves(rows, plot_path, title=f"estimating {fn.spec()}")


@main.command("overhead")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--targets", type=str, default="3,10", help="comma list of moments")
@click.option("--out", type=click.Path(), required=True, help="JSON report path")
@click.option("--tsv", "tsv_path", type=click.Path(), default=None,
              help="also emit a flat TSV of the per-scheme overheads")
@click.option("--plot", "plot_path", type=click.Path(), default=None)
@handle_errors
def cmd_overhead(data_path, targets, out, tsv_path, plot_path):
    """Max/expected/universal overhead report for l1, l2, concave schemes."""
    w = core.read_frequency_tsv(data_path)
    target_list = [float(x) for x in targets.split(",") if x]
    report = overhead_mod.overhead_report(w, target_list)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    if tsv_path:
        with open(tsv_path, "w", encoding="utf-8") as fh:
            fh.write("#scheme\ttarget\tmax_overhead\texpected_overhead\n")
            for name, entry in sorted(report.schemes.items()):
                for label in entry.max_overhead:
                    fh.write(
                        f"{name}\t{label}\t{entry.max_overhead[label]!r}\t"
                        f"{entry.expected_overhead[label]!r}\n"
                    )
            for name, entry in sorted(report.schemes.items()):
                fh.write(f"{name}\tuniversal\t{entry.universal_emulation!r}\t\n")
    if plot_path:
        from .plotting import plot_overhead_report

        plot_overhead_report(report.to_dict(), plot_path)


if __name__ == "__main__":
    main()
