"""Figure rendering for the CLI report paths (matplotlib, file output only)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import FrequencyVector


def plot_nrmse_curves(
    rows: list[tuple[str, int, float, float]], path: str, title: str = ""
) -> None:
    """NRMSE vs sample size per sampler, with the 1/sqrt(k) benchmark line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by_name: dict[str, list[tuple[int, float]]] = {}
    benchmark: dict[int, float] = {}
    for name, k, nrmse, bench in rows:
        by_name.setdefault(name, []).append((k, nrmse))
        benchmark[k] = bench
    for name, points in sorted(by_name.items()):
        points.sort()
        ax.plot([k for k, _ in points], [v for _, v in points], marker="o", label=name)
    ks = sorted(benchmark)
    ax.plot(ks, [benchmark[k] for k in ks], "k--", label="benchmark 1/sqrt(k)")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("sample size k")
    ax.set_ylabel("NRMSE")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_rank_distribution(
    pairs: list[tuple[float, float]],
    path: str,
    truth: FrequencyVector | None = None,
    title: str = "",
) -> None:
    """Estimated rank vs frequency scatter, optionally over the exact curve."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if truth is not None:
        weights = truth.ranked_weights
        ax.plot(range(1, len(weights) + 1), weights, color="0.6", label="exact")
    if pairs:
        ax.scatter(
            [max(rank, 1e-3) for _, rank in pairs],
            [freq for freq, _ in pairs],
            s=12,
            color="tab:red",
            label="estimated",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("rank")
    ax.set_ylabel("frequency")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_overhead_report(report_dict: dict, path: str, title: str = "") -> None:
    """Bar chart of max/expected overheads per scheme and target moment."""
    schemes = report_dict["schemes"]
    targets = [f"{p:g}" for p in report_dict["targets"]]
    fig, ax = plt.subplots(figsize=(7, 4))
    names = sorted(schemes)
    width = 0.8 / max(len(targets), 1)
    for t_idx, target in enumerate(targets):
        xs, maxes, expecteds = [], [], []
        for s_idx, name in enumerate(names):
            value = schemes[name]["max_overhead"].get(target)
            expected = schemes[name]["expected_overhead"].get(target)
            if value is None:
                continue
            xs.append(s_idx + t_idx * width)
            maxes.append(value if not isinstance(value, str) else math.nan)
            expecteds.append(expected if not isinstance(expected, str) else math.nan)
        ax.bar(xs, maxes, width=width, label=f"moment {target} (max)")
        ax.scatter(xs, expecteds, color="black", zorder=3, s=14)
    ax.set_xticks(
        [i + width * (len(targets) - 1) / 2 for i in range(len(names))], names
    )
    ax.set_yscale("log")
    ax.set_ylabel("overhead")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
