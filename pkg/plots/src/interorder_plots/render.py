"""Render experiment CSVs into figures.

Invoked as a script with a figure-spec JSON path. Four figure kinds map to
the experiment outputs: per-order interaction profiles (normal vs
adversarial), attack-utility distributions over orders, disentanglement
curves, and context heatmaps. Rendering is deterministic: fixed style, no
timestamps; each call returns the arrays actually plotted so tests can
round-trip them against the source CSVs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("order-profile", "delta-utility", "disentanglement", "heatmap")

PROFILE_COLUMNS = {
    "sample_set", "order_m", "order_fraction", "i_mean[score]",
    "j_weighted[score]", "d_mean[ratio]", "stderr[score]", "samples[count]",
}
DELTA_COLUMNS = {
    "order_m", "order_fraction", "delta_i[score]", "delta_j[score]",
    "normalized_abs_delta_i[ratio]",
}

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


class SchemaError(ValueError):
    """A CSV is missing a column the figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("spec needs at least one input CSV")
        for path in self.inputs:
            if not Path(path).exists():
                raise SchemaError(f"input CSV not found: {path}")


def load_spec(path: str) -> FigureSpec:
    with open(path) as fh:
        raw = json.load(fh)
    return FigureSpec(
        kind=raw.get("kind", ""),
        inputs=tuple(raw.get("inputs", ())),
        output=raw.get("output", "figure.png"),
        labels=raw.get("labels", {}),
    )


def read_csv(path: str) -> dict[str, np.ndarray]:
    """Columns keyed by header name; numeric where possible."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    raw = [line.split(",") for line in lines[1:]]
    columns: dict[str, np.ndarray] = {}
    for k, name in enumerate(header):
        values = [row[k] for row in raw]
        try:
            columns[name] = np.array([float(v) for v in values])
        except ValueError:
            columns[name] = np.array(values)
    return columns


def require_columns(columns: dict, needed: set, path: str) -> None:
    missing = sorted(needed - set(columns))
    if missing:
        raise SchemaError(f"{path} is missing column(s): {', '.join(missing)}")


def _split_sets(columns):
    names = columns["sample_set"]
    return {name: names == name for name in ("normal", "adversarial")}


def render(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Draw the figure, write spec.output, return the plotted arrays."""
    with plt.rc_context(STYLE):
        if spec.kind == "order-profile":
            arrays = _render_order_profile(spec)
        elif spec.kind == "delta-utility":
            arrays = _render_delta_utility(spec)
        elif spec.kind == "disentanglement":
            arrays = _render_disentanglement(spec)
        else:
            arrays = _render_heatmap(spec)
    return arrays


def _finish(fig, ax, spec, default_x, default_y, title):
    ax.set_xlabel(spec.labels.get("x", default_x))
    ax.set_ylabel(spec.labels.get("y", default_y))
    ax.set_title(spec.labels.get("title", title))
    fig.tight_layout()
    fig.savefig(spec.output, metadata={})
    plt.close(fig)


def _render_order_profile(spec):
    columns = read_csv(spec.inputs[0])
    require_columns(columns, PROFILE_COLUMNS, spec.inputs[0])
    fig, ax = plt.subplots()
    arrays = {}
    for name, sel in _split_sets(columns).items():
        x = columns["order_fraction"][sel]
        y = columns["i_mean[score]"][sel]
        err = columns["stderr[score]"][sel]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=2, label=name)
        arrays[f"{name}_x"] = x
        arrays[f"{name}_y"] = y
    ax.legend()
    _finish(fig, ax, spec, "order m / n", "mean interaction",
            "Per-order interactions: normal vs adversarial")
    return arrays


def _render_delta_utility(spec):
    columns = read_csv(spec.inputs[0])
    require_columns(columns, DELTA_COLUMNS, spec.inputs[0])
    fig, ax = plt.subplots()
    x = columns["order_fraction"]
    y = columns["delta_j[score]"]
    ax.bar(x, y, width=0.05, label="delta J")
    line, = ax.plot(x, columns["normalized_abs_delta_i[ratio]"], "k.-",
                    label="normalized |delta I|")
    ax.legend()
    _finish(fig, ax, spec, "order m / n", "attack utility",
            "Attack utility by interaction order")
    return {"x": x, "delta_j": y,
            "normalized_abs": columns["normalized_abs_delta_i[ratio]"]}


def _render_disentanglement(spec):
    columns = read_csv(spec.inputs[0])
    require_columns(columns, PROFILE_COLUMNS, spec.inputs[0])
    fig, ax = plt.subplots()
    arrays = {}
    for name, sel in _split_sets(columns).items():
        x = columns["order_fraction"][sel]
        y = columns["d_mean[ratio]"][sel]
        ax.plot(x, y, marker="s", label=name)
        arrays[f"{name}_x"] = x
        arrays[f"{name}_y"] = y
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    _finish(fig, ax, spec, "order m / n", "disentanglement D",
            "Disentanglement by interaction order")
    return arrays


def _render_heatmap(spec):
    lines = Path(spec.inputs[0]).read_text().strip().splitlines()
    header = lines[0].split(",")
    if not header or not header[0].startswith("c0"):
        raise SchemaError(f"{spec.inputs[0]} is missing column(s): c0[weight]")
    grid = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    fig, ax = plt.subplots()
    image = ax.imshow(grid, cmap="viridis", interpolation="nearest")
    fig.colorbar(image, ax=ax, label="context weight")
    _finish(fig, ax, spec, "grid column", "grid row", "Interaction context map")
    return {"grid": grid}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="interorder-plots",
        description="Render an experiment figure from a spec JSON",
    )
    parser.add_argument("spec", help="figure-spec JSON path")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        render(spec)
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    print(spec.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
