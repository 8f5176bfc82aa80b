"""Render iet CSV diagnostic logs into publication-style figures.

A figure spec is a small JSON object:

    {
      "input": "roth.csv",            # CSV with a header row
      "kind": "series",               # series | loglog-fit | residual
      "x": "n",                       # abscissa column
      "y": ["ratio_a"],               # one or more ordinate columns
      "out": "ratio_a.svg",           # .svg or .png
      "title": "...", "xlabel": "...", "ylabel": "..."   # optional
    }

Kinds:
  series      lines against x, the tail value of the first series annotated;
  loglog-fit  log-log scatter with a least-squares slope fitted on the last
              half of the samples and annotated (the asymptotic regime);
  residual    semi-log decay curves (iteration residuals).

Rendering is pure file-to-file and byte-stable: fixed style, fixed SVG
hash salt, no timestamps in the output metadata.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("series", "loglog-fit", "residual")

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "font.size": 11,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "ietplot",
    "lines.linewidth": 1.6,
}


class SpecError(ValueError):
    """Bad figure spec or CSV/spec mismatch."""


@dataclass
class FigureSpec:
    input: str
    kind: str
    x: str
    y: list[str]
    out: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    @classmethod
    def from_dict(cls, obj: dict) -> "FigureSpec":
        try:
            spec = cls(
                input=obj["input"],
                kind=obj["kind"],
                x=obj["x"],
                y=list(obj["y"]) if isinstance(obj["y"], (list, tuple))
                else [obj["y"]],
                out=obj["out"],
                title=obj.get("title", ""),
                xlabel=obj.get("xlabel", ""),
                ylabel=obj.get("ylabel", ""),
            )
        except KeyError as exc:
            raise SpecError(f"figure spec is missing the {exc} field")
        if spec.kind not in KINDS:
            raise SpecError(
                f"unknown plot kind {spec.kind!r}; expected one of {KINDS}")
        return spec


def read_columns(path: str, wanted: list[str]) -> dict[str, list[float]]:
    """Numeric columns by name; blank cells are skipped row-wise."""
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise SpecError(f"no such CSV: {path}")
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SpecError(
                f"column(s) {', '.join(missing)} not in {path}; "
                f"available: {', '.join(header)}")
        out: dict[str, list[float]] = {c: [] for c in wanted}
        for row in reader:
            cells = [row[c] for c in wanted]
            if any(c is None or c == "" for c in cells):
                continue
            try:
                values = [float(c) for c in cells]
            except ValueError:
                continue
            for c, v in zip(wanted, values):
                out[c].append(v)
    if not out[wanted[0]]:
        raise SpecError(f"{path} has no usable rows for {wanted}")
    return out


def tail_slope(xs: list[float], ys: list[float]) -> float:
    """Least-squares slope of log y against log x on the last half of the
    samples, where the asymptotic regime dominates."""
    pairs = [(math.log(x), math.log(y)) for x, y in zip(xs, ys)
             if x > 0 and y > 0]
    if len(pairs) < 4:
        raise SpecError("need at least 4 positive samples for a slope fit")
    pairs = pairs[len(pairs) // 2:]
    mx = sum(p[0] for p in pairs) / len(pairs)
    my = sum(p[1] for p in pairs) / len(pairs)
    den = sum((p[0] - mx) ** 2 for p in pairs)
    if den == 0:
        raise SpecError("degenerate abscissae in slope fit")
    return sum((p[0] - mx) * (p[1] - my) for p in pairs) / den


def render(spec: FigureSpec) -> Path:
    cols = read_columns(spec.input, [spec.x] + spec.y)
    xs = cols[spec.x]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if spec.kind == "series":
            for name in spec.y:
                ax.plot(xs, cols[name], label=name)
            tail = cols[spec.y[0]][-1]
            ax.annotate(f"tail = {tail:.4g}", xy=(xs[-1], tail),
                        xytext=(-60, 12), textcoords="offset points")
        elif spec.kind == "loglog-fit":
            for name in spec.y:
                ax.loglog(xs, cols[name], "o", ms=3.5, label=name)
            slope = tail_slope(xs, cols[spec.y[0]])
            x0, x1 = xs[len(xs) // 2], xs[-1]
            y0 = cols[spec.y[0]][len(xs) // 2]
            ax.loglog([x0, x1], [y0, y0 * (x1 / x0) ** slope], "--",
                      color="black", label=f"slope {slope:.3f}")
        else:  # residual
            for name in spec.y:
                ax.semilogy(xs, [max(v, 1e-300) for v in cols[name]],
                            label=name)
        ax.set_xlabel(spec.xlabel or spec.x)
        ax.set_ylabel(spec.ylabel or ", ".join(spec.y))
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="best")
        out = Path(spec.out)
        meta = {"Date": None} if out.suffix == ".svg" else {}
        fig.savefig(out, metadata=meta)
        plt.close(fig)
    return out
