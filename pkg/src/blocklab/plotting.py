"""Deterministic SVG rendering for experiment CSVs.

The plots are written directly as SVG text with fixed float formatting,
so a given CSV always produces byte-identical output — no plotting
toolkit is involved.  Three kinds are supported: an eigenvalue scatter in
the complex plane with the expected bulk circle, overlap-vs-degree sweep
curves per init mode, and reconstruction success-vs-depth curves per
estimator.
"""

from __future__ import annotations

import csv
import math

from .sweep import SWEEP_COLUMNS

__all__ = ["emit_plot", "render_spectrum", "render_sweep", "render_tree"]

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 60, 20, 28, 46
_COLORS = ["#1f6fb2", "#d1495b", "#3a7d44", "#8c5383", "#c77f2d", "#4f5d75"]

TREE_COLUMNS = ["depth", "estimator", "successes", "trials", "p_hat", "std_err"]
SPECTRUM_COLUMNS = ["re", "im"]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """A few round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return out


class _Canvas:
    """Accumulates SVG elements over a fixed-size data viewport."""

    def __init__(
        self,
        xlim: tuple[float, float],
        ylim: tuple[float, float],
        xlabel: str,
        ylabel: str,
        title: str,
    ):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts: list[str] = []
        self._frame(xlabel, ylabel, title)

    def px(self, x: float) -> float:
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y: float) -> float:
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)

    def _frame(self, xlabel: str, ylabel: str, title: str) -> None:
        p = self.parts
        p.append(
            f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
            f'height="{_H - _MT - _MB}" fill="none" stroke="#333" stroke-width="1"/>'
        )
        for t in _ticks(self.x0, self.x1):
            x = self.px(t)
            p.append(
                f'<line x1="{_fmt(x)}" y1="{_H - _MB}" x2="{_fmt(x)}" '
                f'y2="{_H - _MB + 5}" stroke="#333" stroke-width="1"/>'
            )
            p.append(
                f'<text x="{_fmt(x)}" y="{_H - _MB + 18}" font-size="11" '
                f'text-anchor="middle" fill="#333">{t:g}</text>'
            )
        for t in _ticks(self.y0, self.y1):
            y = self.py(t)
            p.append(
                f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" '
                f'y2="{_fmt(y)}" stroke="#333" stroke-width="1"/>'
            )
            p.append(
                f'<text x="{_ML - 8}" y="{_fmt(y + 4)}" font-size="11" '
                f'text-anchor="end" fill="#333">{t:g}</text>'
            )
        p.append(
            f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 8}" font-size="12" '
            f'text-anchor="middle" fill="#333">{xlabel}</text>'
        )
        p.append(
            f'<text x="14" y="{(_MT + _H - _MB) // 2}" font-size="12" '
            f'text-anchor="middle" fill="#333" transform="rotate(-90 14 '
            f'{(_MT + _H - _MB) // 2})">{ylabel}</text>'
        )
        p.append(
            f'<text x="{_W // 2}" y="18" font-size="13" text-anchor="middle" '
            f'fill="#111">{title}</text>'
        )

    def polyline(self, pts: list[tuple[float, float]], color: str) -> None:
        coords = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )

    def circle_marker(self, x: float, y: float, color: str, r: float = 3.0) -> None:
        self.parts.append(
            f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" '
            f'r="{_fmt(r)}" fill="{color}"/>'
        )

    def vbar(self, x: float, y0: float, y1: float, color: str) -> None:
        self.parts.append(
            f'<line x1="{_fmt(self.px(x))}" y1="{_fmt(self.py(y0))}" '
            f'x2="{_fmt(self.px(x))}" y2="{_fmt(self.py(y1))}" '
            f'stroke="{color}" stroke-width="1"/>'
        )

    def data_circle(self, cx: float, cy: float, radius: float, color: str) -> None:
        rx = abs(self.px(cx + radius) - self.px(cx))
        ry = abs(self.py(cy + radius) - self.py(cy))
        self.parts.append(
            f'<ellipse cx="{_fmt(self.px(cx))}" cy="{_fmt(self.py(cy))}" '
            f'rx="{_fmt(rx)}" ry="{_fmt(ry)}" fill="none" stroke="{color}" '
            f'stroke-width="1.2" stroke-dasharray="5,4"/>'
        )

    def legend(self, entries: list[tuple[str, str]]) -> None:
        x, y = _W - _MR - 150, _MT + 14
        for i, (label, color) in enumerate(entries):
            yy = y + 16 * i
            self.parts.append(
                f'<line x1="{x}" y1="{yy}" x2="{x + 22}" y2="{yy}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            self.parts.append(
                f'<text x="{x + 28}" y="{yy + 4}" font-size="11" '
                f'fill="#333">{label}</text>'
            )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">\n<rect width="{_W}" height="{_H}" '
            f'fill="white"/>\n{body}\n</svg>\n'
        )


def _read_csv(path: str, columns: list[str]) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if header != columns:
            raise ValueError(
                f"{path}: expected columns {columns}, found {header}"
            )
        rows = [dict(zip(columns, row)) for row in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def render_spectrum(rows: list[dict], bulk_c: float | None = None) -> str:
    vals = [(float(r["re"]), float(r["im"])) for r in rows]
    radius = (
        math.sqrt(bulk_c)
        if bulk_c is not None
        else math.sqrt(max(math.hypot(re, im) for re, im in vals))
    )
    xs = [v[0] for v in vals] + [radius, -radius]
    ys = [v[1] for v in vals] + [radius, -radius]
    padx = 0.08 * (max(xs) - min(xs) or 1.0)
    pady = 0.08 * (max(ys) - min(ys) or 1.0)
    canvas = _Canvas(
        (min(xs) - padx, max(xs) + padx),
        (min(ys) - pady, max(ys) + pady),
        "real part",
        "imaginary part",
        "directed-edge operator spectrum",
    )
    canvas.data_circle(0.0, 0.0, radius, "#d1495b")
    for re, im in vals:
        canvas.circle_marker(re, im, "#1f6fb2", r=2.0)
    return canvas.render()


def render_sweep(rows: list[dict]) -> str:
    series: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        series.setdefault(r["init"], {}).setdefault(float(r["c"]), []).append(
            float(r["overlap"])
        )
    cs = sorted({float(r["c"]) for r in rows})
    canvas = _Canvas(
        (min(cs), max(cs)),
        (-0.05, 1.0),
        "mean degree",
        "overlap with planted labels",
        "BP overlap across the degree grid",
    )
    legend = []
    for i, init in enumerate(sorted(series)):
        color = _COLORS[i % len(_COLORS)]
        pts = [
            (c, sum(vals) / len(vals)) for c, vals in sorted(series[init].items())
        ]
        canvas.polyline(pts, color)
        for c, mean in pts:
            canvas.circle_marker(c, mean, color)
        legend.append((f"init={init}", color))
    canvas.legend(legend)
    return canvas.render()


def render_tree(rows: list[dict]) -> str:
    series: dict[str, list[tuple[float, float, float]]] = {}
    for r in rows:
        series.setdefault(r["estimator"], []).append(
            (float(r["depth"]), float(r["p_hat"]), float(r["std_err"]))
        )
    depths = [float(r["depth"]) for r in rows]
    canvas = _Canvas(
        (min(depths), max(depths)),
        (0.4, 1.02),
        "depth",
        "root recovery rate",
        "tree reconstruction vs depth",
    )
    legend = []
    for i, est in enumerate(sorted(series)):
        color = _COLORS[i % len(_COLORS)]
        pts3 = sorted(series[est])
        canvas.polyline([(d, p) for d, p, _ in pts3], color)
        for d, p, se in pts3:
            canvas.circle_marker(d, p, color)
            canvas.vbar(d, p - 2 * se, p + 2 * se, color)
        legend.append((est, color))
    canvas.legend(legend)
    return canvas.render()


def emit_plot(
    csv_path: str, kind: str, out_path: str, bulk_c: float | None = None
) -> None:
    """Render csv_path (schema fixed per kind) to an SVG at out_path.

    Nothing is written unless the input parses and renders completely.
    """
    if kind == "spectrum":
        svg = render_spectrum(_read_csv(csv_path, SPECTRUM_COLUMNS), bulk_c)
    elif kind == "sweep":
        svg = render_sweep(_read_csv(csv_path, SWEEP_COLUMNS))
    elif kind == "tree":
        svg = render_tree(_read_csv(csv_path, TREE_COLUMNS))
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
