"""Deterministic, atomic file output: JSON, CSV and hand-written SVG."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path

from .angle import PrecReal, to_decimal_string


def atomic_write(path: Path | str, text: str) -> Path:
    """Write ``text`` to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def jsonable(value):
    if isinstance(value, PrecReal):
        return to_decimal_string(value, 20)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "as_dict"):
        return jsonable(value.as_dict())
    return value


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# svg ----------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_H / 2})">{ylabel}</text>',
    ]


def _sx(x, x0, x1):
    return _PAD + (x - x0) / ((x1 - x0) or 1) * (_W - 2 * _PAD)


def _sy(y, y0, y1):
    return _H - _PAD - (y - y0) / ((y1 - y0) or 1) * (_H - 2 * _PAD)


def line_plot(series: dict[str, list[tuple[float, float]]], title: str, xlabel: str, ylabel: str) -> str:
    pts = [p for s in series.values() for p in s]
    x0, x1 = (min(p[0] for p in pts), max(p[0] for p in pts)) if pts else (0, 1)
    y0, y1 = 0.0, max([p[1] for p in pts] + [1e-9])
    out = _frame(title, xlabel, ylabel)
    out.append(f'<text x="{_PAD - 4}" y="{_PAD + 4}" text-anchor="end" font-size="10">{y1:.3g}</text>')
    out.append(f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end" font-size="10">0</text>')
    for idx, (name, s) in enumerate(series.items()):
        colour = PALETTE[idx % len(PALETTE)]
        path = " ".join(f"{_f(_sx(x, x0, x1))},{_f(_sy(y, y0, y1))}" for x, y in s)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{path}"/>')
        out.append(
            f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 * (idx + 1)}" text-anchor="end" '
            f'font-size="11" fill="{colour}">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_plot(groups: dict[str, list[float]], labels: list[str], title: str, xlabel: str, ylabel: str) -> str:
    """Grouped bars: ``groups`` maps a series name to one value per label."""
    y1 = max([v for vals in groups.values() for v in vals] + [1e-9])
    out = _frame(title, xlabel, ylabel)
    out.append(f'<text x="{_PAD - 4}" y="{_PAD + 4}" text-anchor="end" font-size="10">{y1:.3g}</text>')
    slot = (_W - 2 * _PAD) / max(len(labels), 1)
    width = slot * 0.8 / max(len(groups), 1)
    for g, (name, vals) in enumerate(groups.items()):
        colour = PALETTE[g % len(PALETTE)]
        for b, v in enumerate(vals):
            x = _PAD + b * slot + slot * 0.1 + g * width
            top = _sy(v, 0, y1)
            out.append(
                f'<rect x="{_f(x)}" y="{_f(top)}" width="{_f(width)}" height="{_f(_H - _PAD - top)}" fill="{colour}"/>'
            )
        if len(groups) > 1:
            out.append(
                f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 * (g + 1)}" text-anchor="end" '
                f'font-size="11" fill="{colour}">{name}</text>'
            )
    step = max(1, len(labels) // 20)
    for b, lab in enumerate(labels):
        if b % step == 0:
            x = _PAD + (b + 0.5) * slot
            out.append(f'<text x="{_f(x)}" y="{_H - _PAD + 14}" text-anchor="middle" font-size="9">{lab}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
