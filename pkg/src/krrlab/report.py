"""Artifact emission: atomic writes, stamped CSV/JSON, and the SVG chart.

Artifacts are byte-deterministic for a fixed config and seed: floats are
serialized with repr, JSON keys are sorted, and the SVG writer emits no
timestamps or random identifiers.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

from . import __version__


def atomic_write(path, data):
    """Write bytes or text to ``path`` via a temp file and rename, so a
    crash never leaves a partial artifact."""
    mode = "wb" if isinstance(data, bytes) else "w"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stamp_line(digest):
    return f"# config_digest={digest} version={__version__}\n"


def write_csv(path, header, rows, digest):
    """CSV artifact with a leading stamp comment; cell floats via repr."""
    lines = [stamp_line(digest), ",".join(header) + "\n"]
    for row in rows:
        lines.append(",".join(
            repr(c) if isinstance(c, float) else str(c) for c in row) + "\n")
    atomic_write(path, "".join(lines))


def write_json(path, payload, digest):
    payload = dict(payload)
    payload["config_digest"] = digest
    payload["version"] = __version__
    atomic_write(path, json.dumps(payload, sort_keys=True, indent=2,
                                  default=_json_default) + "\n")


def _json_default(obj):
    import numpy as np
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def read_report_csv(path):
    """Read a rates CSV artifact (skipping stamp comments)."""
    rows = []
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise ValueError("empty report")
    header = lines[0].strip().split(",")
    required = {"n", "lambda", "mean_err", "stderr", "predicted"}
    if not required.issubset(header):
        raise ValueError(f"report missing columns {required - set(header)}")
    idx = {name: header.index(name) for name in header}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.strip().split(",")
        rows.append({k: float(parts[i]) for k, i in idx.items()})
    if not rows:
        raise ValueError("report has no data rows")
    return rows


# ---------------------------------------------------------------------------
# SVG log-log chart (hand-rolled: deterministic bytes, no dependencies)
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 640, 440
_MARGIN = 70


def _ticks(lo, hi):
    lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def svg_loglog(series, title, xlabel="n", ylabel="error", annotation=""):
    """Minimal deterministic SVG log-log chart.

    ``series`` is a list of (label, xs, ys, color) tuples; all values must
    be positive.
    """
    xs_all = [x for _, xs, _, _ in series for x in xs]
    ys_all = [y for _, _, ys, _ in series for y in ys]
    if not xs_all or min(xs_all) <= 0 or min(ys_all) <= 0:
        raise ValueError("log-log chart needs positive data")
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo / 2, x_hi * 2
    if y_lo == y_hi:
        y_lo, y_hi = y_lo / 2, y_hi * 2

    def px(x):
        f = (math.log(x) - math.log(x_lo)) / (math.log(x_hi) - math.log(x_lo))
        return _MARGIN + f * (_SVG_W - 2 * _MARGIN)

    def py(y):
        f = (math.log(y) - math.log(y_lo)) / (math.log(y_hi) - math.log(y_lo))
        return _SVG_H - _MARGIN - f * (_SVG_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W // 2}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
    ]
    axis = (f'M {_MARGIN} {_MARGIN} L {_MARGIN} {_SVG_H - _MARGIN} '
            f'L {_SVG_W - _MARGIN} {_SVG_H - _MARGIN}')
    parts.append(f'<path d="{axis}" stroke="black" fill="none"/>')
    for tx in _ticks(x_lo, x_hi):
        if x_lo <= tx <= x_hi:
            x = px(tx)
            parts.append(f'<line x1="{x:.2f}" y1="{_SVG_H - _MARGIN}" '
                         f'x2="{x:.2f}" y2="{_SVG_H - _MARGIN + 5}" stroke="black"/>')
            parts.append(f'<text x="{x:.2f}" y="{_SVG_H - _MARGIN + 18}" '
                         f'text-anchor="middle" font-family="monospace" '
                         f'font-size="10">1e{int(math.log10(tx))}</text>')
    for ty in _ticks(y_lo, y_hi):
        if y_lo <= ty <= y_hi:
            y = py(ty)
            parts.append(f'<line x1="{_MARGIN - 5}" y1="{y:.2f}" '
                         f'x2="{_MARGIN}" y2="{y:.2f}" stroke="black"/>')
            parts.append(f'<text x="{_MARGIN - 8}" y="{y + 3:.2f}" '
                         f'text-anchor="end" font-family="monospace" '
                         f'font-size="10">1e{int(math.log10(ty))}</text>')
    parts.append(f'<text x="{_SVG_W // 2}" y="{_SVG_H - 12}" '
                 f'text-anchor="middle" font-family="monospace" '
                 f'font-size="12">{xlabel}</text>')
    parts.append(f'<text x="16" y="{_SVG_H // 2}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12" '
                 f'transform="rotate(-90 16 {_SVG_H // 2})">{ylabel}</text>')

    for li, (label, xs, ys, color) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" '
                         f'r="2.5" fill="{color}"/>')
        parts.append(f'<text x="{_SVG_W - _MARGIN}" y="{_MARGIN + 16 * li}" '
                     f'text-anchor="end" font-family="monospace" '
                     f'font-size="11" fill="{color}">{label}</text>')
    if annotation:
        parts.append(f'<text x="{_MARGIN + 8}" y="{_MARGIN + 14}" '
                     f'font-family="monospace" font-size="11">{annotation}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_report(report_path, out_path):
    """SVG log-log chart of empirical vs predicted rates from a rates CSV."""
    rows = read_report_csv(report_path)
    ns = [r["n"] for r in rows]
    means = [r["mean_err"] for r in rows]
    preds = [r["predicted"] for r in rows]
    xs = [math.log(n) for n in ns]
    ys = [math.log(max(m, 1e-300)) for m in means]
    n_pts = len(xs)
    sx = sum(xs) / n_pts
    sy = sum(ys) / n_pts
    slope = (sum((x - sx) * (y - sy) for x, y in zip(xs, ys))
             / sum((x - sx) ** 2 for x in xs))
    svg = svg_loglog(
        [("empirical", ns, means, "#1f77b4"),
         ("predicted", ns, preds, "#d62728")],
        title="risk decay (log-log)",
        annotation=f"fitted slope {slope:.4f}",
    )
    atomic_write(out_path, svg)
    return out_path
