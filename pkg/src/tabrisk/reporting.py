"""Report emission: canonical report.json, CSV tables, and SVG figures.

Figures are hand-rolled SVG built purely from report.json content, so
regenerating them from a saved report is byte-identical. CSV numbers are
fixed at 4 decimals.
"""

from __future__ import annotations

import json
import pathlib

CSV_DECIMALS = 4


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, out_dir) -> dict[str, pathlib.Path]:
    out = pathlib.Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    written = {}
    report_path = out / "report.json"
    report_path.write_text(canonical_json(report))
    written["report"] = report_path
    for name, text in render_tables(report).items():
        path = out / "tables" / name
        path.write_text(text)
        written[f"tables/{name}"] = path
    for name, text in render_figures(report).items():
        path = out / "figures" / name
        path.write_text(text)
        written[f"figures/{name}"] = path
    return written


# ---------------------------------------------------------------------------
# Tables

def _fmt(value) -> str:
    if value != value:  # NaN
        return "nan"
    return f"{value:.{CSV_DECIMALS}f}"


def render_tables(report: dict) -> dict[str, str]:
    results = report["results"]
    tables = {}

    rows = ["model,regime,auc_roc,f1,precision,recall,accuracy,q0,q50,q99,mean,std"]
    for r in results:
        t = r["test"]
        e = r["edge_cohort"]
        rows.append(",".join([r["model"], r["regime"]] + [
            _fmt(t[k]) for k in ("auc_roc", "f1", "precision", "recall", "accuracy")
        ] + [_fmt(e[k]) for k in ("q0", "q50", "q99", "mean", "std")]))
    tables["test_classification.csv"] = "\n".join(rows) + "\n"

    rows = ["model,regime,avg_confidence,avg_entropy,brier,ece"]
    for r in results:
        t = r["test"]
        rows.append(",".join([r["model"], r["regime"]] + [
            _fmt(t[k]) for k in ("avg_confidence", "avg_entropy", "brier", "ece")]))
    tables["test_probability.csv"] = "\n".join(rows) + "\n"

    for name, keys in (("cv_classification.csv",
                        ("auc_roc", "f1", "precision", "recall", "accuracy")),
                       ("cv_probability.csv",
                        ("avg_confidence", "avg_entropy", "brier", "ece"))):
        header = "model,regime," + ",".join(f"{k}_mean,{k}_std" for k in keys)
        rows = [header]
        for r in results:
            cells = [r["model"], r["regime"]]
            for k in keys:
                cells.append(_fmt(r["cv"][k]["mean"]))
                cells.append(_fmt(r["cv"][k]["std"]))
            rows.append(",".join(cells))
        tables[name] = "\n".join(rows) + "\n"

    rank_tables = report.get("rank_tables", {})
    if rank_tables:
        regimes = sorted(rank_tables)
        features = rank_tables[regimes[0]]["features"]
        rows = ["feature," + ",".join(regimes)]
        for i, feature in enumerate(features):
            cells = [feature.replace(",", ";")]
            for regime in regimes:
                cells.append(_fmt(rank_tables[regime]["mean_rank"][i]))
            rows.append(",".join(cells))
        tables["importance_ranks.csv"] = "\n".join(rows) + "\n"

    rows = ["model,regime,auc_rc"]
    for r in results:
        rows.append(",".join([r["model"], r["regime"], _fmt(r["rc_curve"]["auc_rc"])]))
    tables["risk_coverage.csv"] = "\n".join(rows) + "\n"
    return tables


# ---------------------------------------------------------------------------
# Figures (minimal deterministic SVG)

_W, _H = 480, 340
_ML, _MR, _MT, _MB = 60, 20, 30, 50


def _svg(elements: list[str], title: str) -> str:
    body = "\n".join(elements)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n'
        f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
        f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="monospace" font-size="13">{title}</text>\n'
        f"{body}\n</svg>\n"
    )


def _x(frac: float) -> float:
    return _ML + frac * (_W - _ML - _MR)


def _y(frac: float) -> float:
    return _H - _MB - frac * (_H - _MT - _MB)


def _axes(x_label: str, y_label: str, y_ticks: list[tuple[float, str]]) -> list[str]:
    parts = [
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{_x(0.5):.1f}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{x_label}</text>',
        f'<text x="16" y="{_y(0.5):.1f}" text-anchor="middle" '
        f'font-family="monospace" font-size="11" '
        f'transform="rotate(-90 16 {_y(0.5):.1f})">{y_label}</text>',
    ]
    for frac, label in y_ticks:
        parts.append(f'<line x1="{_ML - 4}" y1="{_y(frac):.1f}" x2="{_ML}" '
                     f'y2="{_y(frac):.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{_y(frac) + 4:.1f}" text-anchor="end" '
                     f'font-family="monospace" font-size="10">{label}</text>')
    return parts


def probability_histogram_svg(probabilities: list[float], title: str,
                              bins: int = 20) -> str:
    counts = [0] * bins
    for p in probabilities:
        idx = min(int(p * bins), bins - 1)
        counts[idx] += 1
    peak = max(max(counts), 1)
    parts = _axes("predicted probability", "count",
                  [(0.0, "0"), (1.0, str(peak))])
    width = (_W - _ML - _MR) / bins
    for i, count in enumerate(counts):
        if count == 0:
            continue
        height = (count / peak) * (_H - _MT - _MB)
        x = _ML + i * width
        y = _H - _MB - height
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{width - 1:.1f}" '
                     f'height="{height:.1f}" fill="#4878a8"/>')
    for frac, label in ((0.0, "0.0"), (0.5, "0.5"), (1.0, "1.0")):
        parts.append(f'<text x="{_x(frac):.1f}" y="{_H - _MB + 16}" '
                     f'text-anchor="middle" font-family="monospace" '
                     f'font-size="10">{label}</text>')
    return _svg(parts, title)


def rc_curve_svg(coverage: list[float], risk: list[float], auc_rc: float,
                 title: str) -> str:
    top = max(max(risk), 0.1)
    parts = _axes("coverage", "selective risk",
                  [(0.0, "0.00"), (0.5, f"{top / 2:.2f}"), (1.0, f"{top:.2f}")])
    points = " ".join(f"{_x(c):.1f},{_y(min(r / top, 1.0)):.1f}"
                      for c, r in zip(coverage, risk))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#a83232" '
                 f'stroke-width="1.5"/>')
    parts.append(f'<text x="{_x(0.05):.1f}" y="{_y(0.92):.1f}" '
                 f'font-family="monospace" font-size="11">AUC-RC={auc_rc:.4f}</text>')
    for frac, label in ((0.0, "0.0"), (0.5, "0.5"), (1.0, "1.0")):
        parts.append(f'<text x="{_x(frac):.1f}" y="{_H - _MB + 16}" '
                     f'text-anchor="middle" font-family="monospace" '
                     f'font-size="10">{label}</text>')
    return _svg(parts, title)


_RADAR_KEYS = ("auc_roc", "f1", "precision", "recall", "accuracy")
_RADAR_COLORS = ("#4878a8", "#a83232", "#3a8c5c", "#8c6d1f", "#6d3a8c", "#1f8c8c")


def radar_svg(series: dict[str, dict[str, float]], title: str) -> str:
    import math

    cx, cy, radius = _W / 2, (_H + 20) / 2, 105
    k = len(_RADAR_KEYS)
    parts = []
    for i, key in enumerate(_RADAR_KEYS):
        angle = -math.pi / 2 + 2 * math.pi * i / k
        x = cx + radius * math.cos(angle)
        y = cy + radius * math.sin(angle)
        parts.append(f'<line x1="{cx:.1f}" y1="{cy:.1f}" x2="{x:.1f}" y2="{y:.1f}" '
                     f'stroke="#cccccc"/>')
        lx = cx + (radius + 18) * math.cos(angle)
        ly = cy + (radius + 18) * math.sin(angle)
        parts.append(f'<text x="{lx:.1f}" y="{ly:.1f}" text-anchor="middle" '
                     f'font-family="monospace" font-size="10">{key}</text>')
    for ring in (0.25, 0.5, 0.75, 1.0):
        ring_points = []
        for i in range(k):
            angle = -math.pi / 2 + 2 * math.pi * i / k
            ring_points.append(f"{cx + ring * radius * math.cos(angle):.1f},"
                               f"{cy + ring * radius * math.sin(angle):.1f}")
        parts.append(f'<polygon points="{" ".join(ring_points)}" fill="none" '
                     f'stroke="#eeeeee"/>')
    for s_idx, (name, metrics) in enumerate(series.items()):
        color = _RADAR_COLORS[s_idx % len(_RADAR_COLORS)]
        pts = []
        for i, key in enumerate(_RADAR_KEYS):
            v = min(max(metrics[key], 0.0), 1.0)
            angle = -math.pi / 2 + 2 * math.pi * i / k
            pts.append(f"{cx + v * radius * math.cos(angle):.1f},"
                       f"{cy + v * radius * math.sin(angle):.1f}")
        parts.append(f'<polygon points="{" ".join(pts)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<rect x="{_W - 150}" y="{30 + 14 * s_idx}" width="10" '
                     f'height="10" fill="{color}"/>')
        parts.append(f'<text x="{_W - 136}" y="{39 + 14 * s_idx}" '
                     f'font-family="monospace" font-size="10">{name}</text>')
    return _svg(parts, title)


def _slug(text: str) -> str:
    return text.replace(" ", "_").replace("/", "-")


def render_figures(report: dict) -> dict[str, str]:
    figures = {}
    by_model: dict[str, dict[str, dict]] = {}
    for r in report["results"]:
        model, regime = r["model"], r["regime"]
        by_model.setdefault(model, {})[regime] = r
        figures[f"prob_hist_{_slug(model)}_{_slug(regime)}.svg"] = (
            probability_histogram_svg(
                r["edge_probabilities"],
                f"edge-cohort probabilities: {model} / {regime}"))
        rc = r["rc_curve"]
        figures[f"rc_{_slug(model)}_{_slug(regime)}.svg"] = rc_curve_svg(
            rc["coverage"], rc["risk"], rc["auc_rc"],
            f"risk-coverage: {model} / {regime}")
    for model, regimes in by_model.items():
        series = {regime: r["test"] for regime, r in regimes.items()}
        figures[f"radar_{_slug(model)}.svg"] = radar_svg(
            series, f"classification metrics: {model}")
    return figures
