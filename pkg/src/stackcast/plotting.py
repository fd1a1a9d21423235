"""Standalone SVG ratio curves, no plotting dependency.

One panel per prior family; within a panel, one polyline per sample size
over the r2 grid. The smallest n is drawn solid, larger ones dashed, and a
horizontal reference line marks ratio 1.0 (parity with the best candidate).
"""

import xml.etree.ElementTree as ET

from .experiments import ExperimentResult

PANEL_W = 380
PANEL_H = 320
MARGIN_L = 62
MARGIN_R = 20
MARGIN_T = 36
MARGIN_B = 46
DASH = "6,4"
COLORS = ("#1f6fb2", "#c4452c", "#3a8a4d", "#7a4fa3")


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def emit_plot(result: ExperimentResult, path):
    """Write the ratio-versus-r2 chart for every cell in the result."""
    if not result.rows:
        raise ValueError("cannot plot an empty result")
    families = sorted({row.prior_family for row in result.rows})
    width = len(families) * PANEL_W
    height = PANEL_H
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )
    for idx, family in enumerate(families):
        rows = [row for row in result.rows if row.prior_family == family]
        _draw_panel(svg, rows, idx * PANEL_W, family)
    tree = ET.ElementTree(svg)
    ET.indent(tree)
    try:
        tree.write(path, xml_declaration=True, encoding="unicode")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc


def _draw_panel(svg, rows, x0, family):
    r2s = sorted({row.r2 for row in rows})
    ns = sorted({row.n for row in rows})
    ratios = [row.ratio for row in rows]
    ymin = min(min(ratios), 1.0)
    ymax = max(max(ratios), 1.0)
    pad = 0.05 * (ymax - ymin) or 0.05
    ymin -= pad
    ymax += pad
    xmin, xmax = min(r2s), max(r2s)

    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B

    def sx(r2):
        if xmax == xmin:
            return x0 + MARGIN_L + plot_w / 2.0
        return x0 + MARGIN_L + (r2 - xmin) / (xmax - xmin) * plot_w

    def sy(v):
        return MARGIN_T + (ymax - v) / (ymax - ymin) * plot_h

    panel = ET.SubElement(svg, "g", {"class": "panel", "data-prior": family})
    ET.SubElement(
        panel, "rect",
        {"x": str(x0 + MARGIN_L), "y": str(MARGIN_T), "width": str(plot_w),
         "height": str(plot_h), "fill": "none", "stroke": "#444"},
    )
    title = ET.SubElement(
        panel, "text",
        {"x": str(x0 + MARGIN_L + plot_w / 2), "y": str(MARGIN_T - 12),
         "text-anchor": "middle", "font-size": "14"},
    )
    title.text = f"{family} prior candidates"

    for tick in _ticks(ymin, ymax):
        y = sy(tick)
        ET.SubElement(
            panel, "line",
            {"x1": str(x0 + MARGIN_L - 4), "x2": str(x0 + MARGIN_L),
             "y1": f"{y:.2f}", "y2": f"{y:.2f}", "stroke": "#444"},
        )
        label = ET.SubElement(
            panel, "text",
            {"x": str(x0 + MARGIN_L - 8), "y": f"{y + 4:.2f}",
             "text-anchor": "end", "font-size": "11"},
        )
        label.text = f"{tick:.3g}"
    for tick in r2s:
        x = sx(tick)
        ET.SubElement(
            panel, "line",
            {"x1": f"{x:.2f}", "x2": f"{x:.2f}",
             "y1": str(MARGIN_T + plot_h), "y2": str(MARGIN_T + plot_h + 4),
             "stroke": "#444"},
        )
        label = ET.SubElement(
            panel, "text",
            {"x": f"{x:.2f}", "y": str(MARGIN_T + plot_h + 18),
             "text-anchor": "middle", "font-size": "11"},
        )
        label.text = f"{tick:.3g}"
    xlabel = ET.SubElement(
        panel, "text",
        {"x": str(x0 + MARGIN_L + plot_w / 2), "y": str(PANEL_H - 8),
         "text-anchor": "middle", "font-size": "12"},
    )
    xlabel.text = "theoretical R2"

    yref = sy(1.0)
    ET.SubElement(
        panel, "line",
        {"class": "refline", "x1": str(x0 + MARGIN_L),
         "x2": str(x0 + MARGIN_L + plot_w), "y1": f"{yref:.4f}",
         "y2": f"{yref:.4f}", "stroke": "#999", "stroke-dasharray": "2,3"},
    )

    for series_idx, n in enumerate(ns):
        series = sorted(
            (row for row in rows if row.n == n), key=lambda row: row.r2
        )
        color = COLORS[series_idx % len(COLORS)]
        points = " ".join(f"{sx(row.r2):.4f},{sy(row.ratio):.4f}" for row in series)
        attrs = {
            "class": "series",
            "data-n": str(n),
            "points": points,
            "fill": "none",
            "stroke": color,
            "stroke-width": "1.6",
        }
        if n != ns[0]:
            attrs["stroke-dasharray"] = DASH
        ET.SubElement(panel, "polyline", attrs)
        for row in series:
            ET.SubElement(
                panel, "circle",
                {"class": "marker", "cx": f"{sx(row.r2):.4f}",
                 "cy": f"{sy(row.ratio):.4f}", "r": "2.5", "fill": color},
            )
        legend_y = MARGIN_T + 16 + 16 * series_idx
        lx = x0 + MARGIN_L + 10
        line_attrs = {
            "x1": str(lx), "x2": str(lx + 24), "y1": str(legend_y - 4),
            "y2": str(legend_y - 4), "stroke": color, "stroke-width": "1.6",
        }
        if n != ns[0]:
            line_attrs["stroke-dasharray"] = DASH
        ET.SubElement(panel, "line", line_attrs)
        text = ET.SubElement(
            panel, "text",
            {"x": str(lx + 30), "y": str(legend_y), "font-size": "11"},
        )
        text.text = f"n = {n}"
