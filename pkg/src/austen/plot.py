"""Plot assembly and deterministic SVG rendering.

The drawing is an SVG 1.1 document built by string assembly: no
randomness, fixed element order, every coordinate formatted to six
decimals. Identical inputs give identical bytes, which makes golden
tests and artifact diffs meaningful.

Data coordinates are the unit square: alpha rightward, partial R^2
upward. ``data_to_px`` / ``px_to_data`` are exact inverses up to the
six-decimal rounding of emitted coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .bootstrap import BootstrapBand
from .calibration import CovariateInfluence
from .core import BiasCurve, Estimand
from .errors import InputValidationError

__all__ = [
    "PlotStyle",
    "PlotLabels",
    "PlotData",
    "build_plot_data",
    "data_to_px",
    "px_to_data",
    "render_svg",
]


@dataclass(frozen=True)
class PlotStyle:
    """Geometry and colors. Defaults draw a 640x480 chart."""

    width: float = 640.0
    height: float = 480.0
    margin_left: float = 64.0
    margin_right: float = 24.0
    margin_top: float = 48.0
    margin_bottom: float = 56.0
    curve_color: str = "#1f6feb"
    band_color: str = "#1f6feb"
    band_opacity: float = 0.18
    dot_color: str = "#d1242f"
    dot_radius: float = 4.0
    infeasible_dash: str = "6,4"
    axis_color: str = "#444444"
    font_family: str = "Helvetica, Arial, sans-serif"
    font_size: float = 12.0

    def __post_init__(self):
        if self.width - self.margin_left - self.margin_right <= 0:
            raise InputValidationError("margins leave no horizontal plot area")
        if self.height - self.margin_top - self.margin_bottom <= 0:
            raise InputValidationError("margins leave no vertical plot area")


@dataclass(frozen=True)
class PlotLabels:
    title: str = ""
    x_label: str = "treatment influence (alpha)"
    y_label: str = "outcome influence (partial R²)"


@dataclass(frozen=True)
class PlotData:
    """Everything one chart shows: curve, dots, optional band, text."""

    curve: BiasCurve
    dots: tuple[CovariateInfluence, ...] = ()
    band: BootstrapBand | None = None
    labels: PlotLabels = field(default_factory=PlotLabels)
    style: PlotStyle = field(default_factory=PlotStyle)

    def __post_init__(self):
        object.__setattr__(self, "dots", tuple(self.dots))
        names = [d.group_name for d in self.dots]
        if len(set(names)) != len(names):
            raise InputValidationError("duplicate dot group names")
        if self.band is not None:
            if not np.array_equal(self.band.alpha_grid, self.curve.alpha_grid):
                raise InputValidationError(
                    "band alpha grid does not match the curve grid"
                )
            if Estimand(self.band.estimand) is not Estimand(self.curve.estimand):
                raise InputValidationError(
                    "band and curve disagree on the estimand"
                )

    def to_dict(self) -> dict:
        doc = {
            "schema_version": 1,
            "kind": "plot_data",
            "curve": {
                "target_bias": self.curve.target_bias,
                "estimand": self.curve.estimand.value,
                "alpha_grid": [float(a) for a in self.curve.alpha_grid],
                "r2": [float(v) for v in self.curve.r2],
                "feasible": [bool(f) for f in self.curve.feasible],
            },
            "dots": [
                {
                    "group_name": d.group_name,
                    "alpha_hat": d.alpha_hat,
                    "r2_hat": d.r2_hat,
                    "alpha_raw": d.alpha_raw,
                    "r2_raw": d.r2_raw,
                    "clipped": d.clipped,
                }
                for d in self.dots
            ],
            "band": None if self.band is None else self.band.to_dict(),
            "labels": {
                "title": self.labels.title,
                "x_label": self.labels.x_label,
                "y_label": self.labels.y_label,
            },
            "style": {f.name: getattr(self.style, f.name)
                      for f in fields(PlotStyle)},
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PlotData":
        try:
            c = doc["curve"]
            curve = BiasCurve(
                target_bias=float(c["target_bias"]),
                estimand=Estimand(c["estimand"]),
                alpha_grid=np.asarray(c["alpha_grid"], dtype=np.float64),
                r2=np.asarray(c["r2"], dtype=np.float64),
                feasible=np.asarray(c["feasible"], dtype=bool),
            )
            dots = tuple(
                CovariateInfluence(
                    group_name=d["group_name"],
                    alpha_hat=float(d["alpha_hat"]),
                    r2_hat=float(d["r2_hat"]),
                    alpha_raw=float(d["alpha_raw"]),
                    r2_raw=float(d["r2_raw"]),
                    clipped=bool(d["clipped"]),
                )
                for d in doc.get("dots", [])
            )
            band = doc.get("band")
            band = None if band is None else BootstrapBand.from_dict(band)
            lab = doc.get("labels", {})
            labels = PlotLabels(
                title=str(lab.get("title", "")),
                x_label=str(lab.get("x_label", PlotLabels.x_label)),
                y_label=str(lab.get("y_label", PlotLabels.y_label)),
            )
            style_doc = doc.get("style", {})
            known = {f.name for f in fields(PlotStyle)}
            unknown = set(style_doc) - known
            if unknown:
                raise InputValidationError(
                    f"unknown style keys {sorted(unknown)!r}"
                )
            style = PlotStyle(**style_doc)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputValidationError):
                raise
            raise InputValidationError(
                f"malformed plot data document: {exc}"
            ) from exc
        return cls(curve=curve, dots=dots, band=band,
                   labels=labels, style=style)


def build_plot_data(
    curve: BiasCurve,
    dots: Sequence[CovariateInfluence] = (),
    band: BootstrapBand | None = None,
    labels: PlotLabels | None = None,
    style: PlotStyle | None = None,
) -> PlotData:
    """Assemble and validate the full description of one chart."""
    return PlotData(
        curve=curve,
        dots=tuple(dots),
        band=band,
        labels=labels or PlotLabels(),
        style=style or PlotStyle(),
    )


def data_to_px(alpha: float, r2: float, style: PlotStyle) -> tuple[float, float]:
    """(alpha, r2) in the unit square to pixel coordinates."""
    pw = style.width - style.margin_left - style.margin_right
    ph = style.height - style.margin_top - style.margin_bottom
    return (style.margin_left + alpha * pw,
            style.margin_top + (1.0 - r2) * ph)


def px_to_data(x: float, y: float, style: PlotStyle) -> tuple[float, float]:
    """Inverse of data_to_px."""
    pw = style.width - style.margin_left - style.margin_right
    ph = style.height - style.margin_top - style.margin_bottom
    return ((x - style.margin_left) / pw,
            1.0 - (y - style.margin_top) / ph)


def _f(v: float) -> str:
    return f"{v:.6f}"


# label slot offsets, clockwise from east: (dx, dy, text-anchor)
_LABEL_SLOTS = (
    (10.0, 4.0, "start"),
    (8.0, 16.0, "start"),
    (0.0, 22.0, "middle"),
    (-8.0, 16.0, "end"),
    (-10.0, 4.0, "end"),
    (-8.0, -8.0, "end"),
    (0.0, -12.0, "middle"),
    (8.0, -8.0, "start"),
)


def _label_rect(x: float, y: float, anchor: str, text: str,
                font_size: float) -> tuple[float, float, float, float]:
    w = 0.62 * font_size * max(len(text), 1)
    if anchor == "start":
        x0 = x
    elif anchor == "end":
        x0 = x - w
    else:
        x0 = x - w / 2.0
    return (x0, y - 0.8 * font_size, x0 + w, y + 0.25 * font_size)


def _rects_overlap(a, b) -> bool:
    return not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1])


def _place_label(px: float, py: float, text: str, style: PlotStyle,
                 taken: list, dot_rects: list) -> tuple[float, float, str]:
    """First slot (clockwise from east) whose label box hits nothing;
    if every slot collides, the least-colliding one wins."""
    best = None
    best_hits = None
    for dx, dy, anchor in _LABEL_SLOTS:
        rect = _label_rect(px + dx, py + dy, anchor, text, style.font_size)
        hits = sum(_rects_overlap(rect, r) for r in taken + dot_rects)
        if hits == 0:
            taken.append(rect)
            return px + dx, py + dy, anchor
        if best_hits is None or hits < best_hits:
            best = (px + dx, py + dy, anchor, rect)
            best_hits = hits
    taken.append(best[3])
    return best[0], best[1], best[2]


def _clip01(v: float) -> tuple[float, bool]:
    if v < 0.0:
        return 0.0, True
    if v > 1.0:
        return 1.0, True
    return v, False


def render_svg(data: PlotData) -> str:
    """Render the chart to an SVG 1.1 document (a str of the bytes to
    write). Deterministic: equal inputs, equal output."""
    st = data.style
    lab = data.labels
    curve = data.curve
    out: list[str] = []
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_f(st.width)}" height="{_f(st.height)}" '
        f'viewBox="0 0 {_f(st.width)} {_f(st.height)}">'
    )
    out.append(f'<rect width="{_f(st.width)}" height="{_f(st.height)}" '
               'fill="#ffffff"/>')
    out.append(f'<g font-family="{escape(st.font_family)}" '
               f'font-size="{_f(st.font_size)}">')

    x0, y1 = data_to_px(0.0, 0.0, st)
    x1, y0 = data_to_px(1.0, 1.0, st)

    # shaded bootstrap band, under everything else that carries data
    if data.band is not None:
        pts = []
        grid = data.band.alpha_grid
        for a, r in zip(grid, data.band.r2_high):
            hx, hy = data_to_px(float(a), float(r), st)
            pts.append(f"{_f(hx)},{_f(hy)}")
        for a, r in zip(grid[::-1], data.band.r2_low[::-1]):
            lx, ly = data_to_px(float(a), float(r), st)
            pts.append(f"{_f(lx)},{_f(ly)}")
        out.append(f'<polygon points="{" ".join(pts)}" '
                   f'fill="{st.band_color}" '
                   f'fill-opacity="{_f(st.band_opacity)}" stroke="none"/>')

    # curve: solid where both segment ends are feasible, dashed otherwise
    px = [data_to_px(float(a), float(r), st)
          for a, r in zip(curve.alpha_grid, curve.r2)]
    solid_d: list[str] = []
    dashed_d: list[str] = []
    in_solid = in_dashed = False
    for i in range(len(px) - 1):
        seg_solid = bool(curve.feasible[i] and curve.feasible[i + 1])
        target = solid_d if seg_solid else dashed_d
        if not (in_solid if seg_solid else in_dashed):
            target.append(f"M {_f(px[i][0])} {_f(px[i][1])}")
        target.append(f"L {_f(px[i + 1][0])} {_f(px[i + 1][1])}")
        in_solid, in_dashed = seg_solid, not seg_solid
    if solid_d:
        out.append(f'<path d="{" ".join(solid_d)}" fill="none" '
                   f'stroke="{st.curve_color}" stroke-width="2"/>')
    if dashed_d:
        out.append(f'<path d="{" ".join(dashed_d)}" fill="none" '
                   f'stroke="{st.curve_color}" stroke-width="2" '
                   f'stroke-dasharray="{st.infeasible_dash}"/>')

    # axes and ticks
    out.append(f'<g stroke="{st.axis_color}" stroke-width="1">')
    out.append(f'<line x1="{_f(x0)}" y1="{_f(y1)}" x2="{_f(x1)}" y2="{_f(y1)}"/>')
    out.append(f'<line x1="{_f(x0)}" y1="{_f(y1)}" x2="{_f(x0)}" y2="{_f(y0)}"/>')
    for k in range(6):
        v = k / 5.0
        tx, _ = data_to_px(v, 0.0, st)
        out.append(f'<line x1="{_f(tx)}" y1="{_f(y1)}" '
                   f'x2="{_f(tx)}" y2="{_f(y1 + 5)}"/>')
        _, ty = data_to_px(0.0, v, st)
        out.append(f'<line x1="{_f(x0 - 5)}" y1="{_f(ty)}" '
                   f'x2="{_f(x0)}" y2="{_f(ty)}"/>')
    out.append('</g>')
    out.append(f'<g fill="{st.axis_color}">')
    for k in range(6):
        v = k / 5.0
        tx, _ = data_to_px(v, 0.0, st)
        out.append(f'<text x="{_f(tx)}" y="{_f(y1 + 18)}" '
                   f'text-anchor="middle">{v:.1f}</text>')
        _, ty = data_to_px(0.0, v, st)
        out.append(f'<text x="{_f(x0 - 9)}" y="{_f(ty + 4)}" '
                   f'text-anchor="end">{v:.1f}</text>')
    out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{_f(y1 + 40)}" '
               f'text-anchor="middle">{escape(lab.x_label)}</text>')
    ycx = x0 - 44.0
    ycy = (y0 + y1) / 2.0
    out.append(f'<text x="{_f(ycx)}" y="{_f(ycy)}" text-anchor="middle" '
               f'transform="rotate(-90 {_f(ycx)} {_f(ycy)})">'
               f'{escape(lab.y_label)}</text>')
    if lab.title:
        out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{_f(y0 - 16)}" '
                   f'text-anchor="middle" font-size="{_f(st.font_size * 1.25)}">'
                   f'{escape(lab.title)}</text>')
    annot = (f"bias = {curve.target_bias:.6g} "
             f"({curve.estimand.value.upper()})")
    out.append(f'<text x="{_f(x1)}" y="{_f(y0 - 6)}" text-anchor="end">'
               f'{escape(annot)}</text>')
    if curve.all_infeasible:
        out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{_f((y0 + y1) / 2)}" '
                   f'text-anchor="middle" fill="#b35900">'
                   'no confounder on this grid reaches the target bias</text>')
    out.append('</g>')

    # calibration dots with collision-avoiding labels
    dot_geo = []
    for d in data.dots:
        a, a_clipped = _clip01(d.alpha_hat)
        r, r_clipped = _clip01(d.r2_hat)
        cx, cy = data_to_px(a, r, st)
        dot_geo.append((d, cx, cy, a_clipped or r_clipped))
    dot_rects = [
        (cx - st.dot_radius, cy - st.dot_radius,
         cx + st.dot_radius, cy + st.dot_radius)
        for _, cx, cy, _ in dot_geo
    ]
    taken: list = []
    for d, cx, cy, out_of_range in dot_geo:
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" '
                   f'r="{_f(st.dot_radius)}" fill="{st.dot_color}"/>')
        if out_of_range:
            # value fell outside the unit square: mark the clipped spot
            s = st.dot_radius + 3.0
            out.append(f'<path d="M {_f(cx - s)} {_f(cy - s)} '
                       f'L {_f(cx + s)} {_f(cy + s)} '
                       f'M {_f(cx - s)} {_f(cy + s)} '
                       f'L {_f(cx + s)} {_f(cy - s)}" '
                       f'stroke="{st.dot_color}" stroke-width="1" '
                       'fill="none"/>')
        lx, ly, anchor = _place_label(cx, cy, d.group_name, st,
                                      taken, dot_rects)
        out.append(f'<text x="{_f(lx)}" y="{_f(ly)}" '
                   f'text-anchor="{anchor}" fill="{st.dot_color}">'
                   f'{escape(d.group_name)}</text>')

    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
