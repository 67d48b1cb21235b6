"""
Experiment output files: mean CSV, raw per-realization CSV, an SVG line chart
and the full result as JSON.
"""
import csv
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union
from xml.sax.saxutils import escape

from onebit_unfold.config.logging import get_logger
from onebit_unfold.core.exceptions import DataIOError
from onebit_unfold.core.models import ExperimentResult

logger = get_logger(__name__)

PathLike = Union[str, Path]

MEAN_HEADER = ["axis", "method", "mean_nmse", "realizations"]
RAW_HEADER = ["axis", "method", "realization", "nmse"]

CHART_WIDTH = 640
CHART_HEIGHT = 400
MARGIN_LEFT = 70
MARGIN_RIGHT = 130
MARGIN_TOP = 40
MARGIN_BOTTOM = 55
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]


def _open_for_write(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", encoding="utf-8", newline="")


def write_mean_csv(result: ExperimentResult, path: PathLike) -> Path:
    """One row per (axis point, method): ``axis,method,mean_nmse,realizations``."""
    target = Path(path)
    with _open_for_write(target) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(MEAN_HEADER)
        for i, point in enumerate(result.axis):
            for method in result.methods:
                writer.writerow(
                    [point, method, repr(float(result.mean_nmse[method][i])), result.realizations]
                )
    return target


def write_raw_csv(result: ExperimentResult, path: PathLike) -> Path:
    target = Path(path)
    with _open_for_write(target) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        for record in result.raw:
            writer.writerow([record.axis, record.method, record.realization, repr(record.nmse)])
    return target


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (value - lo) * (out_hi - out_lo) / (hi - lo)


def render_svg_chart(result: ExperimentResult) -> str:
    """Line chart of mean NMSE against the experiment axis, one line per method."""
    x_lo, x_hi = float(min(result.axis)), float(max(result.axis))
    values = [v for method in result.methods for v in result.mean_nmse[method]]
    y_hi = max(values) * 1.05 if values and max(values) > 0 else 1.0
    y_lo = 0.0

    left, right = MARGIN_LEFT, CHART_WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, CHART_HEIGHT - MARGIN_BOTTOM

    def point(x: float, y: float) -> Tuple[float, float]:
        return _scale(x, x_lo, x_hi, left, right), _scale(y, y_lo, y_hi, bottom, top)

    parts: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" '
        f'height="{CHART_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>',
        f'<text x="{CHART_WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(result.name)}: mean NMSE over {result.realizations} realizations</text>",
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]

    for tick in result.axis:
        x, _ = point(float(tick), y_lo)
        parts.append(f'<line x1="{x:.1f}" y1="{bottom}" x2="{x:.1f}" y2="{bottom + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{bottom + 18}" text-anchor="middle">{tick}</text>')

    for j in range(6):
        value = y_lo + (y_hi - y_lo) * j / 5
        _, y = point(x_lo, value)
        parts.append(f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{value:.3g}</text>')

    parts.append(
        f'<text x="{(left + right) / 2:.1f}" y="{CHART_HEIGHT - 15}" text-anchor="middle">'
        f"{escape(result.axis_name)}</text>"
    )
    parts.append(
        f'<text x="18" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(top + bottom) / 2:.1f})">NMSE</text>'
    )

    for index, method in enumerate(result.methods):
        color = PALETTE[index % len(PALETTE)]
        coords = [point(float(a), float(v)) for a, v in zip(result.axis, result.mean_nmse[method])]
        polyline = " ".join(f"{x:.1f},{y:.1f}" for x, y in coords)
        parts.append(f'<polyline points="{polyline}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.extend(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>' for x, y in coords)
        legend_y = top + 18 * index
        parts.append(
            f'<line x1="{right + 15}" y1="{legend_y}" x2="{right + 35}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{right + 40}" y="{legend_y + 4}">{escape(method)}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg_chart(result: ExperimentResult, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_svg_chart(result), encoding="utf-8")
    return target


def write_experiment(
    result: ExperimentResult, out_dir: PathLike, stem: str, formats: Sequence[str] = ("csv", "svg")
) -> Dict[str, Path]:
    """
    Write every output of one experiment under ``out_dir``.

    Always writes ``<stem>.csv`` (means), ``<stem>_raw.csv`` and
    ``<stem>.json``; the chart is added when ``"svg"`` is among ``formats``.
    """
    directory = Path(out_dir)
    written: Dict[str, Path] = {}
    try:
        written["mean_csv"] = write_mean_csv(result, directory / f"{stem}.csv")
        written["raw_csv"] = write_raw_csv(result, directory / f"{stem}_raw.csv")
        json_path = directory / f"{stem}.json"
        json_path.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
        written["json"] = json_path
        if "svg" in formats:
            written["svg"] = write_svg_chart(result, directory / f"{stem}.svg")
    except OSError as e:
        logger.error("experiment_write_failed", directory=str(directory), error=str(e))
        raise DataIOError(f"Failed to write experiment outputs to {directory}: {e}")

    logger.info("experiment_written", name=result.name, files=[str(p) for p in written.values()])
    return written
