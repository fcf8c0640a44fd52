"""Result persistence, descriptive statistics, and block classification.

Numeric files are tab-separated UTF-8 with LF line endings; every real is
printed with exactly six fractional digits so files round-trip at that
precision.  The grid report (CSV + HTML) lays blocks out map-style with
north at the top.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import stats as scipy_stats

from .los import BlockAggregate, HitKind, LosResultSet, RayPairResult
from .roughness import RoughnessResult

TRIM_FRACTION = 0.1  # two-sided cut for the trimmed average

RESULT_COLUMNS = [
    "block_row", "block_col", "loc_idx", "eye_idx", "dir_idx",
    "azimuth_deg", "pitch_deg", "eye_x", "eye_y", "eye_z_a", "eye_z_b",
    "hit_a", "len_a", "hit_b", "len_b", "delta_len", "blocked_mismatch",
]

ROUGHNESS_COLUMNS = ["block_row", "block_col", "rough_a", "rough_b", "delta_rough"]


class RoughnessClass(str, Enum):
    GREEN = "GREEN"
    NEUTRAL = "NEUTRAL"
    RED = "RED"


class BlockClassification(str, Enum):
    OK = "OK"
    SUSPECT = "SUSPECT"
    FLAGGED = "FLAGGED"


@dataclass(frozen=True)
class ThresholdConfig:
    """Classification thresholds; the defaults are illustrative, not vetted."""

    rough_low: float = 0.25
    rough_high: float = 0.50
    delta_len_threshold: float = 10.0  # meters of mean |length delta| per block
    mismatch_ratio_threshold: float = 0.02

    def __post_init__(self):
        if not 0.0 <= self.rough_low <= self.rough_high <= 1.0:
            raise ValueError("need 0 <= rough_low <= rough_high <= 1")
        if self.delta_len_threshold < 0 or not 0.0 <= self.mismatch_ratio_threshold <= 1.0:
            raise ValueError("thresholds must be nonnegative (ratio within [0, 1])")


@dataclass
class SummaryStats:
    n: int
    min: float
    max: float
    mean: float
    trimmed_mean: float
    median: float
    std: float | None  # sample, /(n-1); needs n >= 2
    std_err: float | None
    skewness: float | None  # bias-corrected; needs n >= 3
    kurtosis: float | None  # excess, bias-corrected; needs n >= 4


@dataclass
class BlockFlag:
    block: tuple[int, int]
    ray_count: int
    mismatch_count: int
    mismatch_ratio: float
    mean_abs_delta: float
    max_abs_delta: float
    rough_a: float | None
    rough_b: float | None
    class_a: RoughnessClass | None
    class_b: RoughnessClass | None
    classification: BlockClassification


def _real(x: float) -> str:
    return f"{x:.6f}"


def write_results_tsv(results: LosResultSet, path) -> Path:
    """One row per ray pair, reals at six decimals, booleans as 1/0."""
    path = Path(path)
    lines = ["\t".join(RESULT_COLUMNS)]
    for r in results.records:
        lines.append("\t".join([
            str(r.block[0]), str(r.block[1]), str(r.loc_idx), str(r.eye_idx), str(r.dir_idx),
            _real(r.azimuth_deg), _real(r.pitch_deg), _real(r.eye_x), _real(r.eye_y),
            _real(r.eye_z_a), _real(r.eye_z_b),
            r.hit_a.value, _real(r.len_a), r.hit_b.value, _real(r.len_b),
            _real(r.delta), str(int(r.blocked_mismatch)),
        ]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_results_tsv(path) -> list[RayPairResult]:
    """Parse a results file back into records (at the printed precision)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != RESULT_COLUMNS:
        raise ValueError(f"{path}: not a results file (unexpected header)")
    records = []
    for line in lines[1:]:
        f = line.split("\t")
        records.append(RayPairResult(
            block=(int(f[0]), int(f[1])), loc_idx=int(f[2]), eye_idx=int(f[3]), dir_idx=int(f[4]),
            azimuth_deg=float(f[5]), pitch_deg=float(f[6]), eye_x=float(f[7]), eye_y=float(f[8]),
            eye_z_a=float(f[9]), eye_z_b=float(f[10]),
            hit_a=HitKind(f[11]), len_a=float(f[12]), hit_b=HitKind(f[13]), len_b=float(f[14]),
        ))
    return records


def write_roughness_tsv(rough_a: dict[tuple[int, int], RoughnessResult],
                        rough_b: dict[tuple[int, int], RoughnessResult],
                        grid, path) -> Path:
    """Per-block roughness for both databases; blocks empty on a side get nan."""
    path = Path(path)
    lines = ["\t".join(ROUGHNESS_COLUMNS)]
    for r, c in grid.blocks():
        ra = rough_a.get((r, c))
        rb = rough_b.get((r, c))
        if ra is None and rb is None:
            continue
        va = ra.roughness if ra is not None else float("nan")
        vb = rb.roughness if rb is not None else float("nan")
        lines.append("\t".join([str(r), str(c), _real(va), _real(vb), _real(va - vb)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def summarize(values) -> SummaryStats:
    """Descriptive statistics; higher moments appear once n supports them."""
    arr = np.asarray(list(values), dtype=np.float64)
    n = len(arr)
    if n < 1:
        raise ValueError("cannot summarize an empty list")
    std = float(np.std(arr, ddof=1)) if n >= 2 else None
    return SummaryStats(
        n=n,
        min=float(arr.min()),
        max=float(arr.max()),
        mean=float(arr.mean()),
        trimmed_mean=float(scipy_stats.trim_mean(arr, TRIM_FRACTION)),
        median=float(np.median(arr)),
        std=std,
        std_err=(std / float(np.sqrt(n))) if std is not None else None,
        skewness=float(scipy_stats.skew(arr, bias=False)) if n >= 3 else None,
        kurtosis=float(scipy_stats.kurtosis(arr, bias=False)) if n >= 4 else None,
    )


def classify_roughness(value: float, t: ThresholdConfig) -> RoughnessClass:
    """GREEN below rough_low, RED above rough_high, NEUTRAL between."""
    if value < t.rough_low:
        return RoughnessClass.GREEN
    if value > t.rough_high:
        return RoughnessClass.RED
    return RoughnessClass.NEUTRAL


def flag_blocks(results: LosResultSet,
                rough_a: dict[tuple[int, int], RoughnessResult],
                rough_b: dict[tuple[int, int], RoughnessResult],
                grid, t: ThresholdConfig) -> list[BlockFlag]:
    """Classify every block.

    FLAGGED: blocked-mismatch ratio above threshold, or the two databases'
    roughness classes diverge GREEN-vs-RED.  SUSPECT: mean |length delta|
    above threshold.  OK otherwise.
    """
    if results.config.get("rows") != grid.rows or results.config.get("cols") != grid.cols:
        raise ValueError("result set and grid disagree on rows/cols")
    flags = []
    for r, c in grid.blocks():
        agg = results.block_aggregates.get((r, c), BlockAggregate())
        ra = rough_a.get((r, c))
        rb = rough_b.get((r, c))
        va = ra.roughness if ra is not None else None
        vb = rb.roughness if rb is not None else None
        ca = classify_roughness(va, t) if va is not None else None
        cb = classify_roughness(vb, t) if vb is not None else None
        ratio = agg.mismatch_count / agg.ray_count if agg.ray_count else 0.0
        diverged = {ca, cb} == {RoughnessClass.GREEN, RoughnessClass.RED}
        if ratio > t.mismatch_ratio_threshold or diverged:
            cls = BlockClassification.FLAGGED
        elif agg.mean_abs_delta > t.delta_len_threshold:
            cls = BlockClassification.SUSPECT
        else:
            cls = BlockClassification.OK
        flags.append(BlockFlag(
            block=(r, c), ray_count=agg.ray_count, mismatch_count=agg.mismatch_count,
            mismatch_ratio=ratio, mean_abs_delta=agg.mean_abs_delta,
            max_abs_delta=agg.max_abs_delta,
            rough_a=va, rough_b=vb, class_a=ca, class_b=cb, classification=cls,
        ))
    return flags


def _cell_color(flag: BlockFlag) -> str:
    if flag.class_a is not None and flag.class_a == flag.class_b:
        return {RoughnessClass.GREEN: "green", RoughnessClass.RED: "red",
                RoughnessClass.NEUTRAL: "none"}[flag.class_a]
    return "none"


_HTML_STYLE = """
table { border-collapse: collapse; font-family: sans-serif; }
td, th { border: 1px solid #999; padding: 6px 10px; text-align: center; }
td.green { background: #b6e3b6; }
td.red { background: #f2b0b0; }
td.flagged { outline: 3px solid #c00; }
.label { font-weight: bold; }
.flagmark { color: #c00; font-weight: bold; }
caption { padding: 6px; font-weight: bold; }
"""


def render_grid_report(flags: list[BlockFlag], grid, t: ThresholdConfig,
                       csv_path, html_path) -> tuple[Path, Path]:
    """Map-style grid (north at top) as CSV and a standalone HTML table.

    Cells carry the class of both roughness values when they agree (green or
    red), and FLAGGED blocks carry a marker distinct from the color bands.
    """
    csv_path, html_path = Path(csv_path), Path(html_path)
    by_block = {f.block: f for f in flags}

    def fmt(v):
        return _real(v) if v is not None else ""

    csv_lines = ["North"]
    for r in range(grid.rows - 1, -1, -1):
        row_flags = [by_block[(r, c)] for c in range(grid.cols)]
        csv_lines.append(",".join(f"Block {r}_{c}" for c in range(grid.cols)))
        csv_lines.append(",".join(fmt(f.rough_a) for f in row_flags))
        csv_lines.append(",".join(fmt(f.rough_b) for f in row_flags))
        csv_lines.append(",".join(f.classification.value for f in row_flags))
    csv_lines.append("South")
    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")

    rows_html = []
    for r in range(grid.rows - 1, -1, -1):
        cells = []
        for c in range(grid.cols):
            f = by_block[(r, c)]
            classes = [_cell_color(f)]
            if f.classification is BlockClassification.FLAGGED:
                classes.append("flagged")
            mark = '<div class="flagmark">FLAGGED</div>' if f.classification is BlockClassification.FLAGGED else ""
            cells.append(
                f'<td class="{" ".join(classes)}"><div class="label">Block {r}_{c}</div>'
                f"<div>{fmt(f.rough_a)}</div><div>{fmt(f.rough_b)}</div>{mark}</td>"
            )
        rows_html.append("<tr>" + "".join(cells) + "</tr>")
    legend = (f"green: roughness &lt; {t.rough_low:g} in both | "
              f"red: roughness &gt; {t.rough_high:g} in both | "
              f"FLAGGED: mismatch ratio &gt; {t.mismatch_ratio_threshold:g} "
              f"or GREEN/RED divergence")
    doc = (
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\">"
        f"<title>Block correlation report</title><style>{_HTML_STYLE}</style></head><body>"
        f"<table><caption>North</caption>{''.join(rows_html)}</table>"
        f"<p>{legend}</p><p>Top value: database A; bottom value: database B.</p>"
        "</body></html>"
    )
    html_path.write_text(doc, encoding="utf-8", newline="\n")
    return csv_path, html_path
