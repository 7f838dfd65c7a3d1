"""Serialization: versioned model JSON, CSV reports, SVG scatter plots.

All writers are deterministic: floats are rendered as 17-significant-digit
decimals (JSON) or ``repr`` (CSV), keys are sorted, and no timestamps or
environment state enter the output, so identical inputs produce
byte-identical files.  The model document embeds a SHA-256 checksum of its
payload, verified on load.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from . import decomposition, kdme
from .detector import (
    FORMAT_VERSION,
    DetectionReport,
    Metrics,
    ModelMetadata,
    NoveltyModel,
    SimulationVerdict,
)
from .errors import FormatVersionError, InvalidInputError
from .features import Normalizer


def canonical_json(obj) -> str:
    """Render a JSON document with sorted keys and .17g floats."""
    if isinstance(obj, dict):
        items = sorted(obj.items())
        inner = ",".join(f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise InvalidInputError(f"cannot serialize non-finite value {value}")
        return format(value, ".17g")
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise InvalidInputError(f"cannot serialize type {type(obj).__name__}")


def _matrix(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [float(v) for v in a.reshape(-1)],
    }


def _unmatrix(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=float).reshape(d["rows"], d["cols"])


def _vector(a) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _kdme_to_dict(m: kdme.KdmeModel) -> dict:
    return {
        "window": [float(m.window[0]), float(m.window[1])],
        "N": int(m.N),
        "x_eval": _vector(m.x_eval),
        "M": int(m.M),
        "gamma": _vector(m.gamma),
        "lam": _vector(m.lam),
        "p_me": _vector(m.p_me),
        "m0": float(m.m0),
        "h": float(m.h),
        "theta": float(m.theta),
    }


def _kdme_from_dict(d: dict) -> kdme.KdmeModel:
    return kdme.KdmeModel(
        window=(float(d["window"][0]), float(d["window"][1])),
        N=int(d["N"]),
        x_eval=np.asarray(d["x_eval"], dtype=float),
        M=int(d["M"]),
        gamma=np.asarray(d["gamma"], dtype=float),
        lam=np.asarray(d["lam"], dtype=float),
        p_me=np.asarray(d["p_me"], dtype=float),
        m0=float(d["m0"]),
        h=float(d["h"]),
        theta=float(d["theta"]),
    )


def model_to_dict(model: NoveltyModel) -> dict:
    return {
        "normalizer": {
            "mins": _vector(model.normalizer.mins),
            "maxs": _vector(model.normalizer.maxs),
        },
        "pca": {
            "means": _vector(model.pca.means),
            "loadings": _matrix(model.pca.loadings),
            "explained_variance_ratio": _vector(model.pca.explained_variance_ratio),
        },
        "ica": {
            "whitening": _matrix(model.ica.whitening),
            "W": _matrix(model.ica.W),
            "component_order": [int(i) for i in model.ica.component_order],
            "converged": [bool(c) for c in model.ica.converged],
        },
        "marginals": [_kdme_to_dict(m) for m in model.marginals],
        "threshold": float(model.threshold),
        "metadata": {
            "q": int(model.metadata.q),
            "eta_values": _vector(model.metadata.eta_values),
            "segment_seconds": float(model.metadata.segment_seconds),
            "sample_rate": float(model.metadata.sample_rate),
            "training_segments": int(model.metadata.training_segments),
            "seed": int(model.metadata.seed),
        },
    }


def model_from_dict(payload: dict) -> NoveltyModel:
    meta = payload["metadata"]
    return NoveltyModel(
        normalizer=Normalizer(
            mins=np.asarray(payload["normalizer"]["mins"], dtype=float),
            maxs=np.asarray(payload["normalizer"]["maxs"], dtype=float),
        ),
        pca=decomposition.PcaModel(
            means=np.asarray(payload["pca"]["means"], dtype=float),
            loadings=_unmatrix(payload["pca"]["loadings"]),
            explained_variance_ratio=np.asarray(
                payload["pca"]["explained_variance_ratio"], dtype=float
            ),
        ),
        ica=decomposition.IcaModel(
            whitening=_unmatrix(payload["ica"]["whitening"]),
            W=_unmatrix(payload["ica"]["W"]),
            component_order=tuple(int(i) for i in payload["ica"]["component_order"]),
            converged=tuple(bool(c) for c in payload["ica"]["converged"]),
        ),
        marginals=tuple(_kdme_from_dict(d) for d in payload["marginals"]),
        threshold=float(payload["threshold"]),
        metadata=ModelMetadata(
            q=int(meta["q"]),
            eta_values=np.asarray(meta["eta_values"], dtype=float),
            segment_seconds=float(meta["segment_seconds"]),
            sample_rate=float(meta["sample_rate"]),
            training_segments=int(meta["training_segments"]),
            seed=int(meta["seed"]),
        ),
    )


def save_model(path: str, model: NoveltyModel, config_sha256: str = "") -> None:
    payload = model_to_dict(model)
    payload_text = canonical_json(payload)
    digest = hashlib.sha256(payload_text.encode("utf-8")).hexdigest()
    doc = {
        "format_version": FORMAT_VERSION,
        "config_sha256": config_sha256,
        "payload": payload,
        "sha256": digest,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(doc))
        fh.write("\n")


def load_model(path: str) -> NoveltyModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatVersionError(f"{path}: not a valid model document: {exc}")
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise FormatVersionError(f"{path}: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path}: format_version {doc['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    payload = doc.get("payload")
    digest = hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
    if digest != doc.get("sha256"):
        raise FormatVersionError(f"{path}: payload checksum mismatch")
    return model_from_dict(payload)


def fmt(value) -> str:
    """CSV cell formatting: repr for floats (lossless), str otherwise,
    empty string for None (absent metric)."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def write_csv(path: str, header: list[str], rows, comments: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for comment in comments or []:
            fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_detection_csvs(
    out_dir: str, report: DetectionReport, comments: list[str] | None = None
) -> None:
    """segment_densities.csv, verdicts.csv, and metrics.csv when available."""
    seg_rows = []
    for v in report.verdicts:
        for i, (d, flag) in enumerate(zip(v.segment_densities, v.segment_novel)):
            seg_rows.append((v.case_id, i, float(d), bool(flag)))
    write_csv(
        f"{out_dir}/segment_densities.csv",
        ["case_id", "segment_index", "density", "is_novel"],
        seg_rows,
        comments,
    )
    verdict_rows = []
    for v in report.verdicts:
        verdict_rows.append(
            (
                v.case_id,
                float(v.median_density),
                "damaged" if v.damaged else "undamaged",
                "" if v.label is None else ("damaged" if v.label else "undamaged"),
            )
        )
    write_csv(
        f"{out_dir}/verdicts.csv",
        ["case_id", "median_density", "verdict", "label"],
        verdict_rows,
        comments,
    )
    if report.metrics is not None:
        write_metrics_csv(f"{out_dir}/metrics.csv", report, comments)


def write_metrics_csv(path: str, report: DetectionReport, comments: list[str] | None = None) -> None:
    m: Metrics = report.metrics
    rows = [
        ("tn", report.tn),
        ("tp", report.tp),
        ("fn", report.fn),
        ("fp", report.fp),
        ("accuracy", m.accuracy),
        ("recall", m.recall),
        ("precision", m.precision),
        ("f1", m.f1),
    ]
    write_csv(path, ["metric", "value"], rows, comments)


def _svg_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_scatter_svg(
    path: str,
    verdicts: tuple[SimulationVerdict, ...],
    threshold: float,
    comments: list[str] | None = None,
) -> None:
    """Median joint density per simulation on a log axis, threshold line,
    fill color by verdict, outline by ground-truth label when present.

    Hand-rolled SVG so the bytes depend only on the data.
    """
    width, height = 860.0, 520.0
    ml, mr, mt, mb = 70.0, 30.0, 40.0, 55.0
    pw, ph = width - ml - mr, height - mt - mb
    densities = np.array([v.median_density for v in verdicts], dtype=float)
    positive = densities[densities > 0]
    floor = (positive.min() if positive.size else threshold) / 100.0
    floor = min(floor, threshold / 100.0)
    logs = np.log10(np.maximum(densities, floor))
    log_thr = np.log10(threshold)
    lo = min(float(logs.min()), log_thr) - 0.5
    hi = max(float(logs.max()), log_thr) + 0.5
    n = len(verdicts)

    def x_px(i: int) -> float:
        if n == 1:
            return ml + pw / 2.0
        return ml + pw * i / (n - 1)

    def y_px(value: float) -> float:
        return mt + ph * (hi - value) / (hi - lo)

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">'
    )
    for comment in comments or []:
        parts.append(f"<!-- {_svg_escape(comment)} -->")
    parts.append(f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>')
    parts.append(
        f'<text x="{ml:.1f}" y="{mt - 14:.1f}" font-family="sans-serif" '
        f'font-size="15" fill="#222222">Median joint density per simulation</text>'
    )
    # Axes.
    parts.append(
        f'<line x1="{ml:.1f}" y1="{mt:.1f}" x2="{ml:.1f}" y2="{mt + ph:.1f}" '
        f'stroke="#222222" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{ml:.1f}" y1="{mt + ph:.1f}" x2="{ml + pw:.1f}" '
        f'y2="{mt + ph:.1f}" stroke="#222222" stroke-width="1"/>'
    )
    for k in range(int(np.ceil(lo)), int(np.floor(hi)) + 1):
        y = y_px(k)
        parts.append(
            f'<line x1="{ml - 4:.1f}" y1="{y:.1f}" x2="{ml:.1f}" y2="{y:.1f}" '
            f'stroke="#222222" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{ml - 8:.1f}" y="{y + 4:.1f}" font-family="sans-serif" '
            f'font-size="11" fill="#222222" text-anchor="end">1e{k}</text>'
        )
    step = max(1, n // 10)
    for i in range(0, n, step):
        x = x_px(i)
        parts.append(
            f'<line x1="{x:.1f}" y1="{mt + ph:.1f}" x2="{x:.1f}" '
            f'y2="{mt + ph + 4:.1f}" stroke="#222222" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{mt + ph + 18:.1f}" font-family="sans-serif" '
            f'font-size="11" fill="#222222" text-anchor="middle">{i}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 14:.1f}" font-family="sans-serif" '
        f'font-size="12" fill="#222222" text-anchor="middle">simulation index</text>'
    )
    y_thr = y_px(log_thr)
    parts.append(
        f'<line x1="{ml:.1f}" y1="{y_thr:.1f}" x2="{ml + pw:.1f}" y2="{y_thr:.1f}" '
        f'stroke="#555555" stroke-width="1" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{ml + pw:.1f}" y="{y_thr - 5:.1f}" font-family="sans-serif" '
        f'font-size="11" fill="#555555" text-anchor="end">threshold</text>'
    )
    for i, v in enumerate(verdicts):
        fill = "#c0392b" if v.damaged else "#2471a3"
        stroke = "none"
        if v.label is not None:
            stroke = "#1e8449" if v.label == v.damaged else "#f39c12"
        parts.append(
            f'<circle cx="{x_px(i):.1f}" cy="{y_px(float(logs[i])):.1f}" r="4" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="1.5"/>'
        )
    legend_y = mt + 8
    parts.append(
        f'<circle cx="{ml + pw - 150:.1f}" cy="{legend_y:.1f}" r="4" fill="#c0392b"/>'
        f'<text x="{ml + pw - 140:.1f}" y="{legend_y + 4:.1f}" font-family="sans-serif" '
        f'font-size="11" fill="#222222">verdict damaged</text>'
    )
    parts.append(
        f'<circle cx="{ml + pw - 150:.1f}" cy="{legend_y + 16:.1f}" r="4" fill="#2471a3"/>'
        f'<text x="{ml + pw - 140:.1f}" y="{legend_y + 20:.1f}" font-family="sans-serif" '
        f'font-size="11" fill="#222222">verdict undamaged</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
