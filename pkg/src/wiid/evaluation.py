"""Thresholded multi-label decisions and true-positive-rate reports.

A report holds integer tallies per group key ``(target, num_interferers,
utilized)``. TP and FN count records where ``target`` is a true label; with
``mask_utilized`` a record's utilized class is dropped from its own tally,
since that signal is known to the managed system. FP counts are kept as a
companion to TPR, which an always-positive predictor would otherwise max out.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset
from .signals import NUM_CLASSES, Technology, technology_of

DEFAULT_THRESHOLD = 0.5
COMPARISON_THRESHOLDS = (0.3, 0.5, 0.7)

GRANULARITIES = ("utilized", "n", "class")


def apply_threshold(scores: Sequence[float], threshold: float = DEFAULT_THRESHOLD) -> frozenset[int]:
    s = np.asarray(scores)
    return frozenset(int(c) for c in np.flatnonzero(s > threshold))


def threshold_scores(scores: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return np.asarray(scores) > threshold


@dataclass
class Tally:
    tp: int = 0
    fn: int = 0
    fp: int = 0

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def empty(self) -> bool:
        return self.support == 0

    @property
    def tpr(self) -> float | None:
        return None if self.empty else self.tp / self.support

    def __iadd__(self, other: "Tally") -> "Tally":
        self.tp += other.tp
        self.fn += other.fn
        self.fp += other.fp
        return self


GroupKey = tuple  # (target, num_interferers | None, utilized | None)


def _sort_key(key: GroupKey):
    return tuple(-1 if k is None else k for k in key)


@dataclass
class TprReport:
    groups: dict[GroupKey, Tally]
    threshold: float | None = None
    mask_utilized: bool = True
    granularity: str = "utilized"
    summary: list[dict] = field(default_factory=list)

    def regroup(self, by: str) -> "TprReport":
        """Collapse to ``class`` (per target) or ``n`` (per target and N)."""
        if by not in GRANULARITIES:
            raise ValueError(f"group-by must be one of {GRANULARITIES}")
        if GRANULARITIES.index(by) < GRANULARITIES.index(self.granularity):
            raise ValueError(f"cannot refine a {self.granularity!r} report to {by!r}")
        out: dict[GroupKey, Tally] = {}
        if by == "class":
            out = {(c, None, None): Tally() for c in range(NUM_CLASSES)}
        for (c, n, u), t in self.groups.items():
            key = (c, None, None) if by == "class" else (c, n, None) if by == "n" else (c, n, u)
            out.setdefault(key, Tally())
            out[key] += t
        return TprReport(out, self.threshold, self.mask_utilized, by, list(self.summary))

    def class_tpr(self) -> dict[int, float | None]:
        return {c: t.tpr for (c, _, _), t in self.regroup("class").groups.items()}

    def mean_tpr(self) -> float | None:
        vals = [v for v in self.class_tpr().values() if v is not None]
        return float(np.mean(vals)) if vals else None

    def summary_row(self, utilized_tech, target_tech, n) -> dict | None:
        for row in self.summary:
            if (row["utilized_technology"], row["target_technology"], row["num_interferers"]) == \
                    (utilized_tech, target_tech, n):
                return row
        return None

    def sti_curve(self, technology: Technology | str) -> dict[int, dict]:
        """Summary rows where the interferers share the utilized signal's technology, by N."""
        tech = Technology(technology).value
        return {row["num_interferers"]: row for row in self.summary
                if row["utilized_technology"] == tech and row["target_technology"] == tech}

    def to_dict(self) -> dict:
        groups = []
        for key in sorted(self.groups, key=_sort_key):
            c, n, u = key
            t = self.groups[key]
            groups.append({"target": c, "num_interferers": n, "utilized": u,
                           "tp": t.tp, "fn": t.fn, "fp": t.fp, "tpr": t.tpr})
        return {"threshold": self.threshold, "mask_utilized": self.mask_utilized,
                "granularity": self.granularity, "groups": groups, "summary": self.summary}

    @classmethod
    def from_dict(cls, data: dict) -> "TprReport":
        groups = {(g["target"], g["num_interferers"], g["utilized"]): Tally(g["tp"], g["fn"], g["fp"])
                  for g in data["groups"]}
        return cls(groups, data["threshold"], data["mask_utilized"], data["granularity"],
                   data["summary"])

    def __eq__(self, other) -> bool:
        return isinstance(other, TprReport) and self.to_dict() == other.to_dict()


def _decision_matrix(decisions, n: int) -> np.ndarray:
    if isinstance(decisions, np.ndarray) and decisions.dtype == bool:
        mat = decisions
    else:
        decisions = list(decisions)
        if len(decisions) != n:
            raise ValueError(f"{len(decisions)} decisions for {n} truth records")
        mat = np.zeros((n, NUM_CLASSES), dtype=bool)
        for i, d in enumerate(decisions):
            for c in d:
                mat[i, c] = True
    if mat.shape != (n, NUM_CLASSES):
        raise ValueError(f"{mat.shape[0]} decisions for {n} truth records")
    return mat


def _summarize(groups: dict[GroupKey, Tally]) -> list[dict]:
    """Per (utilized technology, target technology, N): spread over utilized classes.

    Within one utilized class the target classes of a technology are pooled
    (support-weighted); the mean and 10/90 percentiles run over utilized classes.
    """
    pooled: dict[tuple, dict[int | None, Tally]] = {}
    for (c, n, u), t in groups.items():
        if t.empty:
            continue
        ut = None if u is None else technology_of(u).value
        key = (ut, technology_of(c).value, n)
        pooled.setdefault(key, {}).setdefault(u, Tally())
        pooled[key][u] += t
    rows = []
    for key in sorted(pooled, key=_sort_key):
        per_u = pooled[key]
        tprs = np.array([per_u[u].tpr for u in sorted(per_u, key=lambda v: -1 if v is None else v)])
        p10, p90 = np.percentile(tprs, [10, 90])
        rows.append({
            "utilized_technology": key[0], "target_technology": key[1], "num_interferers": key[2],
            "mean_tpr": float(tprs.mean()), "p10": float(p10), "p90": float(p90),
            "utilized_groups": len(tprs), "support": int(sum(t.support for t in per_u.values())),
        })
    return rows


def tpr_per_class(decisions, truths: Dataset, mask_utilized: bool = True,
                  threshold: float | None = None) -> TprReport:
    """Tally TP/FN/FP per (target, N, utilized) group.

    ``decisions`` is a boolean (n, 15) matrix or a sequence of label sets,
    aligned with ``truths``.
    """
    n = len(truths)
    pred = _decision_matrix(decisions, n)
    truth = truths.label_matrix()
    util = truths.utilized
    n_int = truths.num_interferers
    counted = np.ones_like(truth)
    if mask_utilized:
        rows = np.flatnonzero(util >= 0)
        counted[rows, util[rows]] = False
    tp = truth & pred & counted
    fn = truth & ~pred & counted
    fp = ~truth & pred & counted
    # flat group id = (target * 7 + N) * 16 + (utilized + 1)
    gid = (np.arange(NUM_CLASSES)[None, :] * 7 + n_int[:, None]) * 16 + (util[:, None] + 1)
    size = NUM_CLASSES * 7 * 16
    tps = np.bincount(gid[tp], minlength=size)
    fns = np.bincount(gid[fn], minlength=size)
    fps = np.bincount(gid[fp], minlength=size)
    groups = {}
    for g in np.flatnonzero(tps + fns + fps):
        u = int(g % 16) - 1
        cn = int(g // 16)
        key = (cn // 7, cn % 7, None if u < 0 else u)
        groups[key] = Tally(int(tps[g]), int(fns[g]), int(fps[g]))
    return TprReport(groups, threshold, mask_utilized, "utilized", _summarize(groups))


def tpr_by_interferer_count(decisions, truths: Dataset, threshold: float | None = None) -> list[dict]:
    """Mean and 10/90 percentile TPR per (utilized tech, interferer tech, N)."""
    return tpr_per_class(decisions, truths, True, threshold).summary


def evaluate(model, data: Dataset, threshold: float = DEFAULT_THRESHOLD,
             mask_utilized: bool = True) -> TprReport:
    scores = model.predict_batch(data.samples)
    return tpr_per_class(threshold_scores(scores, threshold), data, mask_utilized, threshold)


def single_label_comparison(model, single_val: Dataset,
                            thresholds: Iterable[float] = COMPARISON_THRESHOLDS) -> dict:
    """Mean (over classes) TPR per SNR point for each threshold."""
    masks = single_val.label_masks.astype(np.int64)
    if len(single_val) == 0:
        raise ValueError("empty single-label dataset")
    if np.any(masks & (masks - 1)):
        raise ValueError("single-label comparison needs single-label records")
    snr = single_val.snr_db
    if np.any(np.isnan(snr)):
        raise ValueError("records without SNR metadata")
    grid = np.unique(snr)
    if len(grid) < 2:
        raise ValueError("single-label comparison needs at least two SNR points")
    classes = np.log2(masks).astype(np.int64)
    scores = model.predict_batch(single_val.samples)
    hit_score = scores[np.arange(len(scores)), classes]
    curve = {"snr_db": [float(s) for s in grid], "tpr": {}}
    for thr in thresholds:
        hits = hit_score > thr
        vals = []
        for s in grid:
            at = snr == s
            per_class = [hits[at & (classes == c)].mean()
                         for c in range(NUM_CLASSES) if np.any(at & (classes == c))]
            vals.append(float(np.mean(per_class)))
        curve["tpr"][float(thr)] = vals
    return curve


def write_curve_csv(curve: dict, path: str | Path) -> None:
    thresholds = list(curve["tpr"])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["snr_db"] + [f"tpr@{t:g}" for t in thresholds])
        for i, s in enumerate(curve["snr_db"]):
            w.writerow([f"{s:g}"] + [repr(curve["tpr"][t][i]) for t in thresholds])


def emit_report(report: TprReport, fmt: str, path: str | Path) -> None:
    fmt = fmt.lower()
    if fmt == "json":
        Path(path).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    elif fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["target", "num_interferers", "utilized", "tp", "fn", "fp", "tpr"])
            for g in report.to_dict()["groups"]:
                w.writerow(["" if g[k] is None else g[k]
                            for k in ("target", "num_interferers", "utilized", "tp", "fn", "fp")]
                           + ["" if g["tpr"] is None else repr(g["tpr"])])
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_report(path: str | Path) -> TprReport:
    return TprReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def sti_mean(report: TprReport, technology: Technology | str) -> float:
    """Average over N of the same-technology mean TPR curve."""
    curve = report.sti_curve(technology)
    if not curve:
        return math.nan
    return float(np.mean([row["mean_tpr"] for row in curve.values()]))
