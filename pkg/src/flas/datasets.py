"""CSV and plain-text persistence for training sets, models and event logs."""

from __future__ import annotations

import csv
import math
import os
from typing import List, NamedTuple

from .evaluation import TrainingSets
from .forecasting.regression import LinearModel
from .forecasting.trend import TrendModel
from .metrics import CLEAN_FIELDS, CleanSample
from .pipeline import ScalerModels

TRAINING_FILES = ("scaling_times.csv", "rt_series.csv", "perf_rows.csv")
MODEL_FILES = ("scaling_time.model", "trend.model", "perf_rt.model", "perf_x.model")
_SAMPLE_COLS = tuple(c for c in CLEAN_FIELDS if c != "t")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _sample_values(s: CleanSample) -> list:
    return [int(s.outlier_flag) if c == "outlier_flag" else repr(float(getattr(s, c)))
            for c in _SAMPLE_COLS]


def _sample_from(t: int, d: dict) -> CleanSample:
    kw = {c: float(d[c]) for c in _SAMPLE_COLS if c != "outlier_flag"}
    return CleanSample(t=t, outlier_flag=d["outlier_flag"] == "1", **kw)


def write_training_sets(out_dir, sets: TrainingSets) -> List[str]:
    """Write the three training CSVs; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, f) for f in TRAINING_FILES]
    with open(paths[0], "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(("notif_rate", "stored_subs", "t_sa"))
        for n, s, t in sets.scaling_times:
            w.writerow((repr(float(n)), repr(float(s)), repr(float(t))))
    with open(paths[1], "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        with_samples = len(sets.rt_samples) == len(sets.rt_series) and sets.rt_samples
        w.writerow(("t", "rt_s") + (_SAMPLE_COLS if with_samples else ()))
        for i, (t, rt) in enumerate(sets.rt_series):
            extra = _sample_values(sets.rt_samples[i]) if with_samples else []
            w.writerow([int(t), repr(float(rt))] + extra)
    with open(paths[2], "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(("t",) + _SAMPLE_COLS + ("rt_s", "throughput"))
        for sample, rt, x in sets.perf_rows:
            w.writerow([sample.t] + _sample_values(sample) + [repr(float(rt)), repr(float(x))])
    return paths


def read_training_sets(data_dir) -> TrainingSets:
    paths = [os.path.join(data_dir, f) for f in TRAINING_FILES]
    with open(paths[0], newline="", encoding="utf-8") as fh:
        scaling = [(float(d["notif_rate"]), float(d["stored_subs"]), float(d["t_sa"]))
                   for d in csv.DictReader(fh)]
    series, samples = [], []
    with open(paths[1], newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        with_samples = "cpu_user" in (reader.fieldnames or ())
        for d in reader:
            t = int(d["t"])
            series.append((t, float(d["rt_s"])))
            if with_samples:
                samples.append(_sample_from(t, d))
    with open(paths[2], newline="", encoding="utf-8") as fh:
        perf = [(_sample_from(int(d["t"]), d), float(d["rt_s"]), float(d["throughput"]))
                for d in csv.DictReader(fh)]
    return TrainingSets(scaling, series, perf, [], samples)


def write_models(out_dir, models: ScalerModels) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    texts = (models.scaling_time.to_text(), models.trend.to_text(),
             models.rt_model.to_text(), models.x_model.to_text())
    paths = []
    for name, text in zip(MODEL_FILES, texts):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def read_models(model_dir) -> ScalerModels:
    texts = []
    for name in MODEL_FILES:
        with open(os.path.join(model_dir, name), encoding="utf-8") as fh:
            texts.append(fh.read())
    trend = TrendModel.from_text(texts[1])
    return ScalerModels(LinearModel.from_text(texts[0]), trend, LinearModel.from_text(texts[2]),
                        LinearModel.from_text(texts[3]), trend.dt)


class EventRow(NamedTuple):
    """Just the event fields the scaling-time report needs."""
    kind: str
    trigger: str
    tp: int
    rp: int
    t_actual: float
    t_predicted: float


def read_events_csv(path) -> List[EventRow]:
    def num(s):
        return math.nan if s == "NA" else float(s)

    with open(path, newline="", encoding="utf-8") as fh:
        return [EventRow(d["kind"], d["trigger"], int(d["tp"]), int(d["rp"]),
                         num(d["t_actual"]), num(d["t_predicted"]))
                for d in csv.DictReader(fh)]
