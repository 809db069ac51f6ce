"""Recorded detector and incident data into daily trajectories, plus CSV I/O.

Input files (UTF-8, comma separated, ``YYYY-MM-DD`` dates, ``HH:MM`` times):

* detectors: ``date,time,detector_id,flow``
* incidents: ``date,time,link_id``
* link map:  ``link_id,detector_id`` (one row per detector)

Each calendar day inside the daily window becomes one trajectory.  Bins are
left-closed and right-open and start at the window start, so an incident at
exactly the window end is outside.  Bin ``k`` (0-based) gives the state
``X_k`` (mean flow over the link's detectors) and the flag ``A_{k+1}``; the
last bin has no successor state in the window, so ``H = n_bins - 1`` and
incidents in that bin are not represented.  Incident timestamps are taken as
occurrence times.

Trajectory CSV: header ``traj_id,t,x_1,...,x_n,event``, one row per step
``t = 0..H``; ``event`` is empty at ``t = 0`` and holds ``A_t`` afterwards.
Floats are written with ``repr`` so a write/read cycle is lossless.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import NoEventError, TrajectoryDataset

log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """Malformed input file; the message names the offending line."""


class MissingBinError(ValueError):
    """A time bin has no reporting detector."""


@dataclass(frozen=True)
class DetectorRecord:
    timestamp: dt.datetime
    detector_id: str
    flow: float

    def __post_init__(self):
        if not (math.isfinite(self.flow) and self.flow >= 0):
            raise ValueError(f"flow must be finite and nonnegative, got {self.flow}")


@dataclass(frozen=True)
class IncidentRecord:
    timestamp: dt.datetime
    link_id: str


def parse_window(text: str) -> tuple[int, int]:
    """``"06:00-14:00"`` to minutes after midnight."""
    try:
        start, end = text.split("-")
        return _minutes(start), _minutes(end)
    except ValueError:
        raise ValueError(f"window must look like HH:MM-HH:MM, got {text!r}") from None


def parse_bin(text) -> int:
    """``"5m"``, ``"5min"`` or ``5`` to a bin width in minutes."""
    s = str(text).strip().lower()
    for suffix in ("min", "m"):
        if s.endswith(suffix):
            s = s[: -len(suffix)]
            break
    width = int(s)
    if width < 1:
        raise ValueError("bin width must be positive")
    return width


def _minutes(hhmm: str) -> int:
    t = dt.datetime.strptime(hhmm.strip(), "%H:%M")
    return t.hour * 60 + t.minute


@dataclass(frozen=True)
class IngestConfig:
    window_start: int = 6 * 60
    window_end: int = 14 * 60
    bin_minutes: int = 5
    link_detectors: dict = field(default_factory=dict)
    drop_no_event: bool = True
    missing: str = "drop"

    def __post_init__(self):
        length = self.window_end - self.window_start
        if length <= 0:
            raise ValueError("window end must follow window start")
        if length % self.bin_minutes:
            raise ValueError("window length must be divisible by the bin width")
        if length // self.bin_minutes < 2:
            raise ValueError("window must span at least two bins")
        if self.missing not in ("drop", "interpolate"):
            raise ValueError("missing must be 'drop' or 'interpolate'")

    @property
    def n_bins(self) -> int:
        return (self.window_end - self.window_start) // self.bin_minutes

    def bin_of(self, ts: dt.datetime) -> Optional[int]:
        m = ts.hour * 60 + ts.minute
        if not self.window_start <= m < self.window_end:
            return None
        return (m - self.window_start) // self.bin_minutes


# -- raw files ---------------------------------------------------------------

def _read_rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first] != header:
            raise DataFormatError(f"{path}: line 1: expected header {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            yield reader.line_num, [c.strip() for c in row]


def _timestamp(path, line, date, time):
    try:
        return dt.datetime.strptime(f"{date} {time}", "%Y-%m-%d %H:%M")
    except ValueError:
        raise DataFormatError(f"{path}: line {line}: bad timestamp {date!r} {time!r}") from None


def read_detector_csv(path) -> list[DetectorRecord]:
    out = []
    for line, (date, time, det, flow) in _read_rows(path, ["date", "time", "detector_id", "flow"]):
        ts = _timestamp(path, line, date, time)
        try:
            out.append(DetectorRecord(ts, det, float(flow)))
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {line}: {exc}") from None
    return out


def read_incident_csv(path) -> list[IncidentRecord]:
    return [
        IncidentRecord(_timestamp(path, line, date, time), link)
        for line, (date, time, link) in _read_rows(path, ["date", "time", "link_id"])
    ]


def read_link_map(path) -> dict[str, frozenset]:
    mapping = defaultdict(set)
    for _, (link, det) in _read_rows(path, ["link_id", "detector_id"]):
        mapping[link].add(det)
    return {k: frozenset(v) for k, v in mapping.items()}


def write_detector_csv(records: Iterable[DetectorRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "time", "detector_id", "flow"])
        for r in records:
            w.writerow([r.timestamp.strftime("%Y-%m-%d"), r.timestamp.strftime("%H:%M"),
                        r.detector_id, repr(float(r.flow))])


def write_incident_csv(records: Iterable[IncidentRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "time", "link_id"])
        for r in records:
            w.writerow([r.timestamp.strftime("%Y-%m-%d"), r.timestamp.strftime("%H:%M"), r.link_id])


def write_link_map(mapping: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["link_id", "detector_id"])
        for link in sorted(mapping):
            for det in sorted(mapping[link]):
                w.writerow([link, det])


# -- assembly ----------------------------------------------------------------

def _resolve_link(cfg: IngestConfig, link_id):
    if link_id is None:
        if len(cfg.link_detectors) != 1:
            raise ValueError("link_id is required when the config maps several links")
        link_id = next(iter(cfg.link_detectors))
    if link_id not in cfg.link_detectors:
        raise ValueError(f"link {link_id!r} has no configured detectors")
    return link_id, cfg.link_detectors[link_id]


def _bin_means(records, cfg: IngestConfig, link_id):
    """Per-bin detector-mean flows and the number of reporting detectors."""
    records = list(records)
    allowed = None
    if cfg.link_detectors:
        link_id, allowed = _resolve_link(cfg, link_id)
    dates = {r.timestamp.date() for r in records}
    if len(dates) > 1:
        raise ValueError("records span several dates; aggregate one day at a time")
    per_det = defaultdict(list)
    for r in records:
        if allowed is not None and r.detector_id not in allowed:
            raise ValueError(f"detector {r.detector_id!r} is not mapped to link {link_id!r}")
        k = cfg.bin_of(r.timestamp)
        if k is not None:
            per_det[(k, r.detector_id)].append(r.flow)
    sums = np.zeros(cfg.n_bins)
    counts = np.zeros(cfg.n_bins, dtype=np.int64)
    for (k, _), flows in sorted(per_det.items()):
        sums[k] += math.fsum(flows) / len(flows)
        counts[k] += 1
    means = np.divide(sums, counts, out=np.full(cfg.n_bins, np.nan), where=counts > 0)
    return means, counts


def aggregate_detectors(records: Iterable[DetectorRecord], cfg: IngestConfig,
                        link_id: Optional[str] = None) -> np.ndarray:
    """Mean flow per bin over the link's reporting detectors for a single day.

    A detector with several records in one bin contributes their mean.
    Returns an array of shape (n_bins, 1).  Records outside the window are
    ignored.  Raises :class:`MissingBinError` if some bin has no reports.
    """
    means, counts = _bin_means(records, cfg, link_id)
    if not counts.all():
        first = int(np.flatnonzero(counts == 0)[0])
        raise MissingBinError(f"missing bin {first}: no reporting detectors")
    return means[:, None]


def _interpolate_day(records, cfg, link_id):
    """Like :func:`aggregate_detectors` but fills empty bins linearly."""
    means, counts = _bin_means(records, cfg, link_id)
    have = np.flatnonzero(counts)
    if have.size == 0:
        raise MissingBinError("no reporting detectors in window")
    return np.interp(np.arange(cfg.n_bins), have, means[have])[:, None]


def build_daily_trajectories(detectors: Iterable[DetectorRecord],
                             incidents: Iterable[IncidentRecord],
                             cfg: IngestConfig,
                             link_id: Optional[str] = None) -> TrajectoryDataset:
    """One trajectory per calendar day for ``link_id``.

    ``A_t = 1`` iff at least one incident on the link falls in bin ``t - 1``.
    Days with a missing bin are dropped (or filled, with ``missing="interpolate"``);
    with ``drop_no_event`` days without any represented incident are dropped.
    """
    link_id, allowed = _resolve_link(cfg, link_id)
    by_day = defaultdict(list)
    for r in detectors:
        if r.detector_id in allowed:
            by_day[r.timestamp.date()].append(r)
    flags = defaultdict(lambda: np.zeros(cfg.n_bins - 1, dtype=np.int8))
    for inc in incidents:
        if inc.link_id != link_id:
            continue
        k = cfg.bin_of(inc.timestamp)
        if k is not None and k < cfg.n_bins - 1:
            flags[inc.timestamp.date()][k] = 1

    states, events, ids = [], [], []
    for day in sorted(by_day):
        try:
            if cfg.missing == "interpolate":
                x = _interpolate_day(by_day[day], cfg, link_id)
            else:
                x = aggregate_detectors(by_day[day], cfg, link_id)
        except MissingBinError as exc:
            log.info("dropping %s on %s: %s", day, link_id, exc)
            continue
        a = flags[day] if day in flags else np.zeros(cfg.n_bins - 1, dtype=np.int8)
        if cfg.drop_no_event and not a.any():
            continue
        states.append(x)
        events.append(a)
        ids.append(day.isoformat())
    if not states:
        raise NoEventError(f"no trajectories remain for link {link_id!r}")
    return TrajectoryDataset(np.stack(states), np.stack(events), ids=ids)


# -- trajectory CSV ----------------------------------------------------------

def write_trajectory_csv(ds: TrajectoryDataset, path) -> None:
    n = ds.dimension
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["traj_id", "t"] + [f"x_{d + 1}" for d in range(n)] + ["event"])
        for i, tid in enumerate(ds.ids):
            h = int(ds.horizons[i])
            xs = ds.states[i].tolist()
            ev = ds.events[i].tolist()
            for t in range(h + 1):
                w.writerow([tid, t] + [repr(v) for v in xs[t]] + ["" if t == 0 else ev[t - 1]])


def read_trajectory_csv(path) -> TrajectoryDataset:
    """Parse a trajectory CSV; errors name the offending line."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (header is None or len(header) < 4 or header[:2] != ["traj_id", "t"]
                or header[-1] != "event"
                or header[2:-1] != [f"x_{d + 1}" for d in range(len(header) - 3)]):
            raise DataFormatError(f"{path}: line 1: expected header traj_id,t,x_1,...,x_n,event")
        n = len(header) - 3
        ids, trajs = [], []
        cur_id, cur_x, cur_a = None, [], []
        seen = set()

        def close():
            if cur_id is not None:
                if len(cur_x) < 2:
                    raise DataFormatError(f"{path}: trajectory {cur_id!r} has no events")
                trajs.append((np.array(cur_x), np.array(cur_a, dtype=np.int8)))

        for row in reader:
            line = reader.line_num
            if len(row) != n + 3:
                raise DataFormatError(f"{path}: line {line}: expected {n + 3} fields, got {len(row)}")
            tid, t_raw, *xs, ev = row
            try:
                t = int(t_raw)
                x = [float(v) for v in xs]
            except ValueError:
                raise DataFormatError(f"{path}: line {line}: non-numeric value") from None
            if not all(math.isfinite(v) for v in x):
                raise DataFormatError(f"{path}: line {line}: non-finite state value")
            if tid != cur_id:
                if t != 0:
                    raise DataFormatError(f"{path}: line {line}: trajectory {tid!r} must start at t=0")
                if tid in seen:
                    raise DataFormatError(f"{path}: line {line}: trajectory {tid!r} is not contiguous")
                close()
                seen.add(tid)
                ids.append(tid)
                cur_id, cur_x, cur_a = tid, [], []
            elif t != len(cur_x):
                raise DataFormatError(f"{path}: line {line}: expected t={len(cur_x)}, got {t}")
            if t == 0:
                if ev != "":
                    raise DataFormatError(f"{path}: line {line}: event must be empty at t=0")
            else:
                if ev not in ("0", "1"):
                    raise DataFormatError(f"{path}: line {line}: event must be 0 or 1 for t>=1")
                cur_a.append(int(ev))
            cur_x.append(x)
        close()
    if not trajs:
        raise DataFormatError(f"{path}: no trajectories")
    h_max = max(a.size for _, a in trajs)
    states = np.zeros((len(trajs), h_max + 1, n))
    events = np.zeros((len(trajs), h_max), dtype=np.int8)
    horizons = []
    for i, (x, a) in enumerate(trajs):
        states[i, : a.size + 1] = x
        events[i, : a.size] = a
        horizons.append(a.size)
    return TrajectoryDataset(states, events, horizons, ids=ids)


# -- fixture generator -------------------------------------------------------

def make_fixture(directory, days: int = 30, seed: int = 0, detectors_per_link: int = 3,
                 links=("BRIDGE-E", "BRIDGE-W"), start_date: str = "2022-01-03",
                 cfg: Optional[IngestConfig] = None) -> dict:
    """Write synthetic detector, incident and link-map CSVs in the raw schema.

    Flows are noisy around a daily profile.  On the first link incidents are
    likelier when the link is busy; on the others they ignore the flow.  One
    day of the first link has a detector outage in one bin so the missing-bin
    policy gets exercised.  Returns the written paths.
    """
    cfg = cfg or IngestConfig()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    day0 = dt.date.fromisoformat(start_date)
    mapping = {link: [f"{link}-D{j + 1}" for j in range(detectors_per_link)] for link in links}
    dets, incs = [], []
    n_bins = cfg.n_bins
    profile = 100 + 15 * np.sin(np.linspace(0, 2 * np.pi, n_bins))
    for d in range(days):
        day = day0 + dt.timedelta(days=d)
        for li, link in enumerate(links):
            level = profile + rng.normal(0, 6, n_bins)
            for det in mapping[link]:
                flow = np.clip(np.round(level + rng.normal(0, 3, n_bins), 1), 0, None)
                for k in range(n_bins):
                    if li == 0 and d == 1 and k == 7:
                        continue
                    minute = cfg.window_start + k * cfg.bin_minutes
                    ts = dt.datetime.combine(day, dt.time(minute // 60, minute % 60))
                    dets.append(DetectorRecord(ts, det, float(flow[k])))
            hazard = np.where(level >= 108, 0.05, 0.004) if li == 0 else np.full(n_bins, 0.01)
            for k in np.flatnonzero(rng.random(n_bins) < hazard):
                minute = cfg.window_start + int(k) * cfg.bin_minutes + int(rng.integers(cfg.bin_minutes))
                incs.append(IncidentRecord(
                    dt.datetime.combine(day, dt.time(minute // 60, minute % 60)), link))
    paths = {
        "detectors": directory / "detectors.csv",
        "incidents": directory / "incidents.csv",
        "links": directory / "links.csv",
    }
    write_detector_csv(dets, paths["detectors"])
    write_incident_csv(incs, paths["incidents"])
    write_link_map(mapping, paths["links"])
    return paths


if __name__ == "__main__":  # pragma: no cover
    import argparse

    ap = argparse.ArgumentParser(description="Write a synthetic detector/incident fixture")
    ap.add_argument("directory")
    ap.add_argument("--days", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, p in make_fixture(args.directory, args.days, args.seed).items():
        print(f"{name}={p}")
