"""Cash-flow series: ingestion, statistics, splitting, sampling and synthesis."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from typing import IO

import numpy as np


class SeriesError(ValueError):
    """Invalid series data or an operation that would produce an empty series."""


@dataclass(frozen=True)
class CashFlowSeries:
    """Ordered daily net cash flows, optionally labelled with ISO dates."""

    flows: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        flows = tuple(float(f) for f in self.flows)
        if not flows:
            raise SeriesError("a cash-flow series needs at least one flow")
        for i, f in enumerate(flows):
            if not math.isfinite(f):
                raise SeriesError(f"flow {i} is not finite: {f!r}")
        object.__setattr__(self, "flows", flows)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(flows):
                raise SeriesError(
                    f"{len(labels)} labels for {len(flows)} flows")
            days = [_parse_date(s) for s in labels]
            for i in range(1, len(days)):
                if days[i] <= days[i - 1]:
                    raise SeriesError(
                        f"dates must be strictly increasing: {labels[i - 1]} then {labels[i]}")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.flows)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.flows, dtype=np.float64)

    def scaled(self, c: float) -> "CashFlowSeries":
        return CashFlowSeries(tuple(c * f for f in self.flows), self.labels)


@dataclass(frozen=True)
class SeriesStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/test split; train gets the first ``floor(ratio*N)`` flows."""

    ratio: float

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise SeriesError(f"split ratio must lie in (0, 1), got {self.ratio}")

    def sizes(self, n: int) -> tuple[int, int]:
        n_train = math.floor(self.ratio * n)
        if n_train < 1:
            raise SeriesError(f"ratio {self.ratio} leaves an empty training part for N={n}")
        if n - n_train < 1:
            raise SeriesError(f"ratio {self.ratio} leaves an empty test part for N={n}")
        return n_train, n - n_train


def _parse_date(s: str) -> date:
    try:
        return date.fromisoformat(s.strip())
    except ValueError as exc:
        raise SeriesError(f"not an ISO-8601 date: {s!r}") from exc


def parse_csv(stream: IO[str] | IO[bytes] | str) -> CashFlowSeries:
    """Read a ``flow`` or ``date,flow`` CSV into a series.

    ``stream`` may be a text or binary file object, or the CSV text itself.
    Blank lines are skipped; errors name the offending line.
    """
    if isinstance(stream, str):
        text = stream
    else:
        raw = stream.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    if text.startswith("﻿"):
        text = text[1:]
    rows = [(lineno, row) for lineno, row in
            enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(cell.strip() for cell in row)]
    if not rows:
        raise SeriesError("empty CSV file")
    header_line, header = rows[0]
    header = [h.strip().lower() for h in header]
    if header == ["flow"]:
        has_date = False
    elif header == ["date", "flow"]:
        has_date = True
    else:
        raise SeriesError(
            f"line {header_line}: header must be 'flow' or 'date,flow', got {','.join(header)!r}")
    if len(rows) == 1:
        raise SeriesError("CSV file has a header but no data rows")

    flows: list[float] = []
    labels: list[str] = []
    prev = None
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise SeriesError(
                f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        cell = row[-1].strip()
        try:
            value = float(cell)
        except ValueError:
            raise SeriesError(f"line {lineno}: non-numeric flow {cell!r}") from None
        if not math.isfinite(value):
            raise SeriesError(f"line {lineno}: flow is not finite")
        if has_date:
            label = row[0].strip()
            try:
                day = date.fromisoformat(label)
            except ValueError:
                raise SeriesError(f"line {lineno}: bad date {label!r}") from None
            if prev is not None and day <= prev:
                raise SeriesError(
                    f"line {lineno}: date {label} is duplicate or not increasing")
            prev = day
            labels.append(label)
        flows.append(value)
    return CashFlowSeries(tuple(flows), tuple(labels) if has_date else None)


def write_csv(series: CashFlowSeries, stream: IO[str]) -> None:
    """Write ``series`` in the format ``parse_csv`` reads (``repr`` floats round-trip)."""
    if series.labels is not None:
        stream.write("date,flow\n")
        for label, f in zip(series.labels, series.flows):
            stream.write(f"{label},{f!r}\n")
    else:
        stream.write("flow\n")
        for f in series.flows:
            stream.write(f"{f!r}\n")


def stats(series: CashFlowSeries) -> SeriesStats:
    """Mean and sample standard deviation (divisor N-1)."""
    n = len(series)
    if n < 2:
        raise SeriesError("standard deviation needs at least two flows")
    a = series.to_array()
    return SeriesStats(mean=float(a.mean()), std=float(a.std(ddof=1)), count=n)


def split(series: CashFlowSeries, spec: SplitSpec | float
          ) -> tuple[CashFlowSeries, CashFlowSeries]:
    if not isinstance(spec, SplitSpec):
        spec = SplitSpec(float(spec))
    n_train, _ = spec.sizes(len(series))
    labels = series.labels
    train = CashFlowSeries(series.flows[:n_train],
                           labels[:n_train] if labels else None)
    test = CashFlowSeries(series.flows[n_train:],
                          labels[n_train:] if labels else None)
    return train, test


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_subsequence(series: CashFlowSeries, n: int, rng) -> CashFlowSeries:
    """Pick ``n`` distinct positions uniformly, without replacement, keeping time order.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    N = len(series)
    if n < 1:
        raise SeriesError("sample size must be at least 1")
    if n > N:
        raise SeriesError(f"cannot sample {n} flows from a series of length {N}")
    gen = _as_generator(rng)
    idx = np.sort(gen.choice(N, size=n, replace=False))
    labels = series.labels
    return CashFlowSeries(tuple(series.flows[i] for i in idx),
                          tuple(labels[i] for i in idx) if labels else None)


def gen_random_walk(sigma: float, mu: float, n: int, seed: int) -> CashFlowSeries:
    """i.i.d. Gaussian increments N(mu, sigma^2) from numpy's PCG64 generator."""
    if n < 1:
        raise SeriesError("length must be at least 1")
    if not sigma > 0:
        raise SeriesError(f"sigma must be positive, got {sigma}")
    gen = np.random.default_rng(seed)
    return CashFlowSeries(tuple(gen.normal(mu, sigma, size=n).tolist()))
