"""Request latency benchmark: sequential wall-clock timing with percentile
summary, CSV rows and a plain-text table."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

MIN_SAMPLES = 30
FAILURE_ABORT_RATIO = 0.05


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class BenchReport:
    method: str
    samples: int
    min_ms: float
    median_ms: float
    p95_ms: float
    max_ms: float
    failures: int
    durations_ms: tuple[float, ...]

    def table(self) -> str:
        header = f"{'method':<8}{'samples':>8}{'min':>10}{'median':>10}{'p95':>10}{'max':>10}{'failures':>10}"
        row = (
            f"{self.method:<8}{self.samples:>8}"
            f"{self.min_ms:>10.2f}{self.median_ms:>10.2f}"
            f"{self.p95_ms:>10.2f}{self.max_ms:>10.2f}{self.failures:>10}"
        )
        return header + "\n" + row + "\n(all durations in milliseconds)"


def percentile(durations: Sequence[float], fraction: float) -> float:
    """Nearest-rank percentile over a non-empty sample."""
    if not durations:
        raise ValueError("no samples")
    ordered = sorted(durations)
    rank = max(1, math.ceil(fraction * len(ordered)))
    return ordered[rank - 1]


def summarize(method: str, durations: Sequence[float], failures: int = 0) -> BenchReport:
    if not durations:
        raise BenchError("no successful samples to summarize")
    return BenchReport(
        method=method,
        samples=len(durations),
        min_ms=min(durations),
        median_ms=float(statistics.median(durations)),
        p95_ms=percentile(durations, 0.95),
        max_ms=max(durations),
        failures=failures,
        durations_ms=tuple(durations),
    )


Requester = Callable[[str, str, Optional[dict]], int]


def _default_requester(session: requests.Session) -> Requester:
    def issue(method: str, url: str, body: Optional[dict]) -> int:
        response = session.request(method, url, json=body, timeout=30)
        return response.status_code

    return issue


def bench(
    method: str,
    n: int,
    url: str,
    requester: Requester | None = None,
) -> BenchReport:
    """Issue n sequential requests and time each one.

    GET hits the url as-is; POST sends {"data": <sample index>} so every
    request is a fresh reading. Failed requests (non-2xx or transport
    errors) are excluded from the stats and counted; more than 5% of them
    aborts the run.
    """
    if method not in ("GET", "POST"):
        raise ValueError("method must be GET or POST")
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    session: Optional[requests.Session] = None
    if requester is None:
        session = requests.Session()
        requester = _default_requester(session)
    durations: list[float] = []
    failures = 0
    try:
        for i in range(n):
            body = {"data": i} if method == "POST" else None
            started = time.perf_counter()
            try:
                status = requester(method, url, body)
                ok = 200 <= status < 300
            except requests.RequestException:
                ok = False
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            if ok:
                durations.append(elapsed_ms)
            else:
                failures += 1
                if failures > FAILURE_ABORT_RATIO * n:
                    raise BenchError(
                        f"aborted after {failures} failures in {i + 1} requests"
                    )
    finally:
        if session is not None:
            session.close()
    return summarize(method, durations, failures)


def write_csv(report: BenchReport, path: "str | Path") -> None:
    lines = ["method,sample_idx,duration_ms"]
    lines.extend(
        f"{report.method},{idx},{duration:.3f}"
        for idx, duration in enumerate(report.durations_ms)
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
