"""Measurement protocols over random instances.

Covers per-filter deleted-value percentages, constraint-check counts and
timings on tightness sweeps, and the two 50%-threshold tightness bounds per
(filter, density): the tightness where at least half the sampled instances
lose a value, and the tightness where at least half are proved inconsistent.

Instances are derived deterministically from (seed, grid index, sample
index), so every estimator and every filter sees the same instance at the
same grid point; together with the wipeout-implies-deletion fact this makes
the first bound never exceed the second on shared samples.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .filters import ConsistencyId, enforce
from .generator import GenSpec, derive_seed, generate_model_b


@dataclass
class BenchPoint:
    """Aggregates for one (filter, tightness) cell."""

    lc: ConsistencyId
    n: int
    d: int
    p1: float
    p2: float
    samples: int
    mean_deleted_pct: float
    wipeout_frac: float
    mean_checks: float
    mean_ms: float
    max_ms: float
    timeout_frac: float


@dataclass
class TightnessBound:
    """One estimated threshold tightness."""

    kind: str  # "t0" or "tall"
    lc: ConsistencyId
    p1: float
    tightness: float
    samples: int
    resolution: int


def measure(net, lc, deadline=None):
    """Run ``lc`` on a fresh full state; returns (FilterResult, deleted %)."""
    state = net.full_state()
    total = state.total_size()
    res = enforce(net, state, lc, deadline)
    pct = 100.0 * len(res.deleted) / total if total else 0.0
    return res, pct


def _probe_fraction(lc, n, d, p1, m, resolution, samples, seed, pred, deadline):
    hits = 0
    for ix in range(samples):
        spec = GenSpec(n, d, p1, m / resolution, derive_seed(seed, m, ix))
        net = generate_model_b(spec)
        res = enforce(net, net.full_state(), lc, deadline)
        if pred(res):
            hits += 1
    return hits / samples


def _estimate_bound(
    kind, pred, lc, n, d, p1, samples, resolution, seed, threshold, deadline,
    linear_scan,
):
    if resolution is None:
        resolution = d * d
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")

    def frac(m):
        return _probe_fraction(
            lc, n, d, p1, m, resolution, samples, seed, pred, deadline
        )

    if linear_scan:
        for m in range(1, resolution + 1):
            if frac(m) >= threshold:
                return TightnessBound(kind, lc, p1, m / resolution, samples, resolution)
        return TightnessBound(kind, lc, p1, 1.0, samples, resolution)

    # tightness 0 forbids nothing, so the predicate holds on no instance
    # there; bisect under the monotone-probability assumption
    if frac(resolution) < threshold:
        return TightnessBound(kind, lc, p1, 1.0, samples, resolution)
    lo, hi = 0, resolution
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if frac(mid) >= threshold:
            hi = mid
        else:
            lo = mid
    return TightnessBound(kind, lc, p1, hi / resolution, samples, resolution)


def estimate_t0(
    lc, n, d, p1, samples, resolution=None, seed=0, threshold=0.5,
    deadline=None, linear_scan=False,
):
    """Smallest grid tightness where at least ``threshold`` of the sampled
    instances lose a value (1.0 when the filter never deletes)."""
    return _estimate_bound(
        "t0", lambda r: bool(r.deleted), lc, n, d, p1, samples, resolution,
        seed, threshold, deadline, linear_scan,
    )


def estimate_tall(
    lc, n, d, p1, samples, resolution=None, seed=0, threshold=0.5,
    deadline=None, linear_scan=False,
):
    """Smallest grid tightness where at least ``threshold`` of the sampled
    instances are proved inconsistent (1.0 when wipeout never reaches it)."""
    return _estimate_bound(
        "tall", lambda r: r.wipeout, lc, n, d, p1, samples, resolution,
        seed, threshold, deadline, linear_scan,
    )


class LatticeSoakError(AssertionError):
    """A deletion-set containment between comparable filters failed."""


def sweep(
    n, d, p1, lcs, tightness_grid, samples, seed=0, deadline=None,
    soak_check=True,
) -> list[BenchPoint]:
    """One BenchPoint per (filter, tightness).

    Every filter sees the same instances at a grid point.  On instances with
    at most 60 variables the deletion sets of comparable filters are
    cross-checked for containment as a soak test; a violation raises
    LatticeSoakError since it would mean an engine bug.
    """
    from .lattice import comparable_pairs

    order = comparable_pairs(lcs) if soak_check else []
    points = {lc: [] for lc in lcs}
    for m_ix, p2 in enumerate(tightness_grid):
        per_lc = {lc: [] for lc in lcs}
        for ix in range(samples):
            spec = GenSpec(n, d, p1, p2, derive_seed(seed, m_ix, ix))
            net = generate_model_b(spec)
            outcomes = {}
            for lc in lcs:
                res, pct = measure(net, lc, deadline)
                per_lc[lc].append((res, pct))
                outcomes[lc] = res
            if soak_check and net.n <= 60:
                for strong, weak in order:
                    sd = set(outcomes[strong].deleted)
                    wd = set(outcomes[weak].deleted)
                    if not wd <= sd:
                        raise LatticeSoakError(
                            f"{weak.label()} deleted values missing from "
                            f"{strong.label()} on seed {spec.seed}"
                        )
        for lc in lcs:
            rows = per_lc[lc]
            k = len(rows)
            points[lc].append(
                BenchPoint(
                    lc=lc,
                    n=n,
                    d=d,
                    p1=p1,
                    p2=p2,
                    samples=k,
                    mean_deleted_pct=sum(p for _, p in rows) / k,
                    wipeout_frac=sum(1 for r, _ in rows if r.wipeout) / k,
                    mean_checks=sum(r.checks for r, _ in rows) / k,
                    mean_ms=sum(r.elapsed for r, _ in rows) / k * 1000.0,
                    max_ms=max(r.elapsed for r, _ in rows) * 1000.0,
                    timeout_frac=sum(1 for r, _ in rows if r.timed_out) / k,
                )
            )
    out = []
    for lc in lcs:
        out.extend(points[lc])
    return out


CSV_HEADER = (
    "lc,k,n,d,p1,p2,samples,mean_deleted_pct,wipeout_frac,"
    "mean_checks,mean_ms,max_ms,timeout_frac"
)


def _num(x):
    return format(x, ".6g")


def points_to_csv(points) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\r\n")
    for p in points:
        k = "" if p.lc.k is None else str(p.lc.k)
        row = ",".join(
            [
                p.lc.kind,
                k,
                str(p.n),
                str(p.d),
                _num(p.p1),
                _num(p.p2),
                str(p.samples),
                _num(p.mean_deleted_pct),
                _num(p.wipeout_frac),
                _num(p.mean_checks),
                _num(p.mean_ms),
                _num(p.max_ms),
                _num(p.timeout_frac),
            ]
        )
        buf.write(row + "\r\n")
    return buf.getvalue()


def bound_to_csv(bounds) -> str:
    buf = io.StringIO()
    buf.write("kind,lc,k,n_samples,p1,resolution,tightness\r\n")
    for b in bounds:
        k = "" if b.lc.k is None else str(b.lc.k)
        buf.write(
            ",".join(
                [
                    b.kind,
                    b.lc.kind,
                    k,
                    str(b.samples),
                    _num(b.p1),
                    str(b.resolution),
                    _num(b.tightness),
                ]
            )
            + "\r\n"
        )
    return buf.getvalue()
