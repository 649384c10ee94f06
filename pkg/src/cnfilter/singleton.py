"""Singleton consistencies: a value survives only if the network restricted
to that single value still admits a non-empty inner-consistent sub-domain.

The outer loop is deliberately naive: sweep every value (variables ascending,
values ascending), delete the failures, and restart the sweep after any pass
that deleted something.  No filtering effort is shared between probes, but
per-probe check counts land in the result so smarter schemes stay measurable.

Probes are monotone in the base state (shrinking it can only turn verdicts
false), so the final domains do not depend on the sweep order; the engines
expose a reversed sweep for exercising exactly that.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .bitops import first_support, iter_bits
from .filters import (
    AC,
    RPC,
    ConsistencyId,
    FilterResult,
    _ArcEngine,
    _DeadlineHit,
    _PCEngine,
    _RunCore,
    _Wipeout,
    _deadline_at,
)
from .network import DomainState, restrict_to_singleton


@dataclass(frozen=True)
class SingletonProbe:
    """Verdict of one restricted sub-problem test."""

    target: tuple[int, int]
    inner: ConsistencyId
    verdict: bool


def _coerce_inner(inner) -> ConsistencyId:
    if isinstance(inner, str):
        inner = ConsistencyId(inner)
    if inner.kind not in ("ac", "rpc"):
        raise ValueError("singleton tests support inner ac or rpc only")
    return inner


def probe_singleton(net, state, i, a, inner) -> SingletonProbe:
    """Run the inner filter on the sub-problem with D_i = {a}.

    The verdict is True when no domain empties.  ``state`` is never touched;
    the restricted sub-problem lives on a private copy.
    """
    inner = _coerce_inner(inner)
    sub = restrict_to_singleton(net, state, i, a)
    if sub.wipeout:
        return SingletonProbe((i, a), inner, False)
    cls = _ArcEngine if inner.kind == "ac" else _PCEngine
    kw = {} if inner.kind == "ac" else {"k": 1}
    eng = cls(net, sub, None, **kw)
    try:
        eng.run()
    except _Wipeout:
        return SingletonProbe((i, a), inner, False)
    return SingletonProbe((i, a), inner, True)


def singleton_test(net, state, i, a, inner) -> bool:
    return probe_singleton(net, state, i, a, inner).verdict


def _lazy_ac_probe(net, base_bits, i, ai):
    """Inner arc-consistency probe assuming the base state is already arc
    consistent, so only the restriction of D_i needs propagating.  Stops at
    the first emptied domain.  Returns (alive, probes).
    """
    loc = list(base_bits)
    loc[i] = 1 << ai
    if loc[i] == base_bits[i]:
        return True, 0
    queue = [i]
    queued = set(queue)
    checks = 0
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        queued.discard(x)
        dom_x = loc[x]
        for y in net.neighbors[x]:
            rows = net.rows(y, x)
            m = loc[y]
            out = m
            while m:
                low = m & -m
                m ^= low
                b = low.bit_length() - 1
                s, probes = first_support(rows[b], dom_x)
                checks += probes
                if s < 0:
                    out ^= low
            if out != loc[y]:
                loc[y] = out
                if not out:
                    return False, checks
                if y not in queued:
                    queued.add(y)
                    queue.append(y)
    return True, checks


def _sweep_order(net, reverse):
    order = [
        (i, ai) for i in range(net.n) for ai in range(net.domain_size(i))
    ]
    return list(reversed(order)) if reverse else order


def enforce_sac(net, state, deadline=None, reverse=False) -> FilterResult:
    """Singleton arc consistency.

    The base state is kept at its arc-consistency fixpoint (a sound
    prefilter), letting each probe propagate from the restricted variable
    alone and abort on the first wipeout.
    """
    start = time.perf_counter()
    deadline_at = _deadline_at(deadline)
    eng = _ArcEngine(net, state, deadline_at)
    wiped = False
    timed = False
    try:
        eng.run()
        order = _sweep_order(net, reverse)
        while True:
            any_deleted = False
            for i, ai in order:
                if not eng.bits[i] >> ai & 1:
                    continue
                if deadline_at is not None and time.monotonic() > deadline_at:
                    raise _DeadlineHit
                alive, probes = _lazy_ac_probe(net, eng.bits, i, ai)
                eng.checks += probes
                if not alive:
                    eng.delete(i, ai)
                    eng.drain()
                    any_deleted = True
            if not any_deleted:
                break
    except _Wipeout:
        wiped = True
    except _DeadlineHit:
        timed = True
    return _assemble(net, eng, start, wiped, timed)


def enforce_srpc(net, state, deadline=None, reverse=False) -> FilterResult:
    """Singleton restricted path consistency.

    Runs one full restricted-path-consistency pass on the base state first,
    then sweeps the singleton probes with a fresh inner run per value.
    """
    start = time.perf_counter()
    deadline_at = _deadline_at(deadline)
    eng = _PCEngine(net, state, deadline_at, k=1)
    wiped = False
    timed = False
    try:
        eng.run()
        order = _sweep_order(net, reverse)
        while True:
            any_deleted = False
            for i, ai in order:
                if not eng.bits[i] >> ai & 1:
                    continue
                if deadline_at is not None and time.monotonic() > deadline_at:
                    raise _DeadlineHit
                sub = DomainState(list(eng.bits))
                sub.bits[i] = 1 << ai
                inner = _PCEngine(net, sub, deadline_at, k=1)
                alive = True
                try:
                    inner.run()
                except _Wipeout:
                    alive = False
                eng.checks += inner.checks
                if not alive:
                    eng.delete(i, ai)
                    eng.drain()
                    any_deleted = True
            if not any_deleted:
                break
    except _Wipeout:
        wiped = True
    except _DeadlineHit:
        timed = True
    return _assemble(net, eng, start, wiped, timed)


def _assemble(net, eng, start, wiped, timed):
    deleted = eng.deleted
    if wiped:
        for i in range(net.n):
            rest = eng.bits[i]
            eng.bits[i] = 0
            deleted.extend((i, a) for a in iter_bits(rest))
    return FilterResult(
        deleted=[(i, net.value_of(i, a)) for i, a in deleted],
        wipeout=wiped,
        checks=eng.checks,
        elapsed=time.perf_counter() - start,
        timed_out=timed,
    )
