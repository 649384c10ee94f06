"""Propagation engines for the domain-filtering consistencies.

Every engine removes values until no value violates its consistency
condition, using a FIFO queue of variable revision events: within a variable
values are handled in ascending initial-domain index order, constraints in
ascending neighbor order.  Support scans are resumable: once a value has been
probed and rejected from a given resume point it is never probed again in the
same run, which is sound because domains only shrink.

A "constraint check" is one probe of an allowed-pair matrix.  The scans run
on bitmasks but report the exact probe count of the equivalent value-by-value
scan (see bitops), so checks are a deterministic function of the inputs.

All engines run to the full deletion fixpoint.  When a domain empties the
network is inconsistent and the result is canonicalised to the all-empty
state with every input value reported deleted; this keeps enforcement results
exactly comparable with the brute-force definitional closures, and it is why
a wiped instance always shows 100% deleted values.

The single deliberate exception to "wipeout means inconsistency" is path
inverse consistency on networks with fewer than three variables, which holds
vacuously: enforce_pic never deletes there, even from arc-inconsistent
networks.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .bitops import first_support, iter_bits, supports_from, witness_pair
from .network import DomainState, NetworkError

KINDS = ("ac", "rpc", "krpc", "maxrpc", "pic", "nic", "spc", "sac", "srpc")


@dataclass(frozen=True)
class ConsistencyId:
    """One of the supported consistencies; krpc carries its k parameter."""

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown consistency kind {self.kind!r}")
        if self.kind == "krpc":
            if self.k is None or self.k < 1:
                raise ValueError("krpc needs k >= 1 (use ac instead of 0-rpc)")
        elif self.k is not None:
            raise ValueError(f"{self.kind} does not take a k parameter")

    def label(self) -> str:
        return f"krpc{self.k}" if self.kind == "krpc" else self.kind


AC = ConsistencyId("ac")
RPC = ConsistencyId("rpc")
MAXRPC = ConsistencyId("maxrpc")
PIC = ConsistencyId("pic")
NIC = ConsistencyId("nic")
SPC = ConsistencyId("spc")
SAC = ConsistencyId("sac")
SRPC = ConsistencyId("srpc")


def krpc(k) -> ConsistencyId:
    return ConsistencyId("krpc", k)


@dataclass
class FilterResult:
    """Outcome of one enforcement run.

    ``deleted`` holds (variable, external value) pairs in deletion order;
    ``deleted_pairs`` is non-empty only for strong path consistency and lists
    ((i, a), (j, b)) with i < j in external values.
    """

    deleted: list
    wipeout: bool
    checks: int
    elapsed: float
    timed_out: bool = False
    deleted_pairs: list = field(default_factory=list)


class SupportCache:
    """Resumable last-support positions keyed by (variable, neighbor).

    An entry of -1 means "never scanned"; otherwise it is the index of the
    last support found, and a revalidating scan resumes strictly past it.
    """

    def __init__(self, net):
        self._slot = {}
        for i, j in net.pairs:
            self._slot[(i, j)] = [-1] * net.domain_size(i)
            self._slot[(j, i)] = [-1] * net.domain_size(j)

    def row(self, i, j):
        return self._slot[(i, j)]


class _Wipeout(Exception):
    pass


class _DeadlineHit(Exception):
    pass


def _deadline_at(deadline):
    return None if deadline is None else time.monotonic() + deadline


class _RunCore:
    """Shared queue, deletion log and check accounting."""

    def __init__(self, net, state, deadline_at=None):
        self.net = net
        self.bits = state.bits
        self.deleted = []
        self.checks = 0
        self.queue = deque(range(net.n))
        self.queued = [True] * net.n
        self.deadline_at = deadline_at

    def pop(self):
        x = self.queue.popleft()
        self.queued[x] = False
        if self.deadline_at is not None and time.monotonic() > self.deadline_at:
            raise _DeadlineHit
        return x

    def touch(self, x):
        if not self.queued[x]:
            self.queued[x] = True
            self.queue.append(x)

    def delete(self, i, ai):
        b = self.bits[i]
        m = 1 << ai
        if not b & m:
            return
        b ^= m
        self.bits[i] = b
        self.deleted.append((i, ai))
        if not b:
            raise _Wipeout
        self.touch(i)

    def drain(self):
        while self.queue:
            self.on_pop(self.pop())

    def run(self):
        self.drain()


class _ArcEngine(_RunCore):
    """Arc consistency with resumable per-(value, arc) support positions."""

    def __init__(self, net, state, deadline_at=None):
        super().__init__(net, state, deadline_at)
        self.cache = SupportCache(net)

    def on_pop(self, x):
        for y in self.net.neighbors[x]:
            self.revise(y, x)

    def revise(self, y, x):
        rows = self.net.rows(y, x)
        cache = self.cache.row(y, x)
        dom_x = self.bits[x]
        m = self.bits[y]
        while m:
            low = m & -m
            m ^= low
            b = low.bit_length() - 1
            s = cache[b]
            if s >= 0 and dom_x >> s & 1:
                continue
            region = dom_x if s < 0 else dom_x & (-1 << (s + 1))
            nb, probes = first_support(rows[b], region)
            self.checks += probes
            if nb < 0:
                self.delete(y, b)
            else:
                cache[b] = nb


def _find_pc_support(net, bits, i, ai, j, frm):
    """Smallest current support of (i, ai) on C_ij at index >= frm that has a
    compatible value in every triangle third.  Returns (index or -1, probes).
    """
    row = net.rows(i, j)[ai]
    ts = net.thirds(i, j)
    dom_j = bits[j]
    checks = 0
    mask = -1 << frm
    while True:
        s, probes = first_support(row, dom_j & mask)
        checks += probes
        if s < 0:
            return -1, checks
        ok = True
        for w in ts:
            c, probes = witness_pair(net.rows(i, w)[ai], net.rows(j, w)[s], bits[w])
            checks += probes
            if c < 0:
                ok = False
                break
        if ok:
            return s, checks
        mask = -1 << (s + 1)


def find_pc_support(net, state, i, a, j, from_index, counter=None):
    """Public path-consistent-support scan.

    ``a`` is an external value; ``from_index`` and the returned support are
    positions in D_j's initial ordering (None when no such support exists).
    """
    if not net.has_constraint(i, j):
        raise NetworkError(f"no constraint between variables {i} and {j}")
    ai = net.index_of(i, a)
    if not state.bits[i] >> ai & 1:
        raise NetworkError(f"value {a} not in current domain of variable {i}")
    s, probes = _find_pc_support(net, state.bits, i, ai, j, from_index)
    if counter is not None:
        counter.add(probes)
    return None if s < 0 else s


class _PCEngine(_RunCore):
    """k-restricted and max-restricted path consistency.

    With an integer k, a value owes a path-consistent support on a constraint
    only while it has at most k supports there; support counting stops as
    soon as k+1 are known.  With k=None the obligation is unconditional.
    """

    def __init__(self, net, state, deadline_at=None, k=None):
        super().__init__(net, state, deadline_at)
        self.k = k
        self.arc = {}
        for i, j in net.pairs:
            for y, x in ((i, j), (j, i)):
                dy = net.domain_size(y)
                if k is None:
                    self.arc[(y, x)] = {
                        "pccur": [-1] * dy,
                        "pcfrom": [0] * dy,
                    }
                else:
                    self.arc[(y, x)] = {
                        "sups": [[] for _ in range(dy)],
                        "fr": [0] * dy,
                        "obl": [False] * dy,
                        "pccur": [-1] * dy,
                        "pcfrom": [0] * dy,
                    }

    def on_pop(self, x):
        for y in self.net.neighbors[x]:
            if self.k is None:
                self._revise_max(y, x)
            else:
                self._revise_k(y, x)
        for u, v in self.net.cliques.var_pairs[x]:
            self._recheck_third(u, v, x)
            self._recheck_third(v, u, x)

    # -- max-rpc ----------------------------------------------------------

    def _revise_max(self, y, x):
        st = self.arc[(y, x)]
        pccur = st["pccur"]
        dom_x = self.bits[x]
        m = self.bits[y]
        while m:
            low = m & -m
            m ^= low
            b = low.bit_length() - 1
            cur = pccur[b]
            if cur >= 0 and dom_x >> cur & 1:
                continue
            self._pc_rescan(y, x, b, st)

    def _pc_rescan(self, y, x, b, st):
        s, probes = _find_pc_support(self.net, self.bits, y, b, x, st["pcfrom"][b])
        self.checks += probes
        if s < 0:
            st["pccur"][b] = -1
            self.delete(y, b)
        else:
            st["pccur"][b] = s
            st["pcfrom"][b] = s

    # -- k-rpc -------------------------------------------------------------

    def _revise_k(self, y, x):
        net = self.net
        st = self.arc[(y, x)]
        sups, fr, obl, pccur = st["sups"], st["fr"], st["obl"], st["pccur"]
        rows = net.rows(y, x)
        dom_x = self.bits[x]
        dx = net.domain_size(x)
        cap = self.k + 1
        m = self.bits[y]
        while m:
            low = m & -m
            m ^= low
            b = low.bit_length() - 1
            lst = sups[b]
            if lst:
                keep = [s for s in lst if dom_x >> s & 1]
                if len(keep) != len(lst):
                    sups[b] = lst = keep
            if fr[b] < dx and len(lst) < cap:
                found, probes, exhausted = supports_from(
                    rows[b], dom_x, fr[b], cap - len(lst)
                )
                self.checks += probes
                lst.extend(found)
                fr[b] = dx if exhausted else found[-1] + 1
            if not lst:
                self.delete(y, b)
                continue
            if fr[b] >= dx and len(lst) <= self.k:
                obl[b] = True
                cur = pccur[b]
                if cur < 0 or not dom_x >> cur & 1:
                    self._pc_among(y, x, b, st)

    def _pc_among(self, y, x, b, st):
        net = self.net
        ts = net.thirds(y, x)
        frm = st["pcfrom"][b]
        for s in st["sups"][b]:
            if s < frm:
                continue
            ok = True
            for w in ts:
                c, probes = witness_pair(
                    net.rows(y, w)[b], net.rows(x, w)[s], self.bits[w]
                )
                self.checks += probes
                if c < 0:
                    ok = False
                    break
            if ok:
                st["pccur"][b] = s
                st["pcfrom"][b] = s
                return
            frm = s + 1
            st["pcfrom"][b] = frm
        st["pccur"][b] = -1
        self.delete(y, b)

    # -- witness revalidation on triangle thirds ---------------------------

    def _recheck_third(self, y, j, w):
        net = self.net
        st = self.arc[(y, j)]
        pccur = st["pccur"]
        obl = None if self.k is None else st["obl"]
        rows_yw = net.rows(y, w)
        rows_jw = net.rows(j, w)
        dom_w = self.bits[w]
        dom_j = self.bits[j]
        m = self.bits[y]
        while m:
            low = m & -m
            m ^= low
            b = low.bit_length() - 1
            if obl is not None and not obl[b]:
                continue
            cur = pccur[b]
            if cur < 0 or not dom_j >> cur & 1:
                # no established support, or a dead one: j's own queued
                # revision event rescans it
                continue
            c, probes = witness_pair(rows_yw[b], rows_jw[cur], dom_w)
            self.checks += probes
            if c >= 0:
                continue
            st["pcfrom"][b] = cur + 1
            st["pccur"][b] = -1
            if self.k is None:
                self._pc_rescan(y, j, b, st)
            else:
                self._pc_among(y, j, b, st)


class _PICEngine(_RunCore):
    """Path inverse consistency via arc consistency plus triangle checks.

    Networks with fewer than three variables hold vacuously and are returned
    untouched.  Otherwise the run first reaches the arc-consistency fixpoint,
    then repeatedly checks each value against the triangles of its variable.
    """

    def __init__(self, net, state, deadline_at=None):
        super().__init__(net, state, deadline_at)
        self.cache = SupportCache(net)
        self.clique_phase = False
        # role r of variable u in triple (u, j, k): scan b over D_j, witness
        # over D_k; one resumable position per value of u
        self.roles = [[] for _ in range(net.n)]
        self.role_ix = {}
        for t, (a, b, c) in enumerate(net.cliques.triples):
            for u, j, k in ((a, b, c), (b, a, c), (c, a, b)):
                self.role_ix[(u, t)] = len(self.roles[u])
                self.roles[u].append(
                    {
                        "j": j,
                        "k": k,
                        "bcur": [-1] * net.domain_size(u),
                        "bfrom": [0] * net.domain_size(u),
                    }
                )
        self.triple_ix = {}
        for t, (a, b, c) in enumerate(net.cliques.triples):
            self.triple_ix[frozenset((a, b, c))] = t

    def run(self):
        if self.net.n < 3:
            return
        self.drain()
        self.clique_phase = True
        for x in range(self.net.n):
            self.touch(x)
        self.drain()

    def on_pop(self, x):
        for y in self.net.neighbors[x]:
            self.revise(y, x)
        if not self.clique_phase:
            return
        for u, v in self.net.cliques.var_pairs[x]:
            t = self.triple_ix[frozenset((u, v, x))]
            self._recheck_role(u, self.role_ix[(u, t)])
            self._recheck_role(v, self.role_ix[(v, t)])

    revise = _ArcEngine.revise

    def _recheck_role(self, u, ridx):
        net = self.net
        role = self.roles[u][ridx]
        j, k = role["j"], role["k"]
        bcur, bfrom = role["bcur"], role["bfrom"]
        rows_uj = net.rows(u, j)
        rows_uk = net.rows(u, k)
        rows_jk = net.rows(j, k)
        dom_j = self.bits[j]
        dom_k = self.bits[k]
        m = self.bits[u]
        while m:
            low = m & -m
            m ^= low
            a = low.bit_length() - 1
            cur = bcur[a]
            if cur >= 0 and dom_j >> cur & 1:
                c, probes = witness_pair(rows_jk[cur], rows_uk[a], dom_k)
                self.checks += probes
                if c >= 0:
                    continue
                bfrom[a] = cur + 1
            bcur[a] = -1
            frm = bfrom[a]
            while True:
                nb, probes = first_support(rows_uj[a], dom_j & (-1 << frm))
                self.checks += probes
                if nb < 0:
                    self.delete(u, a)
                    break
                c, probes = witness_pair(rows_jk[nb], rows_uk[a], dom_k)
                self.checks += probes
                if c >= 0:
                    bcur[a] = nb
                    bfrom[a] = nb
                    break
                frm = nb + 1
                bfrom[a] = frm


class _NICEngine(_RunCore):
    """Neighborhood inverse consistency.

    After an arc-consistency fixpoint, each value must extend to a consistent
    instantiation of its variable plus all its neighbors.  The inner search is
    chronological backtracking with forward checking, picking the unassigned
    neighbor with the smallest live domain (ties to the higher static degree,
    then the lower index).  The deadline is checked at queue pops and at
    every backtrack.
    """

    def __init__(self, net, state, deadline_at=None):
        super().__init__(net, state, deadline_at)
        self.cache = SupportCache(net)
        self.nic_phase = False

    revise = _ArcEngine.revise

    def run(self):
        self.drain()
        self.nic_phase = True
        for x in range(self.net.n):
            self.touch(x)
        self.drain()

    def on_pop(self, x):
        if not self.nic_phase:
            for y in self.net.neighbors[x]:
                self.revise(y, x)
            return
        m = self.bits[x]
        while m:
            low = m & -m
            m ^= low
            a = low.bit_length() - 1
            if not self.bits[x] >> a & 1:
                continue
            if not self._extends(x, a):
                self.delete(x, a)
                for y in self.net.neighbors[x]:
                    self.touch(y)

    def _check_deadline(self):
        if self.deadline_at is not None and time.monotonic() > self.deadline_at:
            raise _DeadlineHit

    def _extends(self, i, ai):
        net = self.net
        nbrs = net.neighbors[i]
        if not nbrs:
            return True
        loc = {}
        for j in nbrs:
            dom = self.bits[j]
            self.checks += dom.bit_count()
            nd = dom & net.rows(i, j)[ai]
            if not nd:
                return False
            loc[j] = nd
        return self._fc_dive(loc, list(nbrs))

    def _fc_dive(self, loc, unassigned):
        if not unassigned:
            return True
        net = self.net
        j = min(
            unassigned,
            key=lambda u: (loc[u].bit_count(), -len(net.neighbors[u]), u),
        )
        rest = [u for u in unassigned if u != j]
        m = loc[j]
        while m:
            low = m & -m
            m ^= low
            bj = low.bit_length() - 1
            saved = []
            ok = True
            for u in rest:
                if not net.has_constraint(j, u):
                    continue
                old = loc[u]
                self.checks += old.bit_count()
                nd = old & net.rows(j, u)[bj]
                if nd != old:
                    saved.append((u, old))
                    loc[u] = nd
                if not nd:
                    ok = False
                    break
            if ok and self._fc_dive(loc, rest):
                return True
            for u, old in saved:
                loc[u] = old
            self._check_deadline()
        return False


# -- strong path consistency ---------------------------------------------


def enforce_strong_pc(net, state, deadline=None) -> FilterResult:
    """Arc plus path consistency on the completed constraint graph.

    Works on a private copy of the relations with missing constraints
    materialised as universal; the input network is never touched.  Removes
    pairs without a compatible value in some third variable and values
    without a support, to the joint fixpoint.  On wipeout the canonical
    result deletes every input value and every initially allowed pair.
    """
    start = time.perf_counter()
    deadline_at = _deadline_at(deadline)
    n = net.n
    bits = state.bits
    entry_bits = list(bits)
    full = [(1 << net.domain_size(j)) - 1 for j in range(n)]

    def fresh_rel():
        r = {}
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if net.has_constraint(i, j):
                    r[(i, j)] = list(net.rows(i, j))
                else:
                    r[(i, j)] = [full[j]] * net.domain_size(i)
        return r

    rel = fresh_rel()
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    deleted = []
    deleted_pairs = []
    checks = 0
    wiped = False
    timed = False

    try:
        changed = True
        while changed:
            changed = False
            if deadline_at is not None and time.monotonic() > deadline_at:
                raise _DeadlineHit
            for i, j in all_pairs:
                ri = rel[(i, j)]
                rj = rel[(j, i)]
                mi = bits[i]
                while mi:
                    lowa = mi & -mi
                    mi ^= lowa
                    a = lowa.bit_length() - 1
                    row = ri[a] & bits[j]
                    while row:
                        lowb = row & -row
                        row ^= lowb
                        b = lowb.bit_length() - 1
                        for k in range(n):
                            if k == i or k == j:
                                continue
                            c, probes = witness_pair(
                                rel[(i, k)][a], rel[(j, k)][b], bits[k]
                            )
                            checks += probes
                            if c < 0:
                                ri[a] &= ~(1 << b)
                                rj[b] &= ~(1 << a)
                                deleted_pairs.append(((i, a), (j, b)))
                                changed = True
                                break
            for i in range(n):
                mi = bits[i]
                while mi:
                    lowa = mi & -mi
                    mi ^= lowa
                    a = lowa.bit_length() - 1
                    for j in range(n):
                        if j == i:
                            continue
                        s, probes = first_support(rel[(i, j)][a], bits[j])
                        checks += probes
                        if s < 0:
                            bits[i] &= ~(1 << a)
                            deleted.append((i, a))
                            changed = True
                            if not bits[i]:
                                raise _Wipeout
                            break
    except _Wipeout:
        wiped = True
    except _DeadlineHit:
        timed = True

    if wiped:
        base = fresh_rel()
        deleted_pairs = []
        for i, j in all_pairs:
            ri = base[(i, j)]
            for a in iter_bits(entry_bits[i]):
                for b in iter_bits(ri[a] & entry_bits[j]):
                    deleted_pairs.append(((i, a), (j, b)))
        deleted = []
        for i in range(n):
            bits[i] = 0
            deleted.extend((i, a) for a in iter_bits(entry_bits[i]))

    return FilterResult(
        deleted=[(i, net.value_of(i, a)) for i, a in deleted],
        wipeout=wiped,
        checks=checks,
        elapsed=time.perf_counter() - start,
        timed_out=timed,
        deleted_pairs=[
            ((i, net.value_of(i, a)), (j, net.value_of(j, b)))
            for (i, a), (j, b) in deleted_pairs
        ],
    )


# -- wrappers --------------------------------------------------------------


def _drive(cls, net, state, deadline, **kw):
    start = time.perf_counter()
    eng = cls(net, state, _deadline_at(deadline), **kw)
    wiped = False
    timed = False
    try:
        eng.run()
    except _Wipeout:
        wiped = True
    except _DeadlineHit:
        timed = True
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


def enforce_ac(net, state, deadline=None) -> FilterResult:
    """Prune to the maximal arc-consistent sub-domain."""
    return _drive(_ArcEngine, net, state, deadline)


def enforce_rpc(net, state, deadline=None) -> FilterResult:
    """Arc consistency plus path-consistency of unique supports."""
    return _drive(_PCEngine, net, state, deadline, k=1)


def enforce_k_rpc(net, state, k, deadline=None) -> FilterResult:
    """Values with at most k supports on a constraint need one that is
    path consistent there."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _drive(_PCEngine, net, state, deadline, k=k)


def enforce_max_rpc(net, state, deadline=None) -> FilterResult:
    """Every value needs a path-consistent support on every constraint."""
    return _drive(_PCEngine, net, state, deadline, k=None)


def enforce_pic(net, state, deadline=None) -> FilterResult:
    """Every value must extend to a consistent triple over each triangle of
    its variable; vacuous below three variables."""
    return _drive(_PICEngine, net, state, deadline)


def enforce_nic(net, state, deadline=None) -> FilterResult:
    """Every value must extend to a consistent instantiation of its whole
    neighborhood; honors a wall-clock deadline with a sound partial result."""
    return _drive(_NICEngine, net, state, deadline)


def enforce(net, state, cid, deadline=None) -> FilterResult:
    """Dispatch on a ConsistencyId."""
    kind = cid.kind
    if kind == "ac":
        return enforce_ac(net, state, deadline)
    if kind == "rpc":
        return enforce_rpc(net, state, deadline)
    if kind == "krpc":
        return enforce_k_rpc(net, state, cid.k, deadline)
    if kind == "maxrpc":
        return enforce_max_rpc(net, state, deadline)
    if kind == "pic":
        return enforce_pic(net, state, deadline)
    if kind == "nic":
        return enforce_nic(net, state, deadline)
    if kind == "spc":
        return enforce_strong_pc(net, state, deadline)
    from .singleton import enforce_sac, enforce_srpc

    if kind == "sac":
        return enforce_sac(net, state, deadline)
    return enforce_srpc(net, state, deadline)
