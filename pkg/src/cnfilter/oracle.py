"""Brute-force ground truth for small instances.

Everything here is written for clarity over speed and stays structurally
independent of the propagation engines: closures re-test the defining
condition of a consistency against the current domains in a plain
restart-after-each-deletion loop (ascending variable, ascending value), with
no support caches, no resumable scans and no check counting.  The engines are
expected to land on exactly the same fixpoints.

Wipeouts are canonicalised the same way as in the engines: if the deletion
fixpoint empties any domain, the network admits no consistent sub-domain at
all and the all-empty state is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitops import iter_bits
from .filters import enforce, enforce_ac
from .generator import GenSpec, derive_seed, generate_model_b
from .network import DomainState


@dataclass
class SolutionSet:
    """Exhaustively enumerated solutions (possibly cut off at a limit)."""

    solutions: list[tuple[int, ...]]
    truncated: bool = False

    def __len__(self):
        return len(self.solutions)

    def as_set(self):
        return frozenset(self.solutions)


def _compatible(net, i, ai, j, bj):
    """Allowed-pair probe that treats a missing constraint as satisfied."""
    if not net.has_constraint(i, j):
        return True
    return bool(net.rows(i, j)[ai] >> bj & 1)


def enumerate_solutions(net, state=None, limit=None) -> SolutionSet:
    """All solutions over the current domains by plain backtracking in
    static variable order."""
    if state is None:
        state = net.full_state()
    n = net.n
    doms = [list(iter_bits(state.bits[i])) for i in range(n)]
    # constraints from each variable back to smaller-indexed ones
    back = [[j for j in net.neighbors[i] if j < i] for i in range(n)]
    out = []
    assign = [0] * n
    truncated = False

    def dive(depth):
        nonlocal truncated
        if truncated:
            return
        if depth == n:
            out.append(tuple(net.value_of(i, assign[i]) for i in range(n)))
            if limit is not None and len(out) >= limit:
                truncated = True
            return
        rows = {j: net.rows(depth, j) for j in back[depth]}
        for ai in doms[depth]:
            ok = True
            for j in back[depth]:
                if not rows[j][ai] >> assign[j] & 1:
                    ok = False
                    break
            if ok:
                assign[depth] = ai
                dive(depth + 1)
                if truncated:
                    return

    if all(doms):
        dive(0)
    return SolutionSet(out, truncated)


def _has_solution_with(net, bits, i, ai):
    """Does some solution over ``bits`` assign value index ``ai`` to i?"""
    n = net.n
    order = [i] + [v for v in range(n) if v != i]
    doms = [list(iter_bits(bits[v])) for v in range(n)]
    assign = {}

    def dive(depth):
        if depth == n:
            return True
        v = order[depth]
        cands = [ai] if v == i else doms[v]
        for cv in cands:
            ok = True
            for u, cu in assign.items():
                if net.has_constraint(v, u) and not net.rows(v, u)[cv] >> cu & 1:
                    ok = False
                    break
            if ok:
                assign[v] = cv
                if dive(depth + 1):
                    return True
                del assign[v]
        return False

    return dive(0)


def variable_completability(net, state=None) -> DomainState:
    """Keep exactly the values that occur in at least one solution."""
    if state is None:
        state = net.full_state()
    bits = list(state.bits)
    out = []
    for i in range(net.n):
        keep = 0
        for ai in iter_bits(bits[i]):
            if _has_solution_with(net, bits, i, ai):
                keep |= 1 << ai
        out.append(keep)
    return DomainState(out)


# -- per-value consistency conditions (the textbook definitions) -----------


def _full(net, j):
    return (1 << net.domain_size(j)) - 1


def _ac_ok(net, bits, i, a):
    for j in net.neighbors[i]:
        if net.rows(i, j)[a] & bits[j] == 0:
            return False
    return True


def _pair_pc_ok(net, bits, i, a, j, b):
    """Pair ((i,a),(j,b)) extendable to every triangle third of {i, j}."""
    for w in net.thirds(i, j):
        if net.rows(i, w)[a] & net.rows(j, w)[b] & bits[w] == 0:
            return False
    return True


def _rpc_ok(net, bits, i, a):
    if not _ac_ok(net, bits, i, a):
        return False
    for j in net.neighbors[i]:
        sups = list(iter_bits(net.rows(i, j)[a] & bits[j]))
        if len(sups) == 1 and not _pair_pc_ok(net, bits, i, a, j, sups[0]):
            return False
    return True


def _krpc_ok(net, bits, i, a, k):
    if not _ac_ok(net, bits, i, a):
        return False
    for j in net.neighbors[i]:
        sups = list(iter_bits(net.rows(i, j)[a] & bits[j]))
        if len(sups) <= k and not any(
            _pair_pc_ok(net, bits, i, a, j, b) for b in sups
        ):
            return False
    return True


def _maxrpc_ok(net, bits, i, a):
    if not _ac_ok(net, bits, i, a):
        return False
    for j in net.neighbors[i]:
        sups = iter_bits(net.rows(i, j)[a] & bits[j])
        if not any(_pair_pc_ok(net, bits, i, a, j, b) for b in sups):
            return False
    return True


def _pic_ok(net, bits, i, a):
    """Literal (1,2)-extendability of (i, a) to every pair of other
    variables, with missing constraints read as satisfied."""
    n = net.n
    for j in range(n):
        if j == i:
            continue
        row_ij = net.rows(i, j)[a] if net.has_constraint(i, j) else _full(net, j)
        cand_j = bits[j] & row_ij
        for k in range(j + 1, n):
            if k == i:
                continue
            row_ik = net.rows(i, k)[a] if net.has_constraint(i, k) else _full(net, k)
            cand_k = bits[k] & row_ik
            if not cand_j or not cand_k:
                return False
            if not net.has_constraint(j, k):
                continue
            rows_jk = net.rows(j, k)
            if not any(rows_jk[b] & cand_k for b in iter_bits(cand_j)):
                return False
    return True


def _nic_ok(net, bits, i, a):
    """Extendability of (i, a) to its whole neighborhood, by plain
    static-order backtracking (no heuristics, no forward checking)."""
    nbrs = net.neighbors[i]
    assign = {i: a}

    def dive(depth):
        if depth == len(nbrs):
            return True
        v = nbrs[depth]
        for cv in iter_bits(bits[v]):
            ok = True
            for u, cu in assign.items():
                if net.has_constraint(v, u) and not net.rows(v, u)[cv] >> cu & 1:
                    ok = False
                    break
            if ok:
                assign[v] = cv
                if dive(depth + 1):
                    return True
                del assign[v]
        return False

    return dive(0)


def _closure_fix(net, bits, ok):
    """Delete any value violating ``ok`` until none does, restarting the
    ascending sweep after each deletion."""
    changed = True
    while changed:
        changed = False
        for i in range(net.n):
            for a in iter_bits(bits[i]):
                if not ok(net, bits, i, a):
                    bits[i] &= ~(1 << a)
                    changed = True
                    break
            if changed:
                break
    return bits


def _sac_ok(net, bits, i, a):
    sub = list(bits)
    sub[i] = 1 << a
    _closure_fix(net, sub, _ac_ok)
    return all(sub)


def _srpc_ok(net, bits, i, a):
    sub = list(bits)
    sub[i] = 1 << a
    _closure_fix(net, sub, _rpc_ok)
    return all(sub)


def strong_pc_closure(net, state=None):
    """Joint pair/value deletion fixpoint on the completed graph.

    Returns (DomainState, surviving_pairs) where surviving pairs are
    frozenset entries (i, a, j, b) in value indices with i < j, over the
    surviving domains.  A wipeout empties both.
    """
    if state is None:
        state = net.full_state()
    bits = list(state.bits)
    n = net.n
    rel = {}
    for i in range(n):
        for j in range(i + 1, n):
            if net.has_constraint(i, j):
                rows = net.rows(i, j)
                rel[(i, j)] = {
                    (a, b)
                    for a in iter_bits(bits[i])
                    for b in iter_bits(rows[a] & bits[j])
                }
            else:
                rel[(i, j)] = {
                    (a, b) for a in iter_bits(bits[i]) for b in iter_bits(bits[j])
                }

    def pair_in(i, a, j, b):
        return (a, b) in rel[(i, j)] if i < j else (b, a) in rel[(j, i)]

    changed = True
    while changed:
        changed = False
        for (i, j), pairs in sorted(rel.items()):
            for a, b in sorted(pairs):
                if bits[i] >> a & 1 == 0 or bits[j] >> b & 1 == 0:
                    continue
                for k in range(n):
                    if k == i or k == j:
                        continue
                    if not any(
                        pair_in(i, a, k, c) and pair_in(j, b, k, c)
                        for c in iter_bits(bits[k])
                    ):
                        pairs.discard((a, b))
                        changed = True
                        break
        for i in range(n):
            for a in iter_bits(bits[i]):
                for j in range(n):
                    if j == i:
                        continue
                    if not any(
                        pair_in(i, a, j, b) for b in iter_bits(bits[j])
                    ):
                        bits[i] &= ~(1 << a)
                        changed = True
                        break

    if not all(bits):
        return DomainState([0] * n), frozenset()
    surviving = frozenset(
        (i, a, j, b)
        for (i, j), pairs in rel.items()
        for a, b in pairs
        if bits[i] >> a & 1 and bits[j] >> b & 1
    )
    return DomainState(bits), surviving


def definitional_closure(net, lc, state=None) -> DomainState:
    """Greatest sub-domain on which the consistency holds, or the all-empty
    state when none exists."""
    if state is None:
        state = net.full_state()
    kind = lc.kind
    if kind == "spc":
        return strong_pc_closure(net, state)[0]
    if kind == "pic" and net.n < 3:
        return state.copy()
    rules = {
        "ac": _ac_ok,
        "rpc": _rpc_ok,
        "maxrpc": _maxrpc_ok,
        "pic": _pic_ok,
        "nic": _nic_ok,
        "sac": _sac_ok,
        "srpc": _srpc_ok,
    }
    if kind == "krpc":
        ok = lambda n_, b_, i_, a_: _krpc_ok(n_, b_, i_, a_, lc.k)
    else:
        ok = rules[kind]
    bits = _closure_fix(net, list(state.bits), ok)
    if not all(bits):
        return DomainState([0] * net.n)
    return DomainState(bits)


# -- randomized witness search ----------------------------------------------


@dataclass(frozen=True)
class WitnessParams:
    """Search space for strictness witnesses."""

    n: int = 6
    d: int = 3
    attempts: int = 100_000
    p1_grid: tuple = (0.4, 0.6, 0.8, 1.0)
    forbid_grid: tuple = (1, 2, 3, 4, 5)


def witness_search(strong, weak, params=None, seed=0):
    """Find a network where ``weak`` deletes nothing but ``strong`` deletes
    at least one value, or None when the attempt budget runs out.

    Attempts cycle over a (density, conflict-count) grid; each attempt's
    instance is seeded independently from the master seed, so the outcome
    does not depend on scheduling.  Candidates spotted with the fast engines
    are re-verified against the definitional closures before being returned.
    """
    if params is None:
        params = WitnessParams()
    d2 = params.d * params.d
    combos = [
        (p1, f) for p1 in params.p1_grid for f in params.forbid_grid if f < d2
    ]
    for t in range(params.attempts):
        p1, f = combos[t % len(combos)]
        net = generate_model_b(
            GenSpec(params.n, params.d, p1, f / d2, derive_seed(seed, t))
        )
        if enforce_ac(net, net.full_state()).deleted:
            continue
        if enforce(net, net.full_state(), weak).deleted:
            continue
        if not enforce(net, net.full_state(), strong).deleted:
            continue
        full = net.full_state()
        if definitional_closure(net, weak) != full:
            continue
        if definitional_closure(net, strong) == full:
            continue
        return net
    return None
