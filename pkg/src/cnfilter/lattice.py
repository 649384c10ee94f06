"""The strength relations between the consistencies, and their empirical
verification.

``stronger`` is final-domain containment: enforcing the stronger consistency
never keeps a value the weaker one deletes.  The table below lists the
direct edges; containment follows transitively.  Four pairs are incomparable
and get witnesses in both directions instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .filters import AC, MAXRPC, NIC, PIC, RPC, SAC, SPC, SRPC, ConsistencyId, enforce, krpc
from .generator import GenSpec, derive_seed, generate_model_b
from .network import serialize_instance
from .oracle import WitnessParams, witness_search

# direct strictly-stronger edges (stronger, weaker)
STRICT_EDGES = (
    (RPC, AC),
    (krpc(2), RPC),
    (krpc(3), krpc(2)),
    (MAXRPC, krpc(2)),
    (PIC, RPC),
    (MAXRPC, PIC),
    (SAC, MAXRPC),
    (NIC, MAXRPC),
    (SPC, SAC),
    (SRPC, SAC),
)

# incomparable pairs: witnesses must exist in both directions
INCOMPARABLE_PAIRS = (
    (PIC, krpc(2)),
    (NIC, SAC),
    (NIC, SPC),
    (NIC, SRPC),
)


def _strength_edges(d):
    """Containment edges applicable to instances of domain size d, with the
    krpc identities folded in (1-rpc is rpc, d-rpc is maxrpc)."""
    ks = [k for k in (1, 2, 3, 4) if k <= d]
    edges = [(MAXRPC, PIC), (PIC, RPC), (RPC, AC)]
    for hi, lo in zip(ks[1:], ks):
        edges.append((krpc(hi), krpc(lo)))
    for k in ks:
        edges.append((MAXRPC, krpc(k)))
    edges += [(SAC, MAXRPC), (SPC, SAC), (SRPC, SAC), (NIC, MAXRPC)]
    return edges


def _closure_of_kinds():
    edges = (
        ("rpc", "ac"), ("pic", "rpc"), ("maxrpc", "pic"),
        ("sac", "maxrpc"), ("nic", "maxrpc"), ("spc", "sac"), ("srpc", "sac"),
    )
    down = {}
    for s, w in edges:
        down.setdefault(s, set()).add(w)
    grew = True
    while grew:
        grew = False
        for s, ws in down.items():
            extra = set().union(*(down.get(w, set()) for w in ws)) - ws
            if extra:
                ws |= extra
                grew = True
    return down


_KIND_DOWN = _closure_of_kinds()


def _is_stronger(s, w):
    """Does enforcing ``s`` always delete at least what ``w`` deletes?

    Equal-strength degenerate levels (1-rpc vs rpc, d-rpc vs maxrpc) count as
    stronger-or-equal here, which is all the containment soak needs.
    """
    if s == w:
        return False
    if s.kind == "krpc" and w.kind == "krpc":
        return s.k > w.k
    if s.kind == "krpc":
        return w.kind in ("rpc", "ac")
    if w.kind == "krpc":
        return s.kind == "maxrpc" or "maxrpc" in _KIND_DOWN.get(s.kind, set())
    return w.kind in _KIND_DOWN.get(s.kind, set())


def comparable_pairs(lcs):
    """(stronger, weaker) pairs among ``lcs`` under the transitive order."""
    return [(s, w) for s in lcs for w in lcs if _is_stronger(s, w)]


@dataclass
class LatticeReport:
    """Verdicts of one verification run."""

    instances: int = 0
    containment_failures: list = field(default_factory=list)
    identity_failures: list = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.containment_failures and not self.identity_failures


def check_instance(net, report, d):
    """Run every consistency on ``net`` and record containment or identity
    violations in ``report``."""
    ks = [k for k in (1, 2, 3, 4) if k <= d]
    lcs = [AC, RPC, MAXRPC, PIC, NIC, SAC, SRPC, SPC] + [krpc(k) for k in ks]
    final = {}
    for lc in lcs:
        state = net.full_state()
        enforce(net, state, lc)
        final[lc] = tuple(state.bits)
    for strong, weak in _strength_edges(d):
        sb, wb = final[strong], final[weak]
        if any(s & ~w for s, w in zip(sb, wb)):
            report.containment_failures.append(
                (strong.label(), weak.label(), serialize_instance(net))
            )
    if final[krpc(1)] != final[RPC]:
        report.identity_failures.append(("krpc1", "rpc", serialize_instance(net)))
    if final[krpc(d)] != final[MAXRPC]:
        report.identity_failures.append(
            (f"krpc{d}", "maxrpc", serialize_instance(net))
        )
    report.instances += 1


def sample_containments(samples, n=6, d=3, seed=0, report=None) -> LatticeReport:
    """Verify the containment table on seeded random instances spread over a
    density and tightness grid."""
    if report is None:
        report = LatticeReport()
    d2 = d * d
    combos = [(p1, f) for p1 in (0.4, 0.7, 1.0) for f in range(0, d2 + 1)]
    for t in range(samples):
        p1, f = combos[t % len(combos)]
        net = generate_model_b(GenSpec(n, d, p1, f / d2, derive_seed(seed, 1, t)))
        check_instance(net, report, d)
    return report


def find_witnesses(pairs, params=None, seed=0):
    """Run witness_search per (strong, weak) pair; returns {pair: net|None}."""
    if params is None:
        params = WitnessParams()
    out = {}
    for ix, (strong, weak) in enumerate(pairs):
        out[(strong, weak)] = witness_search(
            strong, weak, params, derive_seed(seed, 2, ix)
        )
    return out


def witness_pairs():
    """All required searches: strict edges plus both incomparable directions."""
    pairs = list(STRICT_EDGES)
    for a, b in INCOMPARABLE_PAIRS:
        pairs.append((a, b))
        pairs.append((b, a))
    return pairs
