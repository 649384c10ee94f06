"""Binary constraint networks with dense allowed-pair matrices.

A network is immutable once built: variables, initial domains, symmetric
binary constraints and the triangle index never change.  Values are handled
internally by their index in the initial domain ordering (0..d_i-1); the
external integer values only matter at the text-format and CLI boundaries.

The mutable part is :class:`DomainState`, one bitmask of surviving indices
per variable, which the filtering engines prune in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bitops import iter_bits


class NetworkError(ValueError):
    """Invalid network construction or an illegal constraint query."""


class ParseError(ValueError):
    """Malformed instance text."""


@dataclass
class CheckCounter:
    """Counts allowed-pair probes; one increment per probe."""

    count: int = 0

    def bump(self):
        self.count += 1

    def add(self, n):
        self.count += n


@dataclass
class DomainState:
    """Current domains as per-variable bitmasks over initial-domain indices."""

    bits: list[int]

    def copy(self) -> "DomainState":
        return DomainState(list(self.bits))

    @property
    def wipeout(self) -> bool:
        return any(b == 0 for b in self.bits)

    def size(self, i) -> int:
        return self.bits[i].bit_count()

    def total_size(self) -> int:
        return sum(b.bit_count() for b in self.bits)

    def contains_index(self, i, ai) -> bool:
        return bool(self.bits[i] >> ai & 1)


@dataclass(frozen=True)
class CliqueIndex:
    """Triangles of the constraint graph.

    ``triples`` lists each 3-clique once as an ascending (i, j, k) tuple.
    ``thirds`` maps each constrained pair (i < j) to the ascending tuple of
    variables completing a triangle with it.  ``var_pairs`` maps a variable x
    to the (u, v) constraint pairs such that {u, v, x} is a triangle, which is
    the trigger set the engines walk when x's domain shrinks.
    """

    triples: tuple[tuple[int, int, int], ...]
    thirds: dict[tuple[int, int], tuple[int, ...]] = field(repr=False)
    var_pairs: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)

    def __len__(self):
        return len(self.triples)


class ConstraintNetwork:
    """Immutable binary constraint network.

    Use :func:`build_network`, :func:`parse_instance` or the generator to
    construct one; the constructor itself trusts its arguments.
    """

    __slots__ = (
        "n", "domains", "pairs", "neighbors", "cliques",
        "_pos", "_rows", "_pairset",
    )

    def __init__(self, domains, pairs, rows):
        self.n = len(domains)
        self.domains = tuple(tuple(d) for d in domains)
        self.pairs = tuple(pairs)
        self._pairset = frozenset(self.pairs)
        self._pos = tuple({v: ix for ix, v in enumerate(d)} for d in self.domains)
        self._rows = rows
        adj = [[] for _ in range(self.n)]
        for i, j in self.pairs:
            adj[i].append(j)
            adj[j].append(i)
        self.neighbors = tuple(tuple(sorted(a)) for a in adj)
        self.cliques = self._build_cliques()

    # -- construction helpers -------------------------------------------

    def _build_cliques(self):
        nbm = [0] * self.n
        for i, j in self.pairs:
            nbm[i] |= 1 << j
            nbm[j] |= 1 << i
        triples = []
        thirds = {}
        var_pairs = [[] for _ in range(self.n)]
        for i, j in self.pairs:
            common = nbm[i] & nbm[j]
            ts = tuple(iter_bits(common))
            thirds[(i, j)] = ts
            for k in ts:
                if k > j:
                    triples.append((i, j, k))
                var_pairs[k].append((i, j))
        return CliqueIndex(
            triples=tuple(triples),
            thirds=thirds,
            var_pairs=tuple(tuple(sorted(v)) for v in var_pairs),
        )

    # -- queries ---------------------------------------------------------

    @property
    def e(self) -> int:
        return len(self.pairs)

    @property
    def g(self) -> int:
        return max((len(a) for a in self.neighbors), default=0)

    @property
    def c(self) -> int:
        return len(self.cliques)

    def domain_size(self, i) -> int:
        return len(self.domains[i])

    def has_constraint(self, i, j) -> bool:
        return (min(i, j), max(i, j)) in self._pairset

    def rows(self, i, j):
        """Allowed-partner masks over D_j, one per value index of D_i."""
        try:
            return self._rows[(i, j)]
        except KeyError:
            raise NetworkError(f"no constraint between variables {i} and {j}")

    def thirds(self, i, j):
        return self.cliques.thirds[(min(i, j), max(i, j))]

    def index_of(self, i, value) -> int:
        try:
            return self._pos[i][value]
        except KeyError:
            raise NetworkError(f"value {value} not in initial domain of variable {i}")

    def value_of(self, i, ai) -> int:
        return self.domains[i][ai]

    def full_state(self) -> DomainState:
        return DomainState([(1 << len(d)) - 1 for d in self.domains])

    def state_values(self, state, i):
        """Surviving external values of variable i under ``state``."""
        dom = self.domains[i]
        return tuple(dom[ai] for ai in iter_bits(state.bits[i]))


def build_network(var_count, domains, constraint_list) -> ConstraintNetwork:
    """Validate and build a network from explicit allowed-pair lists.

    ``constraint_list`` holds (i, j, pairs) entries where ``pairs`` iterates
    over allowed (value_i, value_j) tuples in external values.
    """
    if var_count < 1:
        raise NetworkError("need at least one variable")
    if len(domains) != var_count:
        raise NetworkError("domain count does not match variable count")
    doms = []
    for i, d in enumerate(domains):
        d = tuple(d)
        if not d:
            raise NetworkError(f"empty initial domain for variable {i}")
        if any(d[t] >= d[t + 1] for t in range(len(d) - 1)):
            raise NetworkError(f"domain of variable {i} must be strictly increasing")
        doms.append(d)
    pos = [{v: ix for ix, v in enumerate(d)} for d in doms]

    rows = {}
    pairs = []
    seen = set()
    for i, j, allowed in constraint_list:
        if not (0 <= i < var_count and 0 <= j < var_count):
            raise NetworkError(f"constraint ({i},{j}) references an unknown variable")
        if i == j:
            raise NetworkError(f"self-loop constraint on variable {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise NetworkError(f"duplicate constraint on pair {key}")
        seen.add(key)
        lo, hi = key
        fwd = [0] * len(doms[lo])
        rev = [0] * len(doms[hi])
        for va, vb in allowed:
            if i > j:
                va, vb = vb, va
            try:
                ai = pos[lo][va]
                bj = pos[hi][vb]
            except KeyError:
                raise NetworkError(
                    f"pair ({va},{vb}) out of range for constraint {key}"
                )
            fwd[ai] |= 1 << bj
            rev[bj] |= 1 << ai
        rows[(lo, hi)] = fwd
        rows[(hi, lo)] = rev
        pairs.append(key)
    return ConstraintNetwork(doms, sorted(pairs), rows)


def network_from_masks(domains, pair_masks) -> ConstraintNetwork:
    """Fast constructor from pre-built row masks keyed by (i, j) with i < j."""
    rows = {}
    pairs = []
    for (i, j), fwd in pair_masks.items():
        dj = len(domains[j])
        rev = [0] * dj
        for ai, row in enumerate(fwd):
            m = row
            while m:
                low = m & -m
                rev[low.bit_length() - 1] |= 1 << ai
                m ^= low
        rows[(i, j)] = list(fwd)
        rows[(j, i)] = rev
        pairs.append((i, j))
    return ConstraintNetwork(domains, sorted(pairs), rows)


def allows(net, i, a, j, b, counter=None) -> bool:
    """One counted allowed-pair query in external values.

    Querying an unconstrained pair raises :class:`NetworkError`; it never
    silently reads as True or False.
    """
    row = net.rows(i, j)[net.index_of(i, a)]
    bj = net.index_of(j, b)
    if counter is not None:
        counter.bump()
    return bool(row >> bj & 1)


def three_cliques(net) -> CliqueIndex:
    """Exact triangle enumeration of the constraint graph."""
    return net.cliques


def restrict_to_singleton(net, state, i, a) -> DomainState:
    """Fresh state equal to ``state`` except D_i = {a}; the input is untouched."""
    ai = net.index_of(i, a)
    if not state.bits[i] >> ai & 1:
        raise NetworkError(f"value {a} not in current domain of variable {i}")
    out = state.copy()
    out.bits[i] = 1 << ai
    return out


# -- canonical instance text format -------------------------------------
#
#   vars <n>
#   dom <i> <v1> <v2> ...          one line per variable, ascending i
#   con <i> <j> all|none|allow a:b ...|forbid a:b ...
#
# '#' starts a comment, blank lines are skipped, anything else is an error.


def parse_instance(text) -> ConstraintNetwork:
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.append((lineno, line.split()))

    if not tokens:
        raise ParseError("empty instance")

    def fail(lineno, msg):
        raise ParseError(f"line {lineno}: {msg}")

    lineno, head = tokens[0]
    if head[0] != "vars" or len(head) != 2:
        fail(lineno, "expected 'vars <n>'")
    try:
        n = int(head[1])
    except ValueError:
        fail(lineno, "variable count must be an integer")
    if n < 1:
        fail(lineno, "need at least one variable")

    if len(tokens) < 1 + n:
        raise ParseError("missing domain lines")
    domains = []
    for i in range(n):
        lineno, parts = tokens[1 + i]
        if parts[0] != "dom":
            fail(lineno, f"expected 'dom {i} ...'")
        try:
            ident = int(parts[1])
            values = [int(p) for p in parts[2:]]
        except (ValueError, IndexError):
            fail(lineno, "malformed dom line")
        if ident != i:
            fail(lineno, f"domain lines must appear in order; expected variable {i}")
        if not values:
            fail(lineno, f"empty initial domain for variable {i}")
        if any(values[t] >= values[t + 1] for t in range(len(values) - 1)):
            fail(lineno, "domain values must be strictly increasing")
        domains.append(values)

    constraints = []
    for lineno, parts in tokens[1 + n:]:
        if parts[0] != "con":
            fail(lineno, f"unknown directive {parts[0]!r}")
        if len(parts) < 4:
            fail(lineno, "expected 'con <i> <j> <pairs>'")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError:
            fail(lineno, "constraint endpoints must be integers")
        mode = parts[3]
        body = parts[4:]
        if mode in ("all", "none"):
            if body:
                fail(lineno, f"'{mode}' takes no pair list")
            if not (0 <= i < n and 0 <= j < n):
                fail(lineno, "constraint references an unknown variable")
            if mode == "all":
                pairs = [(va, vb) for va in domains[i] for vb in domains[j]]
            else:
                pairs = []
        elif mode in ("allow", "forbid"):
            if not body:
                fail(lineno, f"'{mode}' needs at least one a:b pair")
            listed = []
            seen = set()
            for tok in body:
                try:
                    sa, sb = tok.split(":")
                    va, vb = int(sa), int(sb)
                except ValueError:
                    fail(lineno, f"malformed pair token {tok!r}")
                if (va, vb) in seen:
                    fail(lineno, f"duplicate pair {tok}")
                seen.add((va, vb))
                listed.append((va, vb))
            if mode == "allow":
                pairs = listed
            else:
                if not (0 <= i < n and 0 <= j < n):
                    fail(lineno, "constraint references an unknown variable")
                forb = set(listed)
                for va, vb in listed:
                    if va not in set(domains[i]) or vb not in set(domains[j]):
                        fail(lineno, f"pair {va}:{vb} out of range")
                pairs = [
                    (va, vb)
                    for va in domains[i]
                    for vb in domains[j]
                    if (va, vb) not in forb
                ]
        else:
            fail(lineno, f"unknown pair mode {mode!r}")
        constraints.append((i, j, pairs))

    try:
        return build_network(n, domains, constraints)
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


def serialize_instance(net, state=None) -> str:
    """Canonical text form; with ``state``, only surviving values are emitted.

    Raises :class:`NetworkError` when some current domain is empty, since the
    format cannot represent a variable without values.
    """
    if state is None:
        state = net.full_state()
    if state.wipeout:
        raise NetworkError("cannot serialize a wiped-out state")
    lines = [f"vars {net.n}"]
    for i in range(net.n):
        vals = " ".join(str(v) for v in net.state_values(state, i))
        lines.append(f"dom {i} {vals}")
    for i, j in net.pairs:
        rows = net.rows(i, j)
        ai_list = list(iter_bits(state.bits[i]))
        bj_list = list(iter_bits(state.bits[j]))
        allowed = []
        forbidden = []
        for ai in ai_list:
            row = rows[ai]
            for bj in bj_list:
                pair = (net.value_of(i, ai), net.value_of(j, bj))
                if row >> bj & 1:
                    allowed.append(pair)
                else:
                    forbidden.append(pair)
        total = len(ai_list) * len(bj_list)
        if len(allowed) == total:
            body = "all"
        elif not allowed:
            body = "none"
        elif len(allowed) <= len(forbidden):
            body = "allow " + " ".join(f"{a}:{b}" for a, b in allowed)
        else:
            body = "forbid " + " ".join(f"{a}:{b}" for a, b in forbidden)
        lines.append(f"con {i} {j} {body}")
    return "\n".join(lines) + "\n"
