"""Seeded random binary networks with fixed constraint and conflict counts.

An instance with parameters (n, d, p1, p2, seed) has exactly
round(p1 * n(n-1)/2) distinct constraints drawn uniformly without replacement
over the variable pairs, and each constraint forbids exactly round(p2 * d^2)
distinct value pairs drawn uniformly without replacement.  Rounding is
half-up.  All randomness comes from a splitmix64 stream seeded only by the
spec, so equal specs give bit-identical networks on any platform; the OS RNG
is never consulted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import ConstraintNetwork, network_from_masks

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The splitmix64 sequence: state += golden gamma, output = mix(state)."""

    __slots__ = ("_s",)

    def __init__(self, seed):
        self._s = seed & _MASK64

    def next_u64(self):
        self._s = (self._s + _GAMMA) & _MASK64
        return _mix(self._s)

    def randrange(self, n):
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, population, k):
        """k distinct integers from range(population), sorted ascending.

        Partial Fisher-Yates over a virtual array, so the draw order is a
        pure function of the stream.
        """
        if k > population:
            raise ValueError("sample larger than population")
        swapped = {}
        out = []
        for t in range(k):
            r = t + self.randrange(population - t)
            out.append(swapped.get(r, r))
            swapped[r] = swapped.get(t, t)
        out.sort()
        return out


def derive_seed(master, *parts):
    """Deterministic child seed from a master seed and integer coordinates."""
    h = _mix((master & _MASK64) ^ 0xA0761D6478BD642F)
    for p in parts:
        h = _mix(h ^ ((p & _MASK64) * 0xE7037ED1A0B428DB & _MASK64))
    return h


def round_half_up(x) -> int:
    """Half-up rounding of a non-negative float (0.5 rounds to 1)."""
    return int(x + 0.5)


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one random instance."""

    n: int
    d: int
    p1: float
    p2: float
    seed: int

    def validate(self):
        if self.n < 2:
            raise ValueError("need at least two variables")
        if self.d < 1:
            raise ValueError("need at least one value per domain")
        if not 0.0 <= self.p1 <= 1.0:
            raise ValueError("density p1 must lie in [0, 1]")
        if not 0.0 <= self.p2 <= 1.0:
            raise ValueError("tightness p2 must lie in [0, 1]")


def generate_model_b(spec) -> ConstraintNetwork:
    """Build the instance determined by ``spec``."""
    spec.validate()
    n, d = spec.n, spec.d
    total_pairs = n * (n - 1) // 2
    e = round_half_up(spec.p1 * total_pairs)
    f = round_half_up(spec.p2 * d * d)
    rng = SplitMix64(spec.seed)

    pair_of = []
    for i in range(n):
        for j in range(i + 1, n):
            pair_of.append((i, j))
    chosen = rng.sample(total_pairs, e)

    universal = (1 << d) - 1
    masks = {}
    for idx in chosen:
        i, j = pair_of[idx]
        rows = [universal] * d
        for cell in rng.sample(d * d, f):
            a, b = divmod(cell, d)
            rows[a] &= ~(1 << b)
        masks[(i, j)] = rows

    domains = [tuple(range(d))] * n
    return network_from_masks(domains, masks)


@dataclass(frozen=True)
class ExperimentFamily:
    """A named (n, d, density) instance class; tightness stays the sweep
    variable.  ``p1`` is None when the density is swept too."""

    name: str
    n: int
    d: int
    p1: float | None


_FAMILIES = {
    "transition-40x15": ExperimentFamily("transition-40x15", 40, 15, None),
    "timing-200x30-sparse": ExperimentFamily("timing-200x30-sparse", 200, 30, 0.02),
    "timing-200x30-dense": ExperimentFamily("timing-200x30-dense", 200, 30, 0.15),
}


def spec_for_paper_experiment(name) -> ExperimentFamily:
    try:
        return _FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown experiment family {name!r}; known: {sorted(_FAMILIES)}"
        )
