"""Bitmask scan kernels shared by all filtering engines.

Domains are stored as integer bitmasks over initial-domain indices, and each
constraint row is the bitmask of allowed partners for one value.  Every kernel
returns, next to its result, the exact number of allowed-pair probes that the
equivalent ascending value-by-value scan would have made, so constraint-check
counts stay deterministic while the scan itself runs at bigint speed.

Scan discipline emulated by the counts:

* a support scan probes each value of the current domain in ascending index
  order and stops at the first allowed one;
* a witness scan probes the first constraint row for each candidate (one
  check) and, when that passes, probes the second row (a second check),
  stopping at the first candidate passing both.
"""


def first_support(row, dom):
    """Smallest index in ``row & dom`` plus the probe count of the scan.

    Returns ``(-1, popcount(dom))`` when there is no support: the scan probed
    every current value.  Otherwise every current value up to and including
    the support was probed once.
    """
    cand = row & dom
    if not cand:
        return -1, dom.bit_count()
    low = cand & -cand
    return low.bit_length() - 1, (dom & ((low << 1) - 1)).bit_count()


def supports_from(row, dom, start, want):
    """Collect up to ``want`` supports at index >= ``start``.

    Returns ``(found, probes, exhausted)``.  ``exhausted`` is True when the
    scan ran off the end of the domain, i.e. there are no further supports
    beyond the returned ones.
    """
    region = dom & (-1 << start)
    cand = row & region
    found = []
    while cand and len(found) < want:
        low = cand & -cand
        found.append(low.bit_length() - 1)
        cand ^= low
    if len(found) == want:
        last = 1 << found[-1]
        return found, (region & ((last << 1) - 1)).bit_count(), False
    return found, region.bit_count(), True


def witness_pair(row1, row2, dom):
    """Smallest index of ``dom`` allowed by both rows, with probe count.

    The emulated scan probes ``row1`` for every current value and ``row2``
    only for the values ``row1`` allows, stopping at the first common hit.
    """
    cand = row1 & row2 & dom
    if not cand:
        return -1, dom.bit_count() + (dom & row1).bit_count()
    low = cand & -cand
    pref = (low << 1) - 1
    return (
        low.bit_length() - 1,
        (dom & pref).bit_count() + (dom & row1 & pref).bit_count(),
    )


def iter_bits(mask):
    """Yield set-bit indices of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low
