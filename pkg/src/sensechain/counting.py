"""Exact counts of the possible annotations of an n-sense word.

An annotation (ignoring features, splits, and virtual senses) is a forest of
rooted trees over the senses, with each non-root edge labelled by one of
``k_labels`` edge types. For a single tree on n nodes the count factors as
Cayley's n^(n-2) undirected trees, times k^(n-1) edge labellings, times n
root choices. Forests follow by summing over set partitions of the senses.

Everything uses Python's arbitrary-precision integers: the counts pass
64-bit range already at eleven senses of a hypothetical richer label set.
"""

from __future__ import annotations

import heapq
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Iterator

DEFAULT_CEILING = 300
ENUMERATION_LIMIT = 6

# A forest over senses 1..n is a tuple indexed by node-1 of (parent, label):
# parent is a 1-based node or None for roots, label is an int < k_labels or
# None for roots.
Forest = tuple[tuple[int | None, int | None], ...]


@lru_cache(maxsize=None)
def count_single_root(n: int, k_labels: int = 2) -> int:
    """Number of labelled rooted trees on n senses (single prototype)."""
    if n < 1:
        raise ValueError("a tree needs at least one sense")
    if k_labels < 1:
        raise ValueError("at least one edge label is required")
    if n == 1:
        return 1
    return n ** (n - 2) * k_labels ** (n - 1) * n


def count_total(n: int, k_labels: int = 2, ceiling: int = DEFAULT_CEILING) -> int:
    """Number of labelled rooted forests on n senses (homonymy allowed).

    Sums the per-partition tree products over all set partitions of the
    senses, grouped by block-size shape: an integer partition with m_s
    blocks of size s accounts for n! / prod(s!^m_s * m_s!) set partitions.
    """
    if n < 1:
        raise ValueError("a forest needs at least one sense")
    if n > ceiling:
        raise ValueError(f"n={n} exceeds the configured ceiling {ceiling}")
    total = 0
    for shape in _integer_partitions(n):
        ways = factorial(n)
        trees = 1
        for size, mult in shape.items():
            ways //= factorial(size) ** mult * factorial(mult)
            trees *= count_single_root(size, k_labels) ** mult
        total += ways * trees
    return total


def count_single_root_constructible(n: int) -> int:
    """Single-prototype trees buildable under the default interface rules.

    Without conduit overrides, metonyms attach only to the prototype and
    metaphors attach to anything that is not a metaphor, so: pick the root,
    pick which of the other senses are metonyms, and attach each remaining
    sense as a metaphor of the root or of one of the metonyms. Defined for
    the two-label scheme only.
    """
    if n < 1:
        raise ValueError("a tree needs at least one sense")
    return n * sum(
        comb(n - 1, j) * (1 + j) ** (n - 1 - j) for j in range(n)
    )


def count_total_constructible(n: int, ceiling: int = DEFAULT_CEILING) -> int:
    """Forests buildable under the default interface rules (no conduits)."""
    if n < 1:
        raise ValueError("a forest needs at least one sense")
    if n > ceiling:
        raise ValueError(f"n={n} exceeds the configured ceiling {ceiling}")
    total = 0
    for shape in _integer_partitions(n):
        ways = factorial(n)
        trees = 1
        for size, mult in shape.items():
            ways //= factorial(size) ** mult * factorial(mult)
            trees *= count_single_root_constructible(size) ** mult
        total += ways * trees
    return total


def round_significant(value: int, figures: int = 3) -> str:
    """Compact form with the given number of significant figures.

    Values that round within ``figures`` digits print as-is; larger ones
    print as ``mantissa x 10^e`` with an integer mantissa.
    """
    digits = len(str(value))
    if digits <= figures:
        return str(value)
    exponent = digits - figures
    mantissa = round(value / 10**exponent)
    if len(str(mantissa)) > figures:  # rounding overflowed, e.g. 9995 -> 100
        mantissa //= 10
        exponent += 1
    return f"{mantissa} x 10^{exponent}"


def set_partitions(items: list) -> Iterator[list[list]]:
    """All partitions of ``items`` via restricted-growth strings."""
    n = len(items)
    if n == 0:
        yield []
        return
    rgs = [0] * n

    def grow(i: int, blocks: int) -> Iterator[list[list]]:
        if i == n:
            out: list[list] = [[] for _ in range(blocks)]
            for idx, block in enumerate(rgs):
                out[block].append(items[idx])
            yield out
            return
        for b in range(blocks + 1):
            rgs[i] = b
            yield from grow(i + 1, blocks + 1 if b == blocks else blocks)

    rgs[0] = 0
    yield from grow(1, 1)


def enumerate_annotations(n: int, k_labels: int = 2) -> Iterator[Forest]:
    """Yield every labelled rooted forest on senses 1..n exactly once.

    Brute-force oracle for the counting formulas; refuses n beyond
    ``ENUMERATION_LIMIT`` (the stream length is count_total(n, k_labels)).
    """
    if n < 1:
        raise ValueError("a forest needs at least one sense")
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration is limited to n <= {ENUMERATION_LIMIT}")
    for blocks in set_partitions(list(range(1, n + 1))):
        per_block = [list(_block_trees(block, k_labels)) for block in blocks]
        for combo in product(*per_block):
            forest: list[tuple[int | None, int | None]] = [(None, None)] * n
            for block_assign in combo:
                for node, entry in block_assign.items():
                    forest[node - 1] = entry
            yield tuple(forest)


def _block_trees(block: list[int], k_labels: int) -> Iterator[dict[int, tuple[int | None, int | None]]]:
    """All labelled rooted trees on the given nodes, as parent/label maps."""
    s = len(block)
    if s == 1:
        yield {block[0]: (None, None)}
        return
    non_roots_order = sorted(block)
    for seq in product(block, repeat=s - 2):
        edges = _prufer_decode(list(seq), sorted(block))
        adj: dict[int, list[int]] = {v: [] for v in block}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        for root in block:
            parents: dict[int, int] = {}
            stack = [root]
            seen = {root}
            while stack:
                cur = stack.pop()
                for nxt in adj[cur]:
                    if nxt not in seen:
                        seen.add(nxt)
                        parents[nxt] = cur
                        stack.append(nxt)
            labelled_nodes = [v for v in non_roots_order if v != root]
            for labels in product(range(k_labels), repeat=s - 1):
                assign: dict[int, tuple[int | None, int | None]] = {root: (None, None)}
                for node, lab in zip(labelled_nodes, labels):
                    assign[node] = (parents[node], lab)
                yield assign


def _prufer_decode(seq: list[int], nodes: list[int]) -> list[tuple[int, int]]:
    """Undirected tree edges for a Prufer sequence over the given node set."""
    degree = {v: 1 for v in nodes}
    for v in seq:
        degree[v] += 1
    leaves = [v for v in nodes if degree[v] == 1]
    heapq.heapify(leaves)
    edges: list[tuple[int, int]] = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def _integer_partitions(n: int, maximum: int | None = None) -> Iterator[dict[int, int]]:
    """Integer partitions of n as {part_size: multiplicity} maps."""
    if n == 0:
        yield {}
        return
    maximum = min(maximum or n, n)
    for part in range(maximum, 0, -1):
        for rest in _integer_partitions(n - part, part):
            shape = dict(rest)
            shape[part] = shape.get(part, 0) + 1
            yield shape
