"""Pure-Python layer kernels; reference semantics for the compiled backend.

Layer states are plain ints (MISP bitmasks) or int tuples of length ``n``
(MCP sigma vectors, zero at placed vertices).  Values are model-unit ints.
The node order of an output layer is unspecified; every kernel result
depends only on the multiset of ``(state, value)`` pairs of its input.
"""

EXACT, RELAXED, RESTRICTED = 0, 1, 2


def _cap_misp(nodes, mode, width):
    nodes.sort(key=lambda sv: (-sv[1], sv[0]))
    if mode == RESTRICTED:
        return nodes[:width]
    keep, victims = nodes[: width - 1], nodes[width - 1:]
    union = 0
    for s, _ in victims:
        union |= s
    keep.append((union, victims[0][1]))
    return keep


def misp_expand(states, values, v, nbr, mode, width):
    bit = 1 << v
    drop = bit | nbr
    best = {}
    get = best.get
    for s, val in zip(states, values):
        c = s & ~bit
        if get(c, -1) < val:
            best[c] = val
        if s & bit:
            c = s & ~drop
            if get(c, -1) < val + 1:
                best[c] = val + 1
    if mode != EXACT and len(best) > width:
        nodes = _cap_misp(list(best.items()), mode, width)
        return [s for s, _ in nodes], [val for _, val in nodes]
    return list(best.keys()), list(best.values())


def misp_counts(states, n):
    counts = [0] * n
    for s in states:
        while s:
            low = s & -s
            counts[low.bit_length() - 1] += 1
            s ^= low
    return counts


def _merge_sigma(rows):
    n = len(rows[0])
    merged = [0] * n
    for k in range(n):
        lo = hi = rows[0][k]
        for r in rows:
            x = r[k]
            if x < lo:
                lo = x
            elif x > hi:
                hi = x
        if lo >= 0:
            merged[k] = lo
        elif hi <= 0:
            merged[k] = hi
    return tuple(merged)


def mcp_expand(states, values, v, wrow, placed_weight, first, mode, width):
    """Expand an MCP layer on vertex ``v``.

    ``wrow`` holds the weights from ``v`` and must be zero at placed vertices.
    """
    best = {}
    get = best.get
    for s, val in zip(states, values):
        sv = s[v]
        if not first:
            c = [x + w for x, w in zip(s, wrow)]
            c[v] = 0
            c = tuple(c)
            nv = val + placed_weight - sv
            if get(c, nv - 1) < nv:
                best[c] = nv
        c = [x - w for x, w in zip(s, wrow)]
        c[v] = 0
        c = tuple(c)
        nv = val + placed_weight + sv
        if get(c, nv - 1) < nv:
            best[c] = nv
    if mode != EXACT and len(best) > width:
        nodes = sorted(best.items(), key=lambda sv: (-sv[1], sv[0]))
        if mode == RESTRICTED:
            nodes = nodes[:width]
        else:
            keep, victims = nodes[: width - 1], nodes[width - 1:]
            merged = _merge_sigma([s for s, _ in victims])
            absm = sum(abs(x) for x in merged)
            val = max(val + sum(abs(x) for x in s) - absm for s, val in victims)
            keep.append((merged, val))
            nodes = keep
        return [s for s, _ in nodes], [val for _, val in nodes]
    return list(best.keys()), list(best.values())


def mcp_root(n):
    return [tuple([0] * n)], [0]


def misp_root(n):
    return [(1 << n) - 1], [0]
