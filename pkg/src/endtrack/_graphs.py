"""Small exact graph utilities shared across modules."""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, Hashable, Iterable, List, Sequence


def strongly_connected_components(adj: Dict[Hashable, Iterable[Hashable]]) -> List[set]:
    """Tarjan's algorithm, iterative."""
    index: Dict = {}
    low: Dict = {}
    onstack = set()
    stack: List = []
    out: List[set] = []
    counter = [0]

    for root in adj:
        if root in index:
            continue
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        onstack.add(root)
        work = [(root, iter(tuple(adj.get(root, ()))))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in adj:
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(tuple(adj.get(w, ())))))
                    advanced = True
                    break
                elif w in onstack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def simple_cycles_digraph(adj: Dict[Hashable, Sequence[Hashable]], cap: int | None = None):
    """All simple directed cycles, Johnson style.

    Yields each cycle as a list of nodes (starting node first).  ``cap``
    bounds the number of cycles; exceeding it raises RuntimeError.
    """
    G = {v: set(w for w in ws if w in adj) for v, ws in adj.items()}
    count = 0
    for v in sorted(G, key=repr):
        if v in G[v]:
            count += 1
            if cap is not None and count > cap:
                raise RuntimeError("cycle enumeration cap exceeded")
            yield [v]
            G[v].discard(v)

    def _unblock(node, blocked, B):
        st = {node}
        while st:
            n = st.pop()
            if n in blocked:
                blocked.remove(n)
                st.update(B[n])
                B[n].clear()

    sccs = [c for c in strongly_connected_components(G) if len(c) > 1]
    while sccs:
        scc = sccs.pop()
        sccG = {v: G[v] & scc for v in scc}
        startnode = min(scc, key=repr)
        path = [startnode]
        blocked = {startnode}
        closed: set = set()
        B = defaultdict(set)
        stack = [(startnode, sorted(sccG[startnode], key=repr))]
        while stack:
            thisnode, nbrs = stack[-1]
            if nbrs:
                nextnode = nbrs.pop()
                if nextnode == startnode:
                    count += 1
                    if cap is not None and count > cap:
                        raise RuntimeError("cycle enumeration cap exceeded")
                    yield path[:]
                    closed.update(path)
                elif nextnode not in blocked:
                    path.append(nextnode)
                    stack.append((nextnode, sorted(sccG[nextnode], key=repr)))
                    closed.discard(nextnode)
                    blocked.add(nextnode)
                    continue
            if not nbrs:
                if thisnode in closed:
                    _unblock(thisnode, blocked, B)
                else:
                    for nbr in sccG[thisnode]:
                        B[nbr].add(thisnode)
                stack.pop()
                path.pop()
        remain = scc - {startnode}
        H = {v: G[v] & remain for v in remain}
        sccs.extend(c for c in strongly_connected_components(H) if len(c) > 1)


def reachable_from(adj: Dict, sources: Iterable) -> set:
    seen = set()
    stack = list(sources)
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(adj.get(v, ()))
    return seen
