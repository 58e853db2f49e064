"""Canonical relabeling of tracks and carried data.

Stops and boundary circles keep their identities (tracks are compared
rel stops); branches and switches receive fresh ids ``b0, b1, ...`` and
``s0, s1, ...`` assigned by a breadth-first traversal seeded at the
least stop, and every branch is reoriented so that its first-reached
end becomes end 0.  Stopless components are canonicalized by minimizing
over all seeds and circle orientations, with the lamination data as a
tie-break, so equal encodings mean isomorphic-rel-stops carried pairs.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .routes import Route, least_rotation
from .track import TrainTrack, _key


def _components(t: TrainTrack) -> List[set]:
    adj: Dict[object, set] = {("b", b): set() for b in t.branches}
    for sid in t.switches:
        adj[("s", sid)] = set()
    for (bid, end), tgt in t.attach.items():
        if tgt[0] == "switch":
            adj[("b", bid)].add(("s", tgt[1]))
            adj[("s", tgt[1])].add(("b", bid))
    comps = []
    seen = set()
    for node in sorted(adj, key=_key):
        if node in seen:
            continue
        comp, stack = set(), [node]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            comp.add(v)
            stack.extend(adj[v])
        comps.append(comp)
    return comps


def _bfs(t: TrainTrack, seeds, comp, circ_orients=None):
    """Assign local indices and orientations by BFS from the seed end
    list.  Seeds and queue entries are arrival ends (bid, end)."""
    bmap: Dict[object, int] = {}
    omap: Dict[object, int] = {}
    smap: Dict[object, int] = {}
    queue: List[Tuple[object, int]] = list(seeds)
    qi = 0

    def visit_branch(bid, arrival_end):
        if bid not in bmap:
            bmap[bid] = len(bmap)
            if bid in t.circular:
                omap[bid] = (circ_orients or {}).get(bid, 1)
            else:
                omap[bid] = 1 if arrival_end == 0 else -1
                other = (bid, 1 - arrival_end)
                tgt = t.attach.get(other)
                if tgt is not None and tgt[0] == "switch":
                    queue.append(other)

    def visit_switch(sid):
        if sid not in smap:
            smap[sid] = len(smap)
            for slot in ("one", "left", "right"):
                b2, e2 = t.switches[sid][slot]
                queue.append((b2, e2))

    while qi < len(queue):
        bid, end = queue[qi]
        qi += 1
        if ("b", bid) not in comp:
            continue
        visit_branch(bid, end)
        tgt = t.attach.get((bid, end))
        if tgt is not None and tgt[0] == "switch":
            visit_switch(tgt[1])
    for node in sorted(comp, key=_key):
        if node[0] == "b":
            visit_branch(node[1], 0)
        else:
            visit_switch(node[1])
    return bmap, omap, smap


def _norm_end(end, omap):
    bid, e = end
    return (bid, e if omap[bid] == 1 else 1 - e)


def _encode(t: TrainTrack, bmap, omap, smap) -> tuple:
    rows = []
    for bid, i in sorted(bmap.items(), key=lambda kv: kv[1]):
        if bid in t.circular:
            rows.append((i, "circ"))
            continue
        ends = []
        for e in (0, 1):
            raw = e if omap[bid] == 1 else 1 - e
            tgt = t.attach[(bid, raw)]
            if tgt[0] == "switch":
                ends.append(("sw", smap[tgt[1]], tgt[2]))
            else:
                ends.append(("stop", _key(tgt[1])))
        rows.append((i, tuple(ends)))
    return tuple(rows)


def _rename_step(step, bmap, omap):
    b, s = step
    return (bmap[b], s * omap[b])


def _encode_route(r: Route, bmap, omap) -> tuple:
    if r.cycle and not r.prefix:
        cyc = least_rotation(tuple(_rename_step(s, bmap, omap) for s in r.cycle))
        return ((), cyc, r.terminal)
    return (
        tuple(_rename_step(s, bmap, omap) for s in r.prefix),
        tuple(_rename_step(s, bmap, omap) for s in r.cycle),
        r.terminal,
    )


def _encode_lam(lam, bmap, omap, smap) -> tuple:
    if lam is None:
        return ()
    cusp = []
    for sid, pair in sorted(lam.cusp_data.items(), key=lambda kv: smap[kv[0]]):
        cusp.append((smap[sid], tuple(_encode_route(r, bmap, omap) for r in pair)))
    closed = tuple(sorted(
        least_rotation(tuple(_rename_step(s, bmap, omap) for s in r.cycle))
        for r in lam.closed_classes
    ))
    assoc = tuple(
        sorted((_key(v), tuple(sorted(map(_key, labels))))
               for v, labels in lam.stop_association.items())
    )
    weights = ()
    if lam.weights:
        weights = tuple(sorted((bmap[b], str(w)) for b, w in lam.weights.items() if b in bmap))
    return (tuple(cusp), closed, assoc, weights)


def _comp_lam_enc(t, lam, comp, bmap, omap, smap):
    if lam is None:
        return ()
    cusp = []
    for sid, pair in lam.cusp_data.items():
        if ("s", sid) in comp:
            cusp.append((smap[sid], tuple(_encode_route(r, bmap, omap) for r in pair)))
    cusp.sort()
    closed = []
    for r in lam.closed_classes:
        if all(("b", b) in comp for b, _ in r.cycle):
            closed.append(least_rotation(tuple(_rename_step(s, bmap, omap) for s in r.cycle)))
    return (tuple(cusp), tuple(sorted(closed)))


def canonical_maps(t: TrainTrack, lam=None):
    """Global renaming maps (branch index, orientation, switch index)."""
    comps = _components(t)
    with_stops = []
    without = []
    for comp in comps:
        stop_keys = []
        for node in comp:
            if node[0] != "b" or node[1] in t.circular:
                continue
            for e in (0, 1):
                tgt = t.attach[(node[1], e)]
                if tgt[0] == "stop":
                    stop_keys.append(_key(tgt[1]))
        if stop_keys:
            with_stops.append((min(stop_keys), comp))
        else:
            without.append(comp)
    results = []
    for least_stop, comp in sorted(with_stops, key=lambda x: x[0]):
        stop_ends = []
        for node in comp:
            if node[0] != "b" or node[1] in t.circular:
                continue
            for e in (0, 1):
                tgt = t.attach[(node[1], e)]
                if tgt[0] == "stop":
                    stop_ends.append((_key(tgt[1]), (node[1], e)))
        seeds = [se for _, se in sorted(stop_ends, key=lambda x: x[0])]
        bmap, omap, smap = _bfs(t, seeds, comp)
        lamenc = _comp_lam_enc(t, lam, comp, bmap, omap, smap)
        enc = _encode_comp(t, comp, bmap, omap, smap)
        results.append(((0, least_stop, enc, lamenc), bmap, omap, smap, enc, lamenc))
    for comp in without:
        best = None
        branch_nodes = sorted((n[1] for n in comp if n[0] == "b"), key=_key)
        cands = []
        for b in branch_nodes:
            if b in t.circular:
                cands.append(([(b, 0)], {b: 1}))
                cands.append(([(b, 0)], {b: -1}))
            else:
                cands.append(([(b, 0)], None))
                cands.append(([(b, 1)], None))
        for seeds, co in cands:
            bmap, omap, smap = _bfs(t, seeds, comp, co)
            lamenc = _comp_lam_enc(t, lam, comp, bmap, omap, smap)
            enc = _encode_comp(t, comp, bmap, omap, smap)
            cand = ((enc, lamenc), bmap, omap, smap, enc, lamenc)
            if best is None or cand[0] < best[0]:
                best = cand
        results.append(((1,) + best[0],) + best[1:])
    results.sort(key=lambda r: r[0])
    bmap_all: Dict[object, int] = {}
    omap_all: Dict[object, int] = {}
    smap_all: Dict[object, int] = {}
    encs = []
    for _, bmap, omap, smap, enc, lamenc in results:
        boff, soff = len(bmap_all), len(smap_all)
        for b, i in bmap.items():
            bmap_all[b] = i + boff
        omap_all.update(omap)
        for s, i in smap.items():
            smap_all[s] = i + soff
        encs.append((enc, lamenc))
    return bmap_all, omap_all, smap_all, tuple(encs)


def _encode_comp(t, comp, bmap, omap, smap):
    rows = []
    for bid, i in sorted(bmap.items(), key=lambda kv: kv[1]):
        if ("b", bid) not in comp:
            continue
        if bid in t.circular:
            rows.append((i, "circ"))
            continue
        ends = []
        for e in (0, 1):
            raw = e if omap[bid] == 1 else 1 - e
            tgt = t.attach[(bid, raw)]
            if tgt[0] == "switch":
                ends.append(("sw", smap[tgt[1]], tgt[2]))
            else:
                ends.append(("stop", _key(tgt[1])))
        rows.append((i, tuple(ends)))
    return tuple(rows)


def canonical_form(t: TrainTrack, lam=None) -> tuple:
    """Hashable canonical encoding of a (track, lamination) pair rel stops."""
    bmap, omap, smap, _ = canonical_maps(t, lam)
    track_enc = _encode(t, bmap, omap, smap)
    bnd = tuple(sorted((_key(c), tuple(map(_key, v))) for c, v in t.boundary.items()))
    sfc = tuple(sorted(map(_key, t.stop_free_circles)))
    lam_enc = _encode_lam(lam, bmap, omap, smap) if lam is not None else ()
    return (track_enc, bnd, sfc, lam_enc)


def apply_renaming(t: TrainTrack, lam, bmap, omap, smap):
    """Rebuild the pair with fresh names 'b<i>'/'s<i>' per the maps."""
    bname = {b: f"b{i}" for b, i in bmap.items()}
    sname = {s: f"s{i}" for s, i in smap.items()}
    attach = {}
    for (bid, end), tgt in t.attach.items():
        e2 = end if omap[bid] == 1 else 1 - end
        if tgt[0] == "switch":
            attach[(bname[bid], e2)] = ("switch", sname[tgt[1]], tgt[2])
        else:
            attach[(bname[bid], e2)] = tgt
    t2 = TrainTrack(
        branches=[bname[b] for b in t.branches],
        circular=[bname[b] for b in t.circular],
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    lam2 = lam.rename_oriented(bname, {b: omap[b] for b in bmap}, sname) if lam is not None else None
    return t2, lam2


def canonicalize(t: TrainTrack, lam=None):
    bmap, omap, smap, _ = canonical_maps(t, lam)
    return apply_renaming(t, lam, bmap, omap, smap)


def canonically_equal(t1: TrainTrack, lam1, t2: TrainTrack, lam2) -> bool:
    return canonical_form(t1, lam1) == canonical_form(t2, lam2)
