r"""
The raw move calculus: splits, collisions, folds, shifts.

Each move rewrites the ribbon structure and produces a transport table
mapping directed traversals of the affected branches to traversals in
the new track.  Transport is the entire computational content of "the
splitting also fully carries the lamination": every route (cusp rays,
closed classes, weight vectors, carried paths) is pushed through the
same tables.

Conventions.  A large branch ``b`` has end 0 at switch ``A`` and end 1
at switch ``B``.  Looking along ``b`` from ``A`` to ``B`` with the
surface orientation, the same-side leg pairs are (A.left, B.right) and
(A.right, B.left).  A split is RIGHT when the cusp routes continue into
the right slots, LEFT when into the left slots, COLLISION when both
cusp routes stop at ``b``.  The new small branch ``d`` always runs from
``P`` (the persona of ``A``) to ``Q`` (the persona of ``B``) as end 0
to end 1; the strip between the opened cusp gaps traverses it Q to P.

Transport is "anchored": each input position produces a list of output
steps, decided from at most one neighbor on each side.  This makes the
rewriting of eventually periodic words exact: a cycle is rewritten with
cyclic context and a prefix with the start of the cycle as its right
context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .routes import Route, Step, rev_step
from .track import LARGE, MIXED, TrainTrack, _key

RIGHT = "RIGHT"
LEFT = "LEFT"
COLLISION = "COLLISION"


class MoveError(ValueError):
    pass


def _fresh(t: TrainTrack, base: str, taken=()) -> str:
    i = 0
    names = {str(x) for x in t.branches} | {str(x) for x in t.switches} | set(map(str, taken))
    while f"{base}{i}" in names:
        i += 1
    return f"{base}{i}"


@dataclass
class MoveRecord:
    kind: str
    branch: object
    A: object = None
    B: object = None
    P: object = None
    Q: object = None
    d: object = None
    legs: dict = field(default_factory=dict)  # {"aL": (bid,end), ...}
    chains: dict = field(default_factory=dict)  # collision: new bid -> data
    switch_map: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def rename_switch(self, sid):
        return self.switch_map.get(sid, sid)


def _end_step_away(end: Tuple[object, int]) -> Step:
    """Step traversing the branch of ``end`` away from that end."""
    bid, e = end
    return (bid, 1 if e == 0 else -1)


def _end_step_toward(end: Tuple[object, int]) -> Step:
    bid, e = end
    return (bid, -1 if e == 0 else 1)


# ---------------------------------------------------------------------------
# splits


def _split_data(t: TrainTrack, b):
    if t.classify_branch(b) != LARGE:
        raise MoveError(f"branch {b!r} is not large")
    _, A, _ = t.attach[(b, 0)]
    _, B, _ = t.attach[(b, 1)]
    if A == B:
        raise MoveError("degenerate split: large branch is a loop")
    aL = t.switches[A]["left"]
    aR = t.switches[A]["right"]
    bL = t.switches[B]["left"]
    bR = t.switches[B]["right"]
    return A, B, aL, aR, bL, bR


def split_track(t: TrainTrack, b, kind: str):
    """Apply a split of the given kind; returns (track', MoveRecord)."""
    A, B, aL, aR, bL, bR = _split_data(t, b)
    if kind == COLLISION:
        return _collision(t, b, A, B, aL, aR, bL, bR)
    if kind not in (LEFT, RIGHT):
        raise MoveError(f"unknown split kind {kind!r}")
    P = _fresh(t, "s")
    Q = _fresh(t, "s", taken=[P])
    d = _fresh(t, "b")
    attach = {k: v for k, v in t.attach.items() if k[0] != b}
    if kind == RIGHT:
        # P: one=bR, left=aL, right=d ; Q: one=aR, left=bL, right=d
        attach[bR] = ("switch", P, "one")
        attach[aL] = ("switch", P, "left")
        attach[(d, 0)] = ("switch", P, "right")
        attach[aR] = ("switch", Q, "one")
        attach[bL] = ("switch", Q, "left")
        attach[(d, 1)] = ("switch", Q, "right")
    else:
        # LEFT: P: one=bL, right=aR, left=d ; Q: one=aL, right=bR, left=d
        attach[bL] = ("switch", P, "one")
        attach[aR] = ("switch", P, "right")
        attach[(d, 0)] = ("switch", P, "left")
        attach[aL] = ("switch", Q, "one")
        attach[bR] = ("switch", Q, "right")
        attach[(d, 1)] = ("switch", Q, "left")
    t2 = TrainTrack(
        branches=(t.branches - {b}) | {d},
        circular=t.circular,
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    rec = MoveRecord(
        kind=kind, branch=b, A=A, B=B, P=P, Q=Q, d=d,
        legs={"aL": aL, "aR": aR, "bL": bL, "bR": bR},
        switch_map={A: P, B: Q},
    )
    return t2, rec


def _collision(t: TrainTrack, b, A, B, aL, aR, bL, bR):
    # fuse the same-side leg pairs: (A.left, B.right) and (A.right, B.left)
    joins = [(aL, bR), (aR, bL)]
    glue: Dict[Tuple[object, int], Tuple[object, int]] = {}
    for e1, e2 in joins:
        if e1 == e2:
            raise MoveError("degenerate collision")
        glue[e1] = e2
        glue[e2] = e1
    involved = {e[0] for pr in joins for e in pr}
    segs = t.branches - {b}
    attach: Dict[Tuple[object, int], Tuple] = {}
    branches = set()
    circular_new = set(t.circular)
    seg_map: Dict[Step, Tuple[object, int, int]] = {}
    chains: Dict[object, dict] = {}
    taken: List[str] = []
    for bid in sorted(segs - involved, key=_key):
        branches.add(bid)
        if bid in t.circular:
            continue
        for e in (0, 1):
            attach[(bid, e)] = t.attach[(bid, e)]
    done = set()

    def record_chain(chain, start_end=None, last_end=None, circ=False):
        name = _fresh(t, "f", taken=taken)
        taken.append(name)
        branches.add(name)
        if circ:
            circular_new.add(name)
        else:
            attach[(name, 0)] = t.attach[start_end]
            attach[(name, 1)] = t.attach[last_end]
        for pos, (sid_, dr) in enumerate(chain):
            seg_map[(sid_, dr)] = (name, 1, pos)
            seg_map[(sid_, -dr)] = (name, -1, len(chain) - 1 - pos)
        chains[name] = {"chain": tuple(chain), "circular": circ}

    # open chains, walked from each free end of an involved segment
    free_ends = []
    for bid in sorted(involved, key=_key):
        for e in (0, 1):
            if (bid, e) not in glue:
                free_ends.append((bid, e))
    for start in sorted(free_ends, key=_key):
        if start[0] in done:
            continue
        chain = []
        cur = start
        while True:
            bid, e = cur
            chain.append((bid, 1 if e == 0 else -1))
            done.add(bid)
            other = (bid, 1 - e)
            if other in glue:
                cur = glue[other]
            else:
                record_chain(chain, start_end=start, last_end=other)
                break
    # closed chains
    for bid in sorted(involved, key=_key):
        if bid in done:
            continue
        chain = []
        cur = (bid, 0)
        while True:
            bd, e = cur
            chain.append((bd, 1 if e == 0 else -1))
            done.add(bd)
            cur = glue[(bd, 1 - e)]
            if cur == (bid, 0):
                break
        record_chain(chain, circ=True)
    t2 = TrainTrack(
        branches=branches,
        circular=circular_new & branches,
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    rec = MoveRecord(
        kind=COLLISION, branch=b, A=A, B=B,
        legs={"aL": aL, "aR": aR, "bL": bL, "bR": bR},
        chains=chains,
        extra={"seg_map": seg_map},
    )
    return t2, rec


# ---------------------------------------------------------------------------
# shift


def shift_track(t: TrainTrack, m):
    """Shift along a mixed branch ``m`` joining two switches."""
    if t.classify_branch(m) != MIXED:
        raise MoveError(f"branch {m!r} is not mixed")
    t0 = t.attach[(m, 0)]
    t1 = t.attach[(m, 1)]
    if t0[0] != "switch" or t1[0] != "switch":
        raise MoveError("shift needs both ends at switches")
    if t0[2] == "one":
        B, Aslot = t0[1], t1[2]
        A = t1[1]
        m_end_A, m_end_B = (m, 1), (m, 0)
    else:
        A, Aslot = t0[1], t0[2]
        B = t1[1]
        m_end_A, m_end_B = (m, 0), (m, 1)
        if t1[2] != "one":
            raise MoveError("mixed branch without a one-slot end")
    if A == B:
        raise MoveError("degenerate shift: mixed loop")
    a0 = t.switches[A]["one"]
    n = t.switches[A]["left" if Aslot == "right" else "right"]
    bl = t.switches[B]["left"]
    br = t.switches[B]["right"]
    attach = dict(t.attach)
    if Aslot == "right":
        attach[a0] = ("switch", B, "one")
        attach[br] = ("switch", B, "right")
        attach[m_end_B] = ("switch", B, "left")
        attach[m_end_A] = ("switch", A, "one")
        attach[bl] = ("switch", A, "right")
        attach[n] = ("switch", A, "left")
        passing, inherited = br, bl
    else:
        attach[a0] = ("switch", B, "one")
        attach[bl] = ("switch", B, "left")
        attach[m_end_B] = ("switch", B, "right")
        attach[m_end_A] = ("switch", A, "one")
        attach[br] = ("switch", A, "left")
        attach[n] = ("switch", A, "right")
        passing, inherited = bl, br
    t2 = TrainTrack(
        branches=t.branches,
        circular=t.circular,
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    rec = MoveRecord(
        kind="SHIFT", branch=m, A=A, B=B,
        legs={"a0": a0, "n": n, "passing": passing, "inherited": inherited,
              "m_end_A": m_end_A, "m_end_B": m_end_B},
        switch_map={A: A, B: B},
    )
    return t2, rec


# ---------------------------------------------------------------------------
# fold


def foldable_configuration(t: TrainTrack, d):
    """If ``d`` is the diagonal of a split configuration, return its data."""
    if d in t.circular:
        return None
    t0, t1 = t.attach.get((d, 0)), t.attach.get((d, 1))
    if not t0 or not t1 or t0[0] != "switch" or t1[0] != "switch":
        return None
    if t0[1] == t1[1]:
        return None
    if t0[2] == t1[2] == "right":
        kind = RIGHT
    elif t0[2] == t1[2] == "left":
        kind = LEFT
    else:
        return None
    return kind, t0[1], t1[1]


def fold_track(t: TrainTrack, d):
    """Fold the diagonal ``d`` back into a large branch (inverse split)."""
    cfg = foldable_configuration(t, d)
    if cfg is None:
        raise MoveError(f"branch {d!r} is not a foldable diagonal")
    kind, P, Q = cfg
    if kind == RIGHT:
        bR = t.switches[P]["one"]
        aL = t.switches[P]["left"]
        aR = t.switches[Q]["one"]
        bL = t.switches[Q]["left"]
    else:
        bL = t.switches[P]["one"]
        aR = t.switches[P]["right"]
        aL = t.switches[Q]["one"]
        bR = t.switches[Q]["right"]
    A = _fresh(t, "s")
    B = _fresh(t, "s", taken=[A])
    b = _fresh(t, "b")
    attach = {k: v for k, v in t.attach.items() if k[0] != d}
    attach[(b, 0)] = ("switch", A, "one")
    attach[(b, 1)] = ("switch", B, "one")
    attach[aL] = ("switch", A, "left")
    attach[aR] = ("switch", A, "right")
    attach[bL] = ("switch", B, "left")
    attach[bR] = ("switch", B, "right")
    t2 = TrainTrack(
        branches=(t.branches - {d}) | {b},
        circular=t.circular,
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    rec = MoveRecord(
        kind="FOLD", branch=b, A=A, B=B, P=P, Q=Q, d=d,
        legs={"aL": aL, "aR": aR, "bL": bL, "bR": bR},
        switch_map={P: A, Q: B},
        extra={"split_kind": kind},
    )
    return t2, rec


def collision_fold_track(t: TrainTrack, u, du: int, v, dv: int):
    """Inverse of a collision: pinch branches ``u`` and ``v`` together.

    ``u`` traversed with sign ``du`` becomes (A.left, b, B.right); ``v``
    with ``dv`` becomes (A.right, b, B.left).
    """
    if u == v:
        raise MoveError("cannot collision-fold a branch with itself")
    if u in t.circular or v in t.circular:
        raise MoveError("cannot collision-fold circular branches")
    A = _fresh(t, "s")
    B = _fresh(t, "s", taken=[A])
    taken = []
    names = {}
    for nm in ("aL", "bR", "aR", "bL", "b"):
        names[nm] = _fresh(t, "b", taken=taken)
        taken.append(names[nm])
    aLn, bRn, aRn, bLn, bn = (names[k] for k in ("aL", "bR", "aR", "bL", "b"))
    u_tail = (u, 0) if du == 1 else (u, 1)
    u_head = (u, 1) if du == 1 else (u, 0)
    v_tail = (v, 0) if dv == 1 else (v, 1)
    v_head = (v, 1) if dv == 1 else (v, 0)
    attach = {k: w for k, w in t.attach.items() if k[0] not in (u, v)}
    attach[(aLn, 0)] = t.attach[u_tail]
    attach[(aLn, 1)] = ("switch", A, "left")
    attach[(bRn, 0)] = ("switch", B, "right")
    attach[(bRn, 1)] = t.attach[u_head]
    attach[(aRn, 0)] = t.attach[v_tail]
    attach[(aRn, 1)] = ("switch", A, "right")
    attach[(bLn, 0)] = ("switch", B, "left")
    attach[(bLn, 1)] = t.attach[v_head]
    attach[(bn, 0)] = ("switch", A, "one")
    attach[(bn, 1)] = ("switch", B, "one")
    t2 = TrainTrack(
        branches=(t.branches - {u, v}) | {aLn, bRn, aRn, bLn, bn},
        circular=t.circular,
        attach=attach,
        boundary=t.boundary,
        stop_free_circles=t.stop_free_circles,
        region_decls=None,
        ambient_chi=t.ambient_chi,
    )
    sub = {
        (u, du): [(aLn, 1), (bn, 1), (bRn, 1)],
        (u, -du): [(bRn, -1), (bn, -1), (aLn, -1)],
        (v, dv): [(aRn, 1), (bn, 1), (bLn, 1)],
        (v, -dv): [(bLn, -1), (bn, -1), (aRn, -1)],
    }
    rec = MoveRecord(
        kind="FOLDC", branch=bn, A=A, B=B,
        legs={"aL": (aLn, 1), "aR": (aRn, 1), "bL": (bLn, 0), "bR": (bRn, 0)},
        extra={"sub": sub, "u": u, "v": v},
    )
    return t2, rec


def _anch_foldc(word, rec):
    sub = rec.extra["sub"]
    return [list(sub.get(st, [st])) for st in word]


# ---------------------------------------------------------------------------
# anchored transport


def _nbr(word, i, cyclic, lctx, rctx):
    n = len(word)
    if i > 0:
        prev = word[i - 1]
    elif cyclic:
        prev = word[-1]
    else:
        prev = lctx
    if i < n - 1:
        nxt = word[i + 1]
    elif cyclic:
        nxt = word[0]
    else:
        nxt = rctx
    return prev, nxt


def _prev2(word, i, cyclic, lctx, lctx2):
    if i > 1:
        return word[i - 2]
    if cyclic:
        return word[(i - 2) % len(word)]
    if i == 1:
        return lctx
    return lctx2


def _split_window(st, prev, nxt):
    if st[1] == 1:
        return prev, nxt, False
    pre = rev_step(nxt) if nxt is not None else None
    post = rev_step(prev) if prev is not None else None
    return pre, post, True


def _anchored(word, rec, t_old, cyclic, lctx=None, rctx=None, lctx2=None) -> List[List[Step]]:
    if rec.kind in (LEFT, RIGHT):
        return _anch_split(word, rec, cyclic, lctx, rctx)
    if rec.kind == COLLISION:
        return _anch_collision(word, rec, cyclic, lctx, rctx, lctx2)
    if rec.kind == "SHIFT":
        return _anch_shift(word, rec, cyclic, lctx, rctx)
    if rec.kind == "FOLD":
        return _anch_fold(word, rec, cyclic, lctx, rctx)
    if rec.kind == "FOLDC":
        return _anch_foldc(word, rec)
    raise MoveError(rec.kind)


def _anch_split(word, rec, cyclic, lctx, rctx):
    b = rec.branch
    aL = _end_step_toward(rec.legs["aL"])
    aR = _end_step_toward(rec.legs["aR"])
    bL = _end_step_away(rec.legs["bL"])
    bR = _end_step_away(rec.legs["bR"])
    out: List[List[Step]] = []
    for i, st in enumerate(word):
        if st[0] != b:
            out.append([st])
            continue
        prev, nxt = _nbr(word, i, cyclic, lctx, rctx)
        pre, post, flip = _split_window(st, prev, nxt)
        if pre is None or post is None:
            raise MoveError("route ends inside a split window")
        if rec.kind == RIGHT:
            if (pre, post) in ((aL, bR), (aR, bL)):
                mid: List[Step] = []
            elif (pre, post) == (aR, bR):
                mid = [(rec.d, -1)]
            else:
                raise MoveError("route not carried through RIGHT split")
        else:
            if (pre, post) in ((aR, bL), (aL, bR)):
                mid = []
            elif (pre, post) == (aL, bL):
                mid = [(rec.d, -1)]
            else:
                raise MoveError("route not carried through LEFT split")
        if flip:
            mid = [rev_step(s) for s in reversed(mid)]
        out.append(mid)
    return out


def _anch_collision(word, rec, cyclic, lctx, rctx, lctx2):
    seg_map = rec.extra["seg_map"]
    b = rec.branch
    aL = _end_step_toward(rec.legs["aL"])
    aR = _end_step_toward(rec.legs["aR"])
    bL = _end_step_away(rec.legs["bL"])
    bR = _end_step_away(rec.legs["bR"])
    out: List[List[Step]] = []
    for i, st in enumerate(word):
        prev, nxt = _nbr(word, i, cyclic, lctx, rctx)
        if st[0] == b:
            pre, post, _ = _split_window(st, prev, nxt)
            if pre is None or post is None:
                raise MoveError("route ends inside a collision window")
            if not ((pre == aL and post == bR) or (pre == aR and post == bL)):
                raise MoveError("route not carried through collision")
            out.append([])
            continue
        m = seg_map.get(st)
        if m is None:
            out.append([st])
            continue
        name, dr, pos = m
        prev_surv = prev
        if prev_surv is not None and prev_surv[0] == b:
            prev_surv = _prev2(word, i, cyclic, lctx, lctx2)
        merged = False
        if prev_surv is not None:
            pm = seg_map.get(prev_surv)
            if pm is not None and pm[0] == name and pm[1] == dr:
                clen = len(rec.chains[name]["chain"])
                circ = rec.chains[name]["circular"]
                if pm[2] + 1 == pos or (circ and (pm[2] + 1) % clen == pos):
                    merged = True
        out.append([] if merged else [(name, dr)])
    return out


def _anch_shift(word, rec, cyclic, lctx, rctx):
    # After the shift the physical west-east traversal of m runs from its
    # old one-slot end back to its old two-slot end, so surviving and
    # inserted m steps carry the opposite sign from the old forward strip.
    m = rec.branch
    a0_in = _end_step_toward(rec.legs["a0"])
    n_out = _end_step_away(rec.legs["n"])
    pass_out = _end_step_away(rec.legs["passing"])
    inh_out = _end_step_away(rec.legs["inherited"])
    m_fwd = _end_step_away(rec.legs["m_end_A"])
    out: List[List[Step]] = []
    for i, st in enumerate(word):
        prev, nxt = _nbr(word, i, cyclic, lctx, rctx)
        if st[0] == m:
            if st == m_fwd:
                pre, post = prev, nxt
            else:
                pre = rev_step(nxt) if nxt is not None else None
                post = rev_step(prev) if prev is not None else None
            if pre is None or post is None:
                raise MoveError("route ends inside a shift window")
            if pre == a0_in and post == pass_out:
                out.append([])
                continue
            if pre == a0_in and post == inh_out:
                out.append([rev_step(st)])
                continue
            raise MoveError("route not carried through shift")
        piece = [st]
        # insert an m step on the (a0, n) adjacency, anchored left
        if nxt is not None:
            if st == a0_in and nxt == n_out:
                piece.append(rev_step(m_fwd))
            elif st == rev_step(n_out) and nxt == rev_step(a0_in):
                piece.append(m_fwd)
        out.append(piece)
    return out


def _anch_fold(word, rec, cyclic, lctx, rctx):
    d = rec.d
    b = rec.branch
    aL_in = _end_step_toward(rec.legs["aL"])
    aR_in = _end_step_toward(rec.legs["aR"])
    bL_out = _end_step_away(rec.legs["bL"])
    bR_out = _end_step_away(rec.legs["bR"])
    out: List[List[Step]] = []
    for i, st in enumerate(word):
        prev, nxt = _nbr(word, i, cyclic, lctx, rctx)
        if st[0] == d:
            out.append([(b, -st[1])])
            continue
        piece = [st]
        if nxt is not None and nxt[0] != d:
            if st == aL_in and nxt == bR_out:
                piece.append((b, 1))
            elif st == rev_step(bR_out) and nxt == rev_step(aL_in):
                piece.append((b, -1))
            elif st == aR_in and nxt == bL_out:
                piece.append((b, 1))
            elif st == rev_step(bL_out) and nxt == rev_step(aR_in):
                piece.append((b, -1))
        out.append(piece)
    return out


# ---------------------------------------------------------------------------
# word- and route-level entry points


def transport_word(word: Sequence[Step], rec: MoveRecord, t_old: TrainTrack = None,
                   cyclic=False, lctx=None, rctx=None, lctx2=None) -> List[Step]:
    out: List[Step] = []
    for piece in _anchored(list(word), rec, t_old, cyclic, lctx, rctx, lctx2):
        out.extend(piece)
    return out


def transport_route(route: Route, rec: MoveRecord, t_old: TrainTrack = None) -> Route:
    """Transport a full route (finite or eventually periodic)."""
    if route.is_finite:
        word = transport_word(route.prefix, rec, t_old, cyclic=False)
        return Route(tuple(word), (), route.terminal)
    pfx, cyc = list(route.prefix), list(route.cycle)
    cyc_out = _anchored(cyc, rec, t_old, cyclic=True)
    new_cycle: List[Step] = [s for piece in cyc_out for s in piece]
    if not new_cycle:
        raise MoveError("cycle collapsed under transport")
    if pfx:
        lctx2 = pfx[-2] if len(pfx) >= 2 else None
        pf_out = _anchored(pfx, rec, t_old, cyclic=False, rctx=cyc[0], lctx2=lctx2)
        # the first cycle lap may interact with the prefix differently from
        # later laps; rewrite one explicit lap with mixed context
        lap_out = _anchored(
            cyc, rec, t_old, cyclic=False,
            lctx=pfx[-1], rctx=cyc[0], lctx2=pfx[-2] if len(pfx) >= 2 else None,
        )
        new_prefix = [s for piece in pf_out for s in piece]
        new_prefix += [s for piece in lap_out for s in piece]
    else:
        new_prefix = list(new_cycle)
    return Route.periodic(new_prefix, new_cycle)


def transport_ray(route: Route, rec: MoveRecord, t_old: TrainTrack, cusp) -> Route:
    """Transport a cusp ray whose first step may be consumed by the move."""
    if rec.kind in (LEFT, RIGHT, COLLISION) and cusp in (rec.A, rec.B):
        first = route.step(0)
        want = (rec.branch, 1) if cusp == rec.A else (rec.branch, -1)
        if first != want:
            raise MoveError("cusp ray does not start along the split branch")
        return transport_route(route.drop(1), rec, t_old)
    if rec.kind == "SHIFT":
        m = rec.branch
        a0_away = _end_step_away(rec.legs["a0"])
        m_fwd = _end_step_away(rec.legs["m_end_A"])
        if cusp == rec.A:
            # old ray starts along a0; new one-slot of A is m
            rest = transport_route(route, rec, t_old)
            return Route.finite([m_fwd], "open").concat(rest)
        if cusp == rec.B:
            # old ray starts along m then a0; drop the m step
            if route.step(0) != rev_step(m_fwd):
                raise MoveError("shift ray mismatch")
            return transport_route(route.drop(1), rec, t_old)
    return transport_route(route, rec, t_old)


# ---------------------------------------------------------------------------
# weights


def transport_weights(weights: Optional[Dict], rec: MoveRecord, strict: bool = True):
    """Push a branch weight vector through a move."""
    if weights is None:
        return None
    w = {k: Fraction(v) for k, v in weights.items()}

    def val(end):
        return w.get(end[0], Fraction(0))

    if rec.kind in (LEFT, RIGHT):
        aL, aR = rec.legs["aL"], rec.legs["aR"]
        bL, bR = rec.legs["bL"], rec.legs["bR"]
        if rec.kind == RIGHT:
            wd, wd2 = val(aR) - val(bL), val(bR) - val(aL)
        else:
            wd, wd2 = val(aL) - val(bR), val(bL) - val(aR)
        if strict and wd != wd2:
            raise MoveError("weights violate the switch conditions")
        if strict and wd < 0:
            raise MoveError("weights not carried by this split kind")
        w.pop(rec.branch, None)
        w[rec.d] = wd
        return w
    if rec.kind == COLLISION:
        w.pop(rec.branch, None)
        for name, data in rec.chains.items():
            vals = [w.pop(s, Fraction(0)) for s, _ in data["chain"]]
            if strict and len(set(vals)) > 1:
                raise MoveError("weights inconsistent along fused strand")
            w[name] = vals[0]
        return w
    if rec.kind == "FOLD":
        aL, aR = rec.legs["aL"], rec.legs["aR"]
        wb = val(aL) + val(aR)
        w.pop(rec.d, None)
        w[rec.branch] = wb
        return w
    if rec.kind == "FOLDC":
        u, v = rec.extra["u"], rec.extra["v"]
        wu, wv = w.pop(u, Fraction(0)), w.pop(v, Fraction(0))
        aLn, aRn = rec.legs["aL"][0], rec.legs["aR"][0]
        bLn, bRn = rec.legs["bL"][0], rec.legs["bR"][0]
        w[aLn] = w[bRn] = wu
        w[aRn] = w[bLn] = wv
        w[rec.branch] = wu + wv
        return w
    if rec.kind == "SHIFT":
        return w
    raise MoveError(rec.kind)
