r"""
Tile-graded endperiodic track systems and core splits.

A system presents an infinite endperiodic track by finite data: an
explicit core (everything up to tile ``depth``) and, per positive end
cycle, a tile template that glues to a shifted copy of itself along
matching juncture crossing points.  The end shift takes tile j to tile
j+1 verbatim, so the infinite track is determined and every window
K_J (core plus tiles up to level J) assembles to an honest finite
carried pair whose stops are the level-J crossing points.

Cusp rays are stored in climbing form: a finite word over explicit
branches plus, when the ray leaves through the window top, a template
tail (a route in template coordinates whose juncture crossings are
implicit).  Assembly instantiates tails down to the window level and
fuses branch chains across the crossings, so the window is always a
valid carried pair and the split engine applies verbatim.

The endperiodic map is never represented as a homeomorphism: a core
split is the maximal splitting inside the smallest core containing a
large branch, and eventual periodicity is detected as self-similarity
of the core-split orbit under the end shift, certified by canonical
equality of one-tile-shifted windows rel crossing labels, lamination
data included.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import moves
from .canonical import canonical_form, canonical_maps
from .lamination import (
    CarriedLamination,
    SplitEvent,
    maximal_splitting,
    validate_carried,
)
from .routes import OPEN, STOP, Route, Step
from .track import Diagnostic, TrainTrack, _key

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"
EXHAUSTED = "EXHAUSTED"


def xstop(cid, k) -> str:
    return f"x:{cid}:{k}"


@dataclass(frozen=True)
class EndCyclePattern:
    cid: str
    sign: str
    period: int
    template: TrainTrack  # stops "in:<k>" / "out:<k>" for k in crossings
    crossings: Tuple[str, ...]
    cusp_tails: Dict[object, Tuple[Route, Route]] = field(default_factory=dict)
    # descending cusp rays: (in-tile prefix ending at an "in:" stop, then
    # chained per-crossing descent patterns, then the core funnel)
    descent_tails: Dict[object, Tuple[Route, Route]] = field(default_factory=dict)
    desc_cont: Dict[str, Route] = field(default_factory=dict)  # one tile of descent below in:k
    closed_lifts: Tuple[Route, ...] = ()  # oriented quotient circle lifts
    weights: Dict[str, int] = field(default_factory=dict)  # juncture weights
    boundary_regions: Optional[tuple] = None  # region decls for the quotient track

    def validate(self) -> List[Diagnostic]:
        out = []
        if self.period < 1:
            out.append(Diagnostic("end cycle period must be positive", self.cid))
        for k, w in self.weights.items():
            if w <= 0 or w % self.period:
                out.append(Diagnostic("juncture weight not divisible by period", (self.cid, k)))
        stops = set(self.template.stops)
        want = set()
        for k in self.crossings:
            want.add(f"in:{k}")
            want.add(f"out:{k}")
        if stops != want:
            out.append(Diagnostic("template stops must be the crossings", self.cid))
        if self.sign == NEGATIVE:
            if self.cusp_tails or self.closed_lifts or self.descent_tails:
                out.append(Diagnostic("negative end carries lamination data", self.cid))
            if self.crossings:
                out.append(Diagnostic("negative tiles are inert and carry no track", self.cid))
        else:
            for sid in self.template.switches:
                if sid not in self.cusp_tails and sid not in self.descent_tails:
                    out.append(Diagnostic("template cusp without ray tail", (self.cid, sid)))
        return out


SysRay = Tuple[Route, Optional[Tuple[str, Route]]]  # (word, (cid, template tail))


@dataclass
class TiledTrackSystem:
    track: TrainTrack  # explicit part; its stops are the top crossing points
    rays: Dict[object, Tuple[SysRay, SysRay]]
    closed: Tuple[Route, ...]
    ends: Tuple[EndCyclePattern, ...]
    depth: int = 0
    levels: Dict[object, int] = field(default_factory=dict)
    # shared downward continuation below each top crossing (the funnel a
    # descending ray follows once it enters the explicit part)
    funnels: Dict[Tuple[str, str], Route] = field(default_factory=dict)
    weights: Optional[Dict[object, Fraction]] = None
    template_weights: Dict[str, Dict[object, Fraction]] = field(default_factory=dict)
    stop_association: Dict[object, frozenset] = field(default_factory=dict)
    hm_compatible: bool = True
    meta: dict = field(default_factory=dict)

    def end(self, cid) -> EndCyclePattern:
        for e in self.ends:
            if e.cid == cid:
                return e
        raise KeyError(cid)

    def positive_ends(self):
        return [e for e in self.ends if e.sign == POSITIVE]

    def validate(self) -> List[Diagnostic]:
        out: List[Diagnostic] = []
        for e in self.ends:
            out.extend(e.validate())
        if out:
            return out
        expected = set()
        for e in self.positive_ends():
            for k in e.crossings:
                expected.add(xstop(e.cid, k))
        core_stop_set = {s for s in self.track.stops if str(s).startswith("x:")}
        if core_stop_set != expected:
            out.append(Diagnostic("core stops must be the top crossings",
                                  (sorted(map(str, core_stop_set)), sorted(expected))))
        extra = set(self.track.stops) - core_stop_set
        if extra:
            out.append(Diagnostic("systems must be stopless away from junctures",
                                  sorted(map(str, extra))))
        if out:
            return out
        for J in (self.depth, self.depth + 2):
            t, lam = assemble(self, J)
            out.extend(t.validate())
            out.extend(validate_carried(t, lam))
            if out:
                return out
        return out


# ---------------------------------------------------------------------------
# window assembly


def _tile_branch(cid, j, frag) -> str:
    return f"{cid}.{j}.{frag}"


def _tile_switch(cid, j, sid) -> str:
    return f"{cid}.{j}.{sid}"


def _chain_id(parts: Sequence[object]) -> str:
    return "+".join(str(p) for p in parts)


class Assembly:
    def __init__(self, sys, track, lam, J, chain_of, tails):
        self.sys = sys
        self.track = track
        self.lam = lam
        self.J = J
        self.chain_of = chain_of  # piece step -> (chain, dir, pos, len)
        self.tails = tails  # (switch, ray index) -> remaining (cid, TRoute) | None

    def pair(self):
        return self.track, self.lam


def _instantiate_troute(sys: TiledTrackSystem, cid, route: Route, entry_level: int,
                        J: int, floor: Optional[int] = None):
    """Instantiate a template-coordinate route starting in tile
    ``entry_level``.  Levels move up through ``out`` crossings and down
    through ``in`` crossings.  Returns (steps, consumed, exit) where
    exit is ("top", k) past level J, ("bottom", k) at or below
    ``floor`` (default: the system depth), or None when the route is
    exhausted first."""
    e = sys.end(cid)
    t = e.template
    if floor is None:
        floor = sys.depth
    steps: List[Step] = []
    level = entry_level
    consumed = 0
    i = 0
    guard = (J + 4) * (len(t.branches) + 2) * 6 + len(route.prefix) + 16
    while True:
        st = route.step(i)
        if st is None:
            return steps, consumed, None
        if i > guard:
            raise ValueError("template route neither climbs nor descends")
        frag, sgn = st
        steps.append((_tile_branch(cid, level, frag), sgn))
        consumed += 1
        i += 1
        head = (frag, 1 if sgn == 1 else 0)
        tgt = t.attach.get(head)
        if tgt is not None and tgt[0] == "stop":
            sname = str(tgt[1])
            if sname.startswith("out:"):
                level += 1
                if level > J:
                    return steps, consumed, ("top", sname[4:])
            elif sname.startswith("in:"):
                level -= 1
                if level <= floor:
                    return steps, consumed, ("bottom", sname[3:])


def _descend_from(sys: TiledTrackSystem, cid, k, level, J) -> Tuple[List[Step], Route]:
    """Chained descent below crossing ``k`` entered downward into tile
    ``level``, ending in the stored core funnel.  Returns the descent
    steps and the funnel route."""
    e = sys.end(cid)
    steps: List[Step] = []
    cur = k
    while level > sys.depth:
        cont = e.desc_cont.get(cur)
        if cont is None:
            raise ValueError(f"missing descent pattern below crossing {cur!r}")
        more, _, exit_ = _instantiate_troute(sys, cid, cont, level, J, floor=level - 1)
        steps += more
        if exit_ is None or exit_[0] != "bottom":
            raise ValueError("descent pattern does not descend one tile")
        cur = exit_[1]
        level -= 1
    fun = sys.funnels.get((cid, cur))
    if fun is None:
        raise ValueError(f"missing funnel for crossing {(cid, cur)}")
    return steps, fun


def _descending_ray(sys: TiledTrackSystem, cid, prefix: Route, entry_level: int, J: int) -> Route:
    """Full window route of a descending tile ray."""
    steps, _, exit_ = _instantiate_troute(sys, cid, prefix, entry_level, J,
                                          floor=entry_level - 1)
    if exit_ is None or exit_[0] != "bottom":
        raise ValueError("descent prefix must leave its tile downward")
    more, fun = _descend_from(sys, cid, exit_[1], entry_level - 1, J)
    steps += more
    if fun.is_periodic:
        return Route.periodic(tuple(steps) + fun.prefix, fun.cycle)
    return Route.finite(tuple(steps) + fun.prefix, fun.terminal)


def _window_funnel(sys: TiledTrackSystem, cid, k, J: int) -> Route:
    """The funnel below the level-J crossing ``k`` of the J-window."""
    if J == sys.depth:
        return sys.funnels[(cid, k)]
    steps, fun = _descend_from(sys, cid, k, J, J)
    if fun.is_periodic:
        return Route.periodic(tuple(steps) + fun.prefix, fun.cycle)
    return Route.finite(tuple(steps) + fun.prefix, fun.terminal)


def _merge_chain_steps(steps: Sequence[Step], chain_of) -> List[Step]:
    out: List[Step] = []
    pend = None
    for st in steps:
        m = chain_of.get(st)
        if m is None:
            if pend is not None:
                out.append((pend[0], pend[1]))
                pend = None
            out.append(st)
            continue
        ch, dr, pos, ln = m
        if pend is not None and pend[0] == ch and pend[1] == dr and pos == pend[2] + 1:
            pend = (ch, dr, pos)
            continue
        if pend is not None:
            out.append((pend[0], pend[1]))
        pend = (ch, dr, pos)
    if pend is not None:
        out.append((pend[0], pend[1]))
    return out


def assembly(sys: TiledTrackSystem, J: int) -> Assembly:
    if J < sys.depth:
        raise ValueError(f"window {J} below current depth {sys.depth}")
    core_t = sys.track
    branches = set(core_t.branches)
    circular = set(core_t.circular)
    attach = dict(core_t.attach)
    boundary = {c: tuple(v) for c, v in core_t.boundary.items()
                if not any(str(s).startswith("x:") for s in v)}
    glue: Dict[Tuple[object, int], Tuple[object, int]] = {}

    def add_glue(e1, e2):
        glue[e1] = e2
        glue[e2] = e1
        attach.pop(e1, None)
        attach.pop(e2, None)

    out_end: Dict[tuple, Tuple[object, int]] = {}
    in_end: Dict[tuple, Tuple[object, int]] = {}
    for e in sys.positive_ends():
        t = e.template
        for k in e.crossings:
            out_end[(e.cid, sys.depth, k)] = core_t.stops[xstop(e.cid, k)]
        for j in range(sys.depth + 1, J + 1):
            for bid in t.branches:
                nb = _tile_branch(e.cid, j, bid)
                branches.add(nb)
                if bid in t.circular:
                    circular.add(nb)
            for (bid, end), tgt in t.attach.items():
                nb = _tile_branch(e.cid, j, bid)
                if tgt[0] == "switch":
                    attach[(nb, end)] = ("switch", _tile_switch(e.cid, j, tgt[1]), tgt[2])
                    continue
                sname = str(tgt[1])
                if sname.startswith("in:"):
                    in_end[(e.cid, j - 1, sname[3:])] = (nb, end)
                elif sname.startswith("out:"):
                    k = sname[4:]
                    if j == J:
                        attach[(nb, end)] = ("stop", xstop(e.cid, k))
                    else:
                        out_end[(e.cid, j, k)] = (nb, end)
    for key, up in in_end.items():
        add_glue(out_end[key], up)
    # fuse chains through the glued crossings
    involved = {end[0] for end in glue}
    chain_of: Dict[Step, tuple] = {}
    new_attach = {k: v for k, v in attach.items() if k[0] not in involved}
    new_branches = {b for b in branches if b not in involved}
    done = set()
    free_ends = sorted(
        ((b, end) for b in involved for end in (0, 1)
         if (b, end) not in glue),
        key=_key,
    )
    for start in free_ends:
        if start[0] in done:
            continue
        chain = []
        cur = start
        while True:
            bid, e2 = cur
            chain.append((bid, 1 if e2 == 0 else -1))
            done.add(bid)
            other = (bid, 1 - e2)
            if other in glue:
                cur = glue[other]
            else:
                cname = _chain_id([c[0] for c in chain])
                new_branches.add(cname)
                new_attach[(cname, 0)] = attach[start]
                new_attach[(cname, 1)] = attach[other]
                for pos, (sid_, dr) in enumerate(chain):
                    chain_of[(sid_, dr)] = (cname, 1, pos, len(chain))
                    chain_of[(sid_, -dr)] = (cname, -1, len(chain) - 1 - pos, len(chain))
                break
    for b in sorted(involved, key=_key):
        if b in done:
            continue
        chain = []
        cur = (b, 0)
        while True:
            bd, e2 = cur
            chain.append((bd, 1 if e2 == 0 else -1))
            done.add(bd)
            cur = glue[(bd, 1 - e2)]
            if cur == (b, 0):
                break
        cname = _chain_id([c[0] for c in chain])
        new_branches.add(cname)
        circular.add(cname)
        for pos, (sid_, dr) in enumerate(chain):
            chain_of[(sid_, dr)] = (cname, 1, pos, len(chain))
            chain_of[(sid_, -dr)] = (cname, -1, len(chain) - 1 - pos, len(chain))
    bdry = dict(boundary)
    for e in sys.positive_ends():
        if e.crossings:
            bdry[f"j:{e.cid}"] = tuple(xstop(e.cid, k) for k in e.crossings)
    track = TrainTrack(
        new_branches,
        circular=circular & new_branches,
        attach=new_attach,
        boundary=bdry,
        stop_free_circles=core_t.stop_free_circles,
        region_decls=None,
        ambient_chi=None,
    )
    # lamination with tail bookkeeping
    cusp_data = {}
    tails = {}
    for sid, pair in sys.rays.items():
        new_pair = []
        for idx, (word, tail) in enumerate(pair):
            if word.is_periodic:
                new_pair.append(word)
                tails[(sid, idx)] = None
                continue
            steps = list(word.prefix)
            terminal = word.terminal
            rem = None
            if tail is not None:
                cid, troute = tail
                more, used = _instantiate_tail(sys, cid, troute, sys.depth + 1, J)
                steps += more
                rem = (cid, troute.drop(used)) if troute.step(used) is not None else None
                if troute.is_periodic:
                    rem = (cid, troute.drop(used))
                terminal = STOP
            new_pair.append(Route.finite(_merge_chain_steps(steps, chain_of), terminal))
            tails[(sid, idx)] = rem
        cusp_data[sid] = tuple(new_pair)
    for e in sys.positive_ends():
        for j in range(sys.depth + 1, J + 1):
            for sid, pair in e.cusp_tails.items():
                wsid = _tile_switch(e.cid, j, sid)
                new_pair = []
                for idx, r in enumerate(pair):
                    steps, used = _instantiate_tail(sys, e.cid, r, j, J)
                    new_pair.append(Route.finite(_merge_chain_steps(steps, chain_of), STOP))
                    tails[(wsid, idx)] = (e.cid, r.drop(used))
                cusp_data[wsid] = tuple(new_pair)
    closed = list(sys.closed)
    lam_weights = None
    if sys.weights is not None:
        raw = dict(sys.weights)
        for e in sys.positive_ends():
            tw = sys.template_weights.get(e.cid, {})
            for j in range(sys.depth + 1, J + 1):
                for frag, w in tw.items():
                    raw[_tile_branch(e.cid, j, frag)] = Fraction(w)
        lam_weights = {}
        for b, w in raw.items():
            m = chain_of.get((b, 1))
            key = m[0] if m is not None else b
            if key in lam_weights and lam_weights[key] != Fraction(w):
                raise ValueError("inconsistent weights along a juncture chain")
            lam_weights[key] = Fraction(w)
    lam = CarriedLamination(cusp_data, closed, sys.stop_association or None, lam_weights)
    return Assembly(sys, track, lam, J, chain_of, tails)


def assemble(sys: TiledTrackSystem, J: int) -> Tuple[TrainTrack, CarriedLamination]:
    a = assembly(sys, J)
    return a.track, a.lam


def core(sys: TiledTrackSystem, i: int) -> Tuple[TrainTrack, CarriedLamination]:
    """The finite restriction to K_i (for i at least the current depth)."""
    return assemble(sys, i)


# ---------------------------------------------------------------------------
# levels


def _branch_level(sys: TiledTrackSystem, b) -> int:
    lv = 0
    for p in str(b).split("+"):
        known = sys.levels.get(p)
        if known is None:
            bits = p.split(".")
            known = int(bits[1]) if len(bits) >= 3 and bits[1].isdigit() else 0
        lv = max(lv, known)
    return lv


# ---------------------------------------------------------------------------
# core split


def core_split(sys: TiledTrackSystem):
    """Replace the least large-branch-bearing core by its maximal
    splitting; identity (with no events) on spiraling systems."""
    probe_t, _ = assemble(sys, sys.depth + 2)
    larges = probe_t.large_branches()
    if not larges:
        return sys, []
    i_star = min(_branch_level(sys, b) for b in larges)
    J = max(i_star, sys.depth)
    asmb = assembly(sys, J)
    t, lam = asmb.pair()

    def restrict(track, b):
        return _branch_level(sys, b) <= i_star

    t2, lam2, events = maximal_splitting(t, lam, restrict=restrict)
    for ev in events:
        ev.level = i_star
    sys2 = _system_after(sys, asmb, t2, lam2, events)
    return sys2, events


def _system_after(sys, asmb: Assembly, t2, lam2, events) -> TiledTrackSystem:
    # persona chains: original window switch -> final switch (or dropped)
    persona = {sid: sid for sid in asmb.lam.cusp_data}
    for ev in events:
        rec = ev.record
        nxt = {}
        for orig, cur in persona.items():
            if rec.kind == moves.COLLISION and cur in (rec.A, rec.B):
                continue
            nxt[orig] = rec.rename_switch(cur)
        persona = nxt
    inv = {cur: orig for orig, cur in persona.items()}
    rays = {}
    for sid, pair in lam2.cusp_data.items():
        orig = inv.get(sid)
        new_pair = []
        for idx, r in enumerate(pair):
            tail = asmb.tails.get((orig, idx)) if orig is not None else None
            if r.is_periodic:
                tail = None
            new_pair.append((r, tail))
        rays[sid] = tuple(new_pair)
    levels = _propagate_levels(sys, asmb, events, t2)
    return replace(
        sys,
        track=t2,
        rays=rays,
        closed=tuple(lam2.closed_classes),
        depth=asmb.J,
        levels=levels,
        weights=lam2.weights,
    )


def _propagate_levels(sys, asmb, events, t2) -> Dict[object, int]:
    levels = {}
    for b in asmb.track.branches:
        levels[b] = _branch_level(sys, b)
    for ev in events:
        rec = ev.record
        if rec.kind in (moves.LEFT, moves.RIGHT):
            levels[rec.d] = levels.pop(rec.branch)
        elif rec.kind == moves.COLLISION:
            base = levels.pop(rec.branch)
            for name, data in rec.chains.items():
                levels[name] = max([levels.pop(s) for s, _ in data["chain"]] + [base])
    return {b: levels[b] for b in t2.branches}


# ---------------------------------------------------------------------------
# periodicity detection


@dataclass
class PeriodicityCertificate:
    pre_period: int
    system: TiledTrackSystem  # the system at the start of the period
    window: int  # the split window level J of the certified core split
    period_events: List[Tuple[object, str]]  # (branch id, split kind)
    event_count: int
    snapshot_hashes: Tuple[int, ...] = ()


@dataclass
class SplittingSequence:
    initial: TiledTrackSystem
    events: List[Tuple[int, object, str, int]]  # (core index, branch, kind, hash)
    certificate: Optional[PeriodicityCertificate] = None


def _comparison_forms(sys_next: TiledTrackSystem, sys_prev: TiledTrackSystem, J: int):
    tn, ln = assemble(sys_next, J + 1)
    tp, lp = assemble(sys_prev, J)
    return canonical_form(tn, _strip_weights(ln)), canonical_form(tp, _strip_weights(lp))


def _strip_weights(lam: CarriedLamination) -> CarriedLamination:
    if lam.weights is None:
        return lam
    return CarriedLamination(lam.cusp_data, lam.closed_classes, lam.stop_association,
                             None, lam.cusp_labels)


def detect_periodicity(sys: TiledTrackSystem, max_steps: int = 10_000):
    """Iterate core splits until the orbit is self-similar under the end
    shift; returns a PeriodicityCertificate or EXHAUSTED."""
    cur = sys
    seq = SplittingSequence(sys, [])
    for n in range(max_steps):
        nxt, events = core_split(cur)
        if not events:
            return PeriodicityCertificate(n, cur, cur.depth, [], 0), seq
        for ev in events:
            seq.events.append((getattr(ev, "level", cur.depth), ev.branch, ev.kind,
                               ev.snapshot_hash))
        J = nxt.depth
        fn, fp = _comparison_forms(nxt, cur, J)
        if fn == fp:
            cert = PeriodicityCertificate(
                n, cur, J, [(ev.branch, ev.kind) for ev in events], len(events),
                tuple(ev.snapshot_hash for ev in events),
            )
            seq.certificate = cert
            return cert, seq
        cur = nxt
    return EXHAUSTED, seq


def replay(sys: TiledTrackSystem, events: Sequence[Tuple[object, str]], J: int):
    """Replay recorded period events on the J-window; returns the track
    and lamination sequence (one entry per state) plus move records."""
    from .lamination import lambda_split

    t, lam = assemble(sys, J)
    states = [(t, lam)]
    recs = []
    for bid, kind in events:
        t, lam, ev = lambda_split(t, lam, bid)
        if ev.kind != kind:
            raise ValueError(f"replay mismatch at {bid!r}: {ev.kind} vs {kind}")
        states.append((t, lam))
        recs.append(ev.record)
    return states, recs
