r"""
Combinatorial train tracks on oriented surfaces.

A track is stored as a ribbon graph with two vertex species: trivalent
switches (slots ``one``, ``left``, ``right``; the two-side slots are
ordered so that ``left`` is counterclockwise-first from the one-side
with respect to the surface orientation) and valence-1 stops sitting on
boundary circles.  Branches are either circular or carry two end slots.

The embedding data is exactly what is needed to trace boundary walks,
cut out complementary regions with their cusps and corners, and compute
indices.  No coordinates are ever used.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from ._graphs import simple_cycles_digraph
from .routes import Route, least_rotation, rev_word

SLOTS = ("one", "left", "right")

LARGE = "LARGE"
SMALL = "SMALL"
MIXED = "MIXED"
CIRCULAR = "CIRCULAR"


def _key(x) -> str:
    return repr(x)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    where: object

    def __repr__(self):  # pragma: no cover - cosmetic
        return f"Diagnostic({self.code!r}, {self.where!r})"


class TrainTrack:
    """Immutable ribbon-graph presentation of a train track."""

    def __init__(
        self,
        branches: Sequence[object],
        circular: Sequence[object] = (),
        attach: Optional[Dict[Tuple[object, int], Tuple]] = None,
        boundary: Optional[Dict[object, Sequence[object]]] = None,
        stop_free_circles: Sequence[object] = (),
        region_decls: Optional[Sequence[dict]] = None,
        ambient_chi: Optional[int] = None,
    ):
        self.branches = frozenset(branches)
        self.circular = frozenset(circular)
        self.attach = dict(attach or {})
        self.boundary = {c: tuple(v) for c, v in (boundary or {}).items()}
        self.stop_free_circles = frozenset(stop_free_circles)
        self.region_decls = tuple(region_decls) if region_decls is not None else None
        self.ambient_chi = ambient_chi
        # derived inverse maps
        self.switches: Dict[object, Dict[str, Tuple[object, int]]] = {}
        self.stops: Dict[object, Optional[Tuple[object, int]]] = {}
        for c, stops in self.boundary.items():
            for v in stops:
                self.stops.setdefault(v, None)
        for (bid, end), tgt in self.attach.items():
            if tgt[0] == "switch":
                _, sid, slot = tgt
                self.switches.setdefault(sid, {})
                if slot in self.switches[sid]:
                    # duplicate slot: left for validate to report
                    self.switches[sid][slot + "_dup"] = (bid, end)
                else:
                    self.switches[sid][slot] = (bid, end)
            else:
                _, v = tgt
                if self.stops.get(v) is not None:
                    self.stops[v + "_dup" if isinstance(v, str) else (v, "dup")] = (bid, end)
                else:
                    self.stops[v] = (bid, end)

    # -- basic accessors ------------------------------------------------

    def slot_of(self, bid, end):
        return self.attach.get((bid, end))

    def switch_slot(self, sid, slot):
        return self.switches[sid][slot]

    def end_at(self, sid, slot):
        return self.switches[sid][slot]

    def is_circular(self, bid) -> bool:
        return bid in self.circular

    def stop_ids(self) -> List[object]:
        return sorted(self.stops, key=_key)

    def switch_ids(self) -> List[object]:
        return sorted(self.switches, key=_key)

    def branch_ids(self) -> List[object]:
        return sorted(self.branches, key=_key)

    def replace(self, **kw) -> "TrainTrack":
        base = dict(
            branches=self.branches,
            circular=self.circular,
            attach=self.attach,
            boundary=self.boundary,
            stop_free_circles=self.stop_free_circles,
            region_decls=self.region_decls,
            ambient_chi=self.ambient_chi,
        )
        base.update(kw)
        return TrainTrack(**base)

    # -- validation -----------------------------------------------------

    def validate(self) -> List[Diagnostic]:
        out: List[Diagnostic] = []
        seen_targets = {}
        for bid in self.branches:
            if bid in self.circular:
                for end in (0, 1):
                    if (bid, end) in self.attach:
                        out.append(Diagnostic("circular branch with attachment", bid))
                continue
            for end in (0, 1):
                tgt = self.attach.get((bid, end))
                if tgt is None:
                    out.append(Diagnostic("unfilled slot", (bid, end)))
                    continue
                if tgt in seen_targets:
                    out.append(Diagnostic("slot filled twice", tgt))
                seen_targets[tgt] = (bid, end)
        for (bid, end) in self.attach:
            if bid not in self.branches:
                out.append(Diagnostic("attachment of unknown branch", (bid, end)))
        for sid, slots in self.switches.items():
            for slot in SLOTS:
                if slot not in slots:
                    out.append(Diagnostic("unfilled slot", (sid, slot)))
            for slot in slots:
                if slot.endswith("_dup"):
                    out.append(Diagnostic("slot filled twice", (sid, slot)))
        for v, e in self.stops.items():
            if e is None:
                out.append(Diagnostic("unfilled slot", ("stop", v)))
        listed = set()
        for c, stops in self.boundary.items():
            for v in stops:
                if v in listed:
                    out.append(Diagnostic("stop listed twice on boundary", v))
                listed.add(v)
        for v in self.stops:
            if v not in listed and self.stops[v] is not None:
                out.append(Diagnostic("stop missing from boundary data", v))
        if out:
            return out
        # walk closure is automatic for well-formed data; verify region decls
        try:
            walks = self.boundary_walks()
        except Exception as exc:  # pragma: no cover - defensive
            out.append(Diagnostic("boundary walk failure", str(exc)))
            return out
        if self.region_decls is not None:
            keys = {w.key for w in walks}
            used = set()
            for decl in self.region_decls:
                for k in decl.get("walks", ()):
                    if k not in keys:
                        out.append(Diagnostic("region decl names unknown walk", k))
                    if k in used:
                        out.append(Diagnostic("walk in two region decls", k))
                    used.add(k)
                for c in decl.get("circles", ()):
                    if c not in self.stop_free_circles:
                        out.append(Diagnostic("region decl names unknown circle", c))
        if self.ambient_chi is not None and not out:
            try:
                total = sum((r.index for r in self.complementary_regions()), Fraction(0))
                if total != self.ambient_chi:
                    out.append(
                        Diagnostic("index additivity violated", (total, self.ambient_chi))
                    )
            except ValueError as exc:
                out.append(Diagnostic("inconsistent region_decls", str(exc)))
        return out

    # -- branch classification -------------------------------------------

    def classify_branch(self, bid) -> str:
        if bid not in self.branches:
            raise KeyError(f"unknown branch {bid!r}")
        if bid in self.circular:
            return CIRCULAR
        kinds = []
        for end in (0, 1):
            tgt = self.attach[(bid, end)]
            if tgt[0] == "stop":
                kinds.append("stop")
            else:
                kinds.append("one" if tgt[2] == "one" else "two")
        if kinds == ["one", "one"]:
            return LARGE
        if kinds == ["two", "two"]:
            return SMALL
        return MIXED

    def large_branches(self) -> List[object]:
        return [b for b in self.branch_ids() if self.classify_branch(b) == LARGE]

    # -- boundary walks and regions ---------------------------------------

    def _walk_next(self, bid, dr):
        """Next walk element after walking branch ``bid`` with direction
        ``dr`` (region on the left).  Returns (elements, cusps, corners)."""
        head = 1 if dr == 1 else 0
        tgt = self.attach[(bid, head)]
        if tgt[0] == "switch":
            _, sid, slot = tgt
            nxt_slot = {"one": "right", "right": "left", "left": "one"}[slot]
            cusp = 1 if slot == "right" else 0
            b2, e2 = self.switches[sid][nxt_slot]
            dr2 = 1 if e2 == 0 else -1
            return [("b", b2, dr2)], cusp, 0, [(sid, slot, nxt_slot)] if cusp else []
        _, v = tgt
        circle = next(c for c, ss in self.boundary.items() if v in ss)
        stops = self.boundary[circle]
        w = stops[(stops.index(v) + 1) % len(stops)]
        b2, e2 = self.stops[w]
        dr2 = 1 if e2 == 0 else -1
        return [("a", circle, v, w), ("b", b2, dr2)], 0, 2, []

    def boundary_walks(self) -> List["Walk"]:
        todo = set()
        for bid in self.branches:
            if bid in self.circular:
                continue
            todo.add((bid, 1))
            todo.add((bid, -1))
        walks: List[Walk] = []
        while todo:
            start = min(todo, key=_key)
            elems: List[tuple] = []
            cusps = corners = 0
            cusp_sites: List[tuple] = []
            cur = start
            while True:
                todo.discard(cur)
                elems.append(("b",) + cur)
                nxt, dc, dk, sites = self._walk_next(*cur)
                cusps += dc
                corners += dk
                cusp_sites += sites
                if len(nxt) == 2:
                    elems.append(nxt[0])
                cur = (nxt[-1][1], nxt[-1][2])
                if cur == start:
                    break
            walks.append(Walk(tuple(elems), cusps, corners, tuple(cusp_sites)))
        for bid in sorted(self.circular, key=_key):
            for dr in (1, -1):
                walks.append(Walk((("b", bid, dr),), 0, 0, ()))
        walks.sort(key=lambda w: _key(w.key))
        return walks

    def complementary_regions(self) -> List["Region"]:
        walks = self.boundary_walks()
        bykey = {w.key: w for w in walks}
        regions: List[Region] = []
        used_walks, used_circles = set(), set()
        decls = self.region_decls or ()
        for decl in decls:
            ws = [bykey[k] for k in decl.get("walks", ())]
            if not ws:
                raise ValueError("region decl with no walks")
            circles = tuple(decl.get("circles", ()))
            for k in decl.get("walks", ()):
                if k in used_walks:
                    raise ValueError(f"walk {k!r} declared twice")
                used_walks.add(k)
            for c in circles:
                if c in used_circles:
                    raise ValueError(f"circle {c!r} declared twice")
                used_circles.add(c)
            regions.append(Region(tuple(ws), int(decl.get("genus", 0)), circles))
        leftover_circles = sorted(self.stop_free_circles - used_circles, key=_key)
        for w in walks:
            if w.key not in used_walks:
                regions.append(Region((w,), 0, ()))
        if leftover_circles and decls:
            raise ValueError(f"stop-free circles unassigned: {leftover_circles}")
        if leftover_circles and not decls and not walks:
            # a bare boundary circle bounds its own disk region
            for c in leftover_circles:
                regions.append(Region((), 0, (c,)))
        elif leftover_circles and not decls:
            raise ValueError(f"stop-free circles unassigned: {leftover_circles}")
        return regions

    # -- carried curves ----------------------------------------------------

    def smooth_transition_digraph(self):
        """Digraph on directed half-branches with smooth transitions."""
        edges = {}
        for bid in self.branches:
            for dr in (1, -1):
                edges[(bid, dr)] = []
        for bid in self.circular:
            edges[(bid, 1)] = [(bid, 1)]
            edges[(bid, -1)] = [(bid, -1)]
        for bid in self.branches - self.circular:
            for dr in (1, -1):
                head = 1 if dr == 1 else 0
                tgt = self.attach[(bid, head)]
                if tgt[0] != "switch":
                    continue
                _, sid, slot = tgt
                outs = ["left", "right"] if slot == "one" else ["one"]
                for o in outs:
                    b2, e2 = self.switches[sid][o]
                    edges[(bid, dr)].append((b2, 1 if e2 == 0 else -1))
        return edges

    def carried_cycles(self) -> List[Tuple]:
        """All simple cycles of the smooth-transition digraph, one
        representative per unoriented class, as cyclic step words."""
        edges = self.smooth_transition_digraph()
        seen = {}
        for cyc in simple_cycles_digraph(edges):
            word = tuple((b, 1 if d == 1 else -1) for b, d in cyc)
            w1 = least_rotation(word)
            w2 = least_rotation(rev_word(word))
            k = min(w1, w2, key=lambda t: [(_key(b), s) for b, s in t])
            seen.setdefault(k, w1)
        return [seen[k] for k in sorted(seen, key=lambda t: [(_key(b), s) for b, s in t])]

    def embedded_smooth_cycles(self) -> List[Tuple]:
        out = []
        for word in self.carried_cycles():
            bids = [b for b, _ in word]
            if len(set(bids)) == len(bids):
                out.append(word)
        return out

    # -- efficiency ---------------------------------------------------------

    def is_efficient(self):
        """True, or a witness describing why the track is not efficient."""
        diags = self.validate()
        if diags:
            raise ValueError(f"invalid track: {diags}")
        regions = self.complementary_regions()
        for r in regions:
            if r.index > 0 and not r.is_bigon:
                return ("positive_index", r)
        reeb = self._reeb_witness(regions)
        if reeb is not None:
            return reeb
        for r in regions:
            if r.is_cusped_bigon:
                return ("cusped_bigon", r)
        ann = self._carried_annulus_witness(regions)
        if ann is not None:
            return ("carried_annulus", ann)
        return True

    def _carried_annulus_witness(self, regions):
        cycles = self.embedded_smooth_cycles()
        cycle_branchsets = [frozenset(b for b, _ in w) for w in cycles]
        # two disjoint parallel cycles cobounding an annulus region,
        # or one cycle parallel to a stop-free boundary circle
        for r in regions:
            if r.genus != 0 or r.cusps or r.corners:
                continue
            smooth_walks = [w for w in r.walks if w.is_smooth_circle]
            if len(r.walks) != len(smooth_walks):
                continue
            sets = [frozenset(b for _, b, _ in w.elements) for w in smooth_walks]
            if len(smooth_walks) == 2 and not r.circles:
                if sets[0].isdisjoint(sets[1]) and sets[0] in cycle_branchsets and sets[1] in cycle_branchsets:
                    return ("parallel_cycles", smooth_walks[0].key, smooth_walks[1].key)
            if len(smooth_walks) == 1 and len(r.circles) == 1:
                if sets[0] in cycle_branchsets:
                    return ("boundary_parallel_cycle", smooth_walks[0].key, r.circles[0])
        return None

    def _reeb_witness(self, regions):
        cycles = self.embedded_smooth_cycles()
        infos = []
        for w in cycles:
            bids = frozenset(b for b, _ in w)
            sids = set()
            for b, _ in w:
                for end in (0, 1):
                    tgt = self.attach.get((b, end))
                    if tgt and tgt[0] == "switch":
                        sids.add(tgt[1])
            infos.append((w, bids, frozenset(sids)))
        # full Reeb: two disjoint embedded cycles joined by arcs attached
        # with consistent direction on both circles
        for (w1, b1, s1), (w2, b2, s2) in itertools.combinations(infos, 2):
            if not (b1.isdisjoint(b2) and s1.isdisjoint(s2)):
                continue
            arcs = []
            for bid in self.branches - self.circular - b1 - b2:
                t0 = self.attach[(bid, 0)]
                t1 = self.attach[(bid, 1)]
                if t0[0] == "switch" and t1[0] == "switch":
                    if (t0[1] in s1 and t1[1] in s2) or (t0[1] in s2 and t1[1] in s1):
                        arcs.append(bid)
            if not arcs:
                continue
            if self._consistent_attachments(w1, arcs) and self._consistent_attachments(w2, arcs):
                return ("reeb_annulus", (w1, w2, tuple(sorted(arcs, key=_key))))
        # half Reeb: one embedded cycle joined to a boundary circle by arcs
        for (w1, b1, s1) in infos:
            for circle, stops in self.boundary.items():
                arcs = []
                for v in stops:
                    bid, _ = self.stops[v]
                    other = self.attach[(bid, 0)] if self.attach[(bid, 0)][0] == "switch" else self.attach[(bid, 1)]
                    if other[0] == "switch" and other[1] in s1 and bid not in b1:
                        arcs.append(bid)
                if arcs and self._consistent_attachments(w1, arcs):
                    return ("half_reeb_annulus", (w1, circle, tuple(sorted(arcs, key=_key))))
        return None

    def _consistent_attachments(self, cycle_word, arcs) -> bool:
        """All ``arcs`` attach to the cycle with the same maw direction
        relative to the cycle's orientation (the Reeb criterion)."""
        steps = list(cycle_word)
        signs = []
        for arm in arcs:
            for end in (0, 1):
                tgt = self.attach.get((arm, end))
                if not tgt or tgt[0] != "switch":
                    continue
                sid = tgt[1]
                one_b, one_e = self.switches[sid]["one"]
                if one_b == arm:
                    continue
                # direction of the maw along the cycle: the one-slot branch
                # traversed away from the switch
                dr = 1 if one_e == 0 else -1
                if (one_b, dr) in steps:
                    signs.append(1)
                elif (one_b, -dr) in steps:
                    signs.append(-1)
        if not signs:
            return False
        return len(set(signs)) == 1

    # -- spiraling structure -------------------------------------------------

    def spiraling_structure(self, orientation_hints: Optional[dict] = None):
        if self.large_branches():
            return None
        hints = orientation_hints or {}
        markers = {}
        orient = {}  # bid -> +1/-1: flow direction on through-branches
        for bid in self.branch_ids():
            if bid in self.circular:
                orient[bid] = hints.get(bid, 1)
                markers[bid] = ("CIRCLE", orient[bid])
                continue
            inward = []
            for end in (0, 1):
                tgt = self.attach[(bid, end)]
                inward.append(tgt[0] == "switch" and tgt[2] == "one")
            if inward == [True, False]:
                markers[bid] = ("AT_END", 0)
                orient[bid] = 1
            elif inward == [False, True]:
                markers[bid] = ("AT_END", 1)
                orient[bid] = -1
            else:
                markers[bid] = ("INTERIOR", None)
                orient[bid] = 0
        # sink circles: follow the flow forward from every outward end
        succ = {}
        for bid in self.branch_ids():
            if bid in self.circular:
                succ[(bid, orient[bid])] = (bid, orient[bid])
                continue
            for dr in (1, -1):
                if orient[bid] not in (dr, 0):
                    continue
                head = 1 if dr == 1 else 0
                tgt = self.attach[(bid, head)]
                if tgt[0] == "stop":
                    succ[(bid, dr)] = ("stop", tgt[1])
                else:
                    _, sid, slot = tgt
                    if slot == "one":
                        continue  # flow never enters a one-slot
                    b2, e2 = self.switches[sid]["one"]
                    succ[(bid, dr)] = (b2, 1 if e2 == 0 else -1)
        sink_stops = set(self.stops)
        sink_circles = []
        visited = set()
        for node in sorted(succ, key=_key):
            if node in visited:
                continue
            path, seen_at = [], {}
            cur = node
            while True:
                if cur[0] == "stop" or cur not in succ:
                    visited.update(path)
                    break
                if cur in seen_at:
                    cyc = tuple(path[seen_at[cur]:])
                    sink_circles.append(least_rotation(cyc))
                    visited.update(path)
                    break
                if cur in visited:
                    break
                seen_at[cur] = len(path)
                path.append(cur)
                cur = succ[cur]
        uniq = sorted(set(sink_circles), key=lambda t: [(_key(b), s) for b, s in t])
        return SpiralingStructure(markers, tuple(sorted(sink_stops, key=_key)), tuple(uniq))


@dataclass(frozen=True)
class Walk:
    elements: Tuple[tuple, ...]
    cusps: int
    corners: int
    cusp_sites: Tuple[tuple, ...] = ()

    @property
    def key(self):
        return min(
            (e for e in self.elements if e[0] == "b"),
            key=lambda e: (_key(e[1]), e[2]),
        )

    @property
    def is_smooth_circle(self) -> bool:
        return self.cusps == 0 and self.corners == 0 and all(e[0] == "b" for e in self.elements)

    @property
    def stops_visited(self) -> Tuple:
        out = []
        for e in self.elements:
            if e[0] == "a":
                out += [e[2], e[3]]
        return tuple(out)


@dataclass(frozen=True)
class Region:
    walks: Tuple[Walk, ...]
    genus: int = 0
    circles: Tuple[object, ...] = ()

    @property
    def cusps(self) -> int:
        return sum(w.cusps for w in self.walks)

    @property
    def corners(self) -> int:
        return sum(w.corners for w in self.walks)

    @property
    def chi(self) -> int:
        return 2 - 2 * self.genus - (len(self.walks) + len(self.circles))

    @property
    def index(self) -> Fraction:
        return Fraction(self.chi) - Fraction(self.cusps, 2) - Fraction(self.corners, 4)

    @property
    def is_bigon(self) -> bool:
        return self.chi == 1 and self.cusps == 0 and self.corners == 2

    @property
    def is_cusped_bigon(self) -> bool:
        return self.chi == 1 and self.cusps == 2 and self.corners == 0

    @property
    def is_rectangle(self) -> bool:
        return self.chi == 1 and self.cusps == 0 and self.corners == 4

    @property
    def is_one_cusped_triangle(self) -> bool:
        return self.chi == 1 and self.cusps == 1 and self.corners == 2


@dataclass(frozen=True)
class SpiralingStructure:
    markers: dict
    sink_stops: Tuple
    sink_circles: Tuple

    @property
    def sinks(self):
        return {"stops": self.sink_stops, "circles": self.sink_circles}


# -- public operations mirroring the module contract -----------------------


def validate_track(t: TrainTrack) -> List[Diagnostic]:
    return t.validate()


def classify_branch(t: TrainTrack, bid) -> str:
    return t.classify_branch(bid)


def complementary_regions(t: TrainTrack) -> List[Region]:
    return t.complementary_regions()


def is_efficient(t: TrainTrack):
    return t.is_efficient()


def carried_cycles(t: TrainTrack):
    return t.carried_cycles()


def spiraling_structure(t: TrainTrack, orientation_hints=None):
    return t.spiraling_structure(orientation_hints)
