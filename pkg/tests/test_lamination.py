import itertools
import random

import pytest

from endtrack import moves
from endtrack.canonical import canonical_form
from endtrack.fixtures import f_large, f_spiral
from endtrack.lamination import (
    GRAFT,
    NOT_DIVERGENT,
    CarriedLamination,
    cusp_order,
    cyclic_route,
    lambda_route,
    lambda_split,
    large_biroutes,
    maximal_splitting,
    reduced_lambda_route,
    shift_of_divergent_neighbors,
    split_verdict,
    validate_carried,
)
from endtrack.routes import OPEN, STOP, Route

from _leafmodel import random_folded_system, random_ordered_system, zipper_system


def spiral_lam(wraps=2):
    ray1 = Route.periodic([], [("c", 1)])
    ray2 = Route.periodic([("c", 1)] * wraps, [("c", 1)])
    return CarriedLamination(
        {"s": (ray1, ray2)}, closed_classes=[cyclic_route([("c", 1)])]
    )


def test_validate_carried_fixtures():
    t = f_large()
    lam = CarriedLamination({
        "s1": (Route.finite([("b", 1), ("yl", 1)], STOP),
               Route.finite([("b", 1), ("zl", 1)], STOP)),
        "s2": (Route.finite([("b", -1), ("xl", 1)], STOP),
               Route.finite([("b", -1), ("wl", 1)], STOP)),
    })
    assert validate_carried(t, lam) == []
    assert validate_carried(f_spiral(), spiral_lam()) == []


def test_validate_inconsistent_closed_classes():
    t = f_spiral()
    lam = CarriedLamination(
        {"s": (Route.periodic([], [("c", 1)]), Route.periodic([], [("c", 1)]))},
        closed_classes=[cyclic_route([("c", 1)]), cyclic_route([("c", -1)])],
    )
    diags = validate_carried(t, lam)
    assert any(d.code == "inconsistent" for d in diags)


def test_lambda_route_divergence_and_equality():
    t = f_large()
    lam = CarriedLamination({
        "s1": (Route.finite([("b", 1), ("yl", 1)], STOP),
               Route.finite([("b", 1), ("zl", 1)], STOP)),
        "s2": (Route.finite([("b", -1), ("xl", 1)], STOP),
               Route.finite([("b", -1), ("wl", 1)], STOP)),
    })
    r = lambda_route(t, lam, "s1")
    assert r.prefix == (("b", 1),) and r.terminal == OPEN
    lam2 = CarriedLamination({
        "s1": (Route.finite([("b", 1), ("zl", 1)], STOP),
               Route.finite([("b", 1), ("zl", 1)], STOP)),
        "s2": (Route.finite([("b", -1), ("wl", 1)], STOP),
               Route.finite([("b", -1), ("wl", 1)], STOP)),
    })
    r = lambda_route(t, lam2, "s1")
    assert r.prefix == (("b", 1), ("zl", 1)) and r.terminal == STOP


def test_reduced_route_tags():
    ts = f_spiral()
    red, tag = reduced_lambda_route(ts, spiral_lam(), "s")
    assert tag == GRAFT and len(red.prefix) == 0


def test_cusp_order_spec_examples():
    # equal stop-terminated routes are comparable both ways
    t = f_large()
    lam = CarriedLamination({
        "s1": (Route.finite([("b", 1), ("zl", 1)], STOP),
               Route.finite([("b", 1), ("zl", 1)], STOP)),
        "s2": (Route.finite([("b", -1), ("wl", 1)], STOP),
               Route.finite([("b", -1), ("wl", 1)], STOP)),
    })
    order = cusp_order(t, lam)
    assert order.persistent == ("s1", "s2")
    # distinct terminals are incomparable
    assert not order.ge("s1", "s2") and not order.ge("s2", "s1")


def test_cusp_order_suffix_relation():
    # a zipper chain onto one stop is totally ordered
    z = zipper_system(3)
    lam = z.derive_lamination()
    order = cusp_order(z.track, lam)
    comp = sorted((a, b) for a, b in order.relation if a != b)
    assert comp == [("S1", "S2"), ("S1", "S3"), ("S2", "S3")]
    rng = random.Random(2)
    seen_comparable = 0
    for _ in range(25):
        sys_ = random_ordered_system(rng)
        lam = sys_.derive_lamination()
        order = cusp_order(sys_.track, lam)
        for c1, c2 in order.relation:
            if c1 == c2:
                continue
            r1 = lambda_route(sys_.track, lam, c1)
            r2 = lambda_route(sys_.track, lam, c2)
            assert len(r2.prefix) >= len(r1.prefix)
            assert r2.prefix[len(r2.prefix) - len(r1.prefix):] == r1.prefix
            seen_comparable += 1
    assert seen_comparable > 0


def test_biroutes_nonempty_iff_large():
    rng = random.Random(9)
    for _ in range(40):
        sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(0, 4))
        lam = sys_.derive_lamination()
        br = large_biroutes(sys_.track, lam)
        assert bool(br) == bool(sys_.track.large_branches())


def test_biroutes_on_spiraling_track_empty():
    assert large_biroutes(f_spiral(), spiral_lam()) == []


def test_disjoint_union_biroutes_add():
    rng = random.Random(21)
    sys_ = random_folded_system(rng, n_chords=3, n_folds=2)
    lam = sys_.derive_lamination()
    n = len(large_biroutes(sys_.track, lam))
    # build the disjoint union with itself
    t = sys_.track

    def rn(x, tag):
        return f"{tag}_{x}"

    branches, attach, boundary = [], {}, {}
    cusp = {}
    for tag in ("L", "R"):
        for b in t.branches:
            branches.append(rn(b, tag))
        for (b, e), tgt in t.attach.items():
            if tgt[0] == "switch":
                attach[(rn(b, tag), e)] = ("switch", rn(tgt[1], tag), tgt[2])
            else:
                attach[(rn(b, tag), e)] = ("stop", rn(tgt[1], tag))
        for c, stops in t.boundary.items():
            boundary[rn(c, tag)] = tuple(rn(v, tag) for v in stops)
        for sid, (r1, r2) in lam.cusp_data.items():
            ren = lambda r: Route(
                tuple((rn(b, tag), s) for b, s in r.prefix), r.cycle, r.terminal
            )
            cusp[rn(sid, tag)] = (ren(r1), ren(r2))
    t2 = TrainTrackFactory(branches, attach, boundary)
    lam2 = CarriedLamination(cusp)
    assert len(large_biroutes(t2, lam2)) == 2 * n


def TrainTrackFactory(branches, attach, boundary):
    from endtrack.track import TrainTrack

    return TrainTrack(branches, attach=attach, boundary=boundary)


def test_maximal_splitting_terminates_spiraling():
    rng = random.Random(13)
    for _ in range(30):
        sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(1, 4))
        lam = sys_.derive_lamination()
        t2, lam2, events = maximal_splitting(sys_.track, lam)
        assert t2.spiraling_structure() is not None
        assert len(events) == len(large_biroutes(sys_.track, lam))
        assert validate_carried(t2, lam2) == []


def test_confluence_all_orders():
    rng = random.Random(17)
    checked = 0
    for _ in range(60):
        sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(1, 3))
        lam = sys_.derive_lamination()
        larges = sys_.track.large_branches()
        if not 2 <= len(larges) <= 3:
            continue
        terminals = set()

        def explore(t, lm):
            ls = t.large_branches()
            if not ls:
                terminals.add(canonical_form(t, lm))
                return
            for b in ls:
                t2, lm2, _ = lambda_split(t, lm, b)
                explore(t2, lm2)

        explore(sys_.track, lam)
        assert len(terminals) == 1
        checked += 1
        if checked >= 8:
            break
    assert checked >= 4


def test_order_preservation_under_splits():
    rng = random.Random(23)
    checked = 0
    for trial in range(60):
        if trial % 2:
            sys_ = random_ordered_system(rng)
        else:
            sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(1, 4))
        lam = sys_.derive_lamination()
        t = sys_.track
        for b in t.large_branches():
            before = cusp_order(t, lam)
            t2, lam2, ev = lambda_split(t, lam, b)
            after = cusp_order(t2, lam2)
            rename = ev.record.switch_map
            if ev.kind == moves.COLLISION:
                survivors = [c for c in before.persistent if c not in (ev.record.A, ev.record.B)]
            else:
                survivors = list(before.persistent)
            mapped = {c: rename.get(c, c) for c in survivors}
            assert set(mapped.values()) <= set(after.persistent)
            for c1 in survivors:
                for c2 in survivors:
                    assert before.ge(c2, c1) == after.ge(mapped[c2], mapped[c1])
            # graft circular orders map across
            ga = {tuple(v): k for k, v in before.graft_orders}
            checked += 1
    assert checked > 20


def test_shift_of_divergent_neighbors():
    rng = random.Random(31)
    hits = {"applied": 0, "not": 0}
    for _ in range(80):
        sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(1, 4))
        lam = sys_.derive_lamination()
        t = sys_.track
        if lam.closed_classes:
            continue
        for m in t.branch_ids():
            if t.classify_branch(m) != "MIXED":
                continue
            e0, e1 = t.attach[(m, 0)], t.attach[(m, 1)]
            if e0[0] != "switch" or e1[0] != "switch" or e0[1] == e1[1]:
                continue
            res = shift_of_divergent_neighbors(t, lam, m)
            if res == NOT_DIVERGENT:
                hits["not"] += 1
            else:
                t2, lam2, _ = res
                assert validate_carried(t2, lam2) == []
                hits["applied"] += 1
    assert hits["applied"] > 0


def test_divergent_shift_preserves_maximal_splitting():
    rng = random.Random(37)
    checked = 0
    for _ in range(120):
        sys_ = random_folded_system(rng, n_chords=rng.randint(2, 4), n_folds=rng.randint(1, 3))
        lam = sys_.derive_lamination()
        t = sys_.track
        if lam.closed_classes:
            continue
        for m in t.branch_ids():
            if t.classify_branch(m) != "MIXED":
                continue
            e0, e1 = t.attach[(m, 0)], t.attach[(m, 1)]
            if e0[0] != "switch" or e1[0] != "switch" or e0[1] == e1[1]:
                continue
            res = shift_of_divergent_neighbors(t, lam, m)
            if res == NOT_DIVERGENT:
                continue
            t2, lam2, _ = res
            a = maximal_splitting(t, lam)
            b = maximal_splitting(t2, lam2)
            assert canonical_form(a[0], a[1]) == canonical_form(b[0], b[1])
            checked += 1
        if checked >= 6:
            break
    assert checked >= 3
