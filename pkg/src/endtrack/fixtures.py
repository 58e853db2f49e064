"""Built-in fixture library.

Plain-track fixtures (large, spiral, barbell, circle) are constructed
here directly; the endperiodic system fixtures (translation, chairs,
fenley, book) are built in :mod:`endtrack.systems_fixtures` and
re-exported through :func:`get_fixture`.
"""

from __future__ import annotations

from .track import TrainTrack


def f_large() -> TrainTrack:
    """A single large branch with four mixed legs to stops, in a disk."""
    attach = {
        ("b", 0): ("switch", "s1", "one"),
        ("b", 1): ("switch", "s2", "one"),
        ("wl", 0): ("switch", "s1", "left"),
        ("wl", 1): ("stop", "w"),
        ("xl", 0): ("switch", "s1", "right"),
        ("xl", 1): ("stop", "x"),
        ("zl", 0): ("switch", "s2", "left"),
        ("zl", 1): ("stop", "z"),
        ("yl", 0): ("switch", "s2", "right"),
        ("yl", 1): ("stop", "y"),
    }
    return TrainTrack(
        branches=["b", "wl", "xl", "yl", "zl"],
        attach=attach,
        boundary={"c0": ("w", "x", "z", "y")},
        ambient_chi=1,
    )


def f_circle() -> TrainTrack:
    """One circular branch, core of an annulus."""
    t = TrainTrack(
        branches=["c"],
        circular=["c"],
        boundary={},
        stop_free_circles=["outer", "inner"],
        ambient_chi=0,
    )
    walks = t.boundary_walks()
    decls = [
        {"walks": [walks[0].key], "genus": 0, "circles": ["outer"]},
        {"walks": [walks[1].key], "genus": 0, "circles": ["inner"]},
    ]
    return t.replace(region_decls=decls)


def f_spiral() -> TrainTrack:
    """A circle with one arm spiraling in from a stop."""
    attach = {
        ("c", 0): ("switch", "s", "one"),
        ("c", 1): ("switch", "s", "left"),
        ("a", 0): ("switch", "s", "right"),
        ("a", 1): ("stop", "p"),
    }
    t = TrainTrack(
        branches=["c", "a"],
        attach=attach,
        boundary={"c0": ("p",)},
        stop_free_circles=["inner"],
        ambient_chi=0,
    )
    walks = t.boundary_walks()
    # the walk not meeting the stop is the inner smooth circle
    inner = [w for w in walks if not w.stops_visited]
    decls = [{"walks": [inner[0].key], "genus": 0, "circles": ["inner"]}]
    return t.replace(region_decls=decls)


def f_barbell() -> TrainTrack:
    """One branch between two stops."""
    return TrainTrack(
        branches=["m"],
        attach={("m", 0): ("stop", "p"), ("m", 1): ("stop", "q")},
        boundary={"c0": ("p", "q")},
        ambient_chi=1,
    )


def f_reeb() -> TrainTrack:
    """Two parallel carried circles joined by consistently attached arcs."""
    attach = {
        # circle 1: loop c1 through switch u
        ("c1", 0): ("switch", "u", "one"),
        ("c1", 1): ("switch", "u", "left"),
        # circle 2: loop c2 through switch v
        ("c2", 0): ("switch", "v", "one"),
        ("c2", 1): ("switch", "v", "left"),
        # connecting arc
        ("m", 0): ("switch", "u", "right"),
        ("m", 1): ("switch", "v", "right"),
    }
    t = TrainTrack(
        branches=["c1", "c2", "m"],
        attach=attach,
        boundary={},
        stop_free_circles=["outer", "inner"],
        ambient_chi=0,
    )
    walks = t.boundary_walks()
    smooth = [w for w in walks if w.is_smooth_circle]
    decls = [{"walks": [w.key], "genus": 0, "circles": [c]} for w, c in zip(smooth, ["outer", "inner"])]
    rest = [w for w in walks if not w.is_smooth_circle]
    decls += [{"walks": [w.key], "genus": 0} for w in rest]
    return t.replace(region_decls=decls)


TRACK_FIXTURES = {
    "large": f_large,
    "circle": f_circle,
    "spiral": f_spiral,
    "barbell": f_barbell,
    "reeb": f_reeb,
}
