"""Endperiodic system fixtures: translation, chairs, fenley, book.

Fixtures are built programmatically (less error-prone than hand-written
serializations) and are deterministic; the CLI emits them through the
``system.v1`` schema.
"""

from __future__ import annotations

from fractions import Fraction

from .endperiodic import (
    EndCyclePattern,
    NEGATIVE,
    POSITIVE,
    TiledTrackSystem,
    xstop,
)
from .lamination import cyclic_route
from .routes import Route, STOP
from .track import TrainTrack


def translation_system() -> TiledTrackSystem:
    """Pure translation: empty lamination and empty track."""
    return TiledTrackSystem(
        track=TrainTrack([]),
        rays={},
        closed=(),
        ends=(),
        hm_compatible=True,
        meta={"name": "translation"},
    )


def _arc_cycle(cid: str) -> EndCyclePattern:
    template = TrainTrack(
        ["a"],
        attach={("a", 0): ("stop", "in:0"), ("a", 1): ("stop", "out:0")},
        boundary={"bin": ("in:0",), "bout": ("out:0",)},
    )
    return EndCyclePattern(
        cid=cid,
        sign=POSITIVE,
        period=1,
        template=template,
        crossings=("0",),
        cusp_tails={},
        closed_lifts=(Route.periodic([], [("a", 1)]),),
        weights={"0": 1},
    )


def chairs_system() -> TiledTrackSystem:
    """The invariant line of the stack-of-chairs map: one arc running
    between the two positive ends, no switches, no splits ever."""
    track = TrainTrack(
        ["a0"],
        attach={("a0", 0): ("stop", xstop("e0", "0")), ("a0", 1): ("stop", xstop("e1", "0"))},
        boundary={},
    )
    sys = TiledTrackSystem(
        track=track,
        rays={},
        closed=(),
        ends=(_arc_cycle("e0"), _arc_cycle("e1")),
        weights={"a0": Fraction(1)},
        template_weights={"e0": {"a": Fraction(1)}, "e1": {"a": Fraction(1)}},
        meta={"name": "chairs", "markings": {"gamma": {"e0": [1], "e1": [1]},
                                             "phi": {"e0": [1], "e1": [1]}}},
    )
    return sys


def book_system() -> TiledTrackSystem:
    """Two stack-of-chairs pieces glued into a book of I-bundles; the
    second binding's dynamic orientation is reversed, recorded in the
    homology marking (classes v and -v)."""
    track = TrainTrack(
        ["a0", "b0"],
        attach={
            ("a0", 0): ("stop", xstop("e0", "0")),
            ("a0", 1): ("stop", xstop("e1", "0")),
            ("b0", 0): ("stop", xstop("e2", "0")),
            ("b0", 1): ("stop", xstop("e3", "0")),
        },
        boundary={},
    )
    sys = TiledTrackSystem(
        track=track,
        rays={},
        closed=(),
        ends=(_arc_cycle("e0"), _arc_cycle("e1"), _arc_cycle("e2"), _arc_cycle("e3")),
        hm_compatible=False,
        meta={"name": "book", "markings": {"gamma": {"e0": [1], "e1": [1],
                                                     "e2": [-1], "e3": [-1]},
                                           "phi": {"e0": [1], "e1": [1],
                                                   "e2": [-1], "e3": [-1]}}},
    )
    return sys
