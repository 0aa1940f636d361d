"""The text compression domain: captions in a fixed LL(1) grammar.

Grammar (tokens separated by single spaces):

    caption  := object { relation object }
    object   := "a" size color shape
    size     := "small" | "large"
    color    := "red"|"green"|"blue"|"yellow"|"cyan"|"magenta"|"white"|"black"
    shape    := "circle"|"square"|"triangle"
    relation := "left of" | "right of" | "above" | "below"

A relation states how the previous object sits relative to the next one
("x above y" means x is above y). Generation walks the scene in canonical
order, so only "above" and "left of" ever occur in generated captions;
parsing accepts all four and re-anchors objects deterministically: the
first object lands on cell (1, 1) and every following object lands on the
nearest free cell in the stated direction from the previous object.

parse(describe(s)) == s exactly for scenes reachable by that placement
walk; the corpus generator samples only such scenes. Captions over
arbitrary cell layouts still parse, but to the re-anchored scene.
"""

from __future__ import annotations

from .errors import CaptionError, CaptionParseError, PlacementError
from .scene import GRID, Color, SceneGraph, SceneObject, Shape, Size

SIZES = {s.value.encode(): s for s in Size}
COLORS = {c.value.encode(): c for c in Color}
SHAPES = {s.value.encode(): s for s in Shape}

DEFAULT_ANCHOR = (1, 1)

# relation word -> (dcol, drow) scan direction for placing the next object
RELATION_STEPS = {
    b"above": (0, 1),
    b"below": (0, -1),
    b"left": (1, 0),
    b"right": (-1, 0),
}


def _relation_word(prev: SceneObject, nxt: SceneObject) -> str:
    """How ``prev`` sits relative to ``nxt``; row difference dominates."""
    (pc, pr), (nc, nr) = prev.cell, nxt.cell
    if pr < nr:
        return "above"
    if pr > nr:
        return "below"
    return "left of" if pc < nc else "right of"


def describe(s: SceneGraph) -> str:
    """Deterministic caption for a scene graph, objects in canonical order."""
    parts = []
    prev = None
    for obj in s.objects:
        if prev is not None:
            parts.append(_relation_word(prev, obj))
        parts.append(f"a {obj.size.value} {obj.color.value} {obj.shape.value}")
        prev = obj
    return " ".join(parts)


def _tokenize(data: bytes) -> list[tuple[bytes, int]]:
    """Tokens with byte offsets. Splitting keeps empty tokens so leading,
    trailing, and doubled spaces surface as grammar errors."""
    tokens = []
    offset = 0
    for tok in data.split(b" "):
        tokens.append((tok, offset))
        offset += len(tok) + 1
    return tokens


class _Parser:
    def __init__(self, data: bytes):
        self.tokens = _tokenize(data)
        self.i = 0
        self.end = len(data)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, self.end)

    def next_token(self, expected: str) -> tuple[bytes, int]:
        tok, offset = self.peek()
        if tok is None:
            raise CaptionParseError(f"expected {expected}, found end of caption", offset)
        self.i += 1
        return tok, offset

    def expect(self, literal: bytes):
        tok, offset = self.next_token(repr(literal.decode()))
        if tok != literal:
            raise CaptionParseError(
                f"expected {literal.decode()!r}, found {tok!r}", offset
            )

    def lookup(self, table, what: str):
        tok, offset = self.next_token(what)
        if tok not in table:
            raise CaptionParseError(f"unknown {what} token {tok!r}", offset)
        return table[tok]

    def parse_object(self):
        self.expect(b"a")
        size = self.lookup(SIZES, "size")
        color = self.lookup(COLORS, "color")
        shape = self.lookup(SHAPES, "shape")
        return shape, color, size

    def parse_relation(self) -> bytes:
        tok, offset = self.next_token("relation")
        if tok in (b"left", b"right"):
            self.expect(b"of")
            return tok
        if tok in (b"above", b"below"):
            return tok
        raise CaptionParseError(f"unknown relation token {tok!r}", offset)


def _place(occupied: set, anchor: tuple[int, int], relation: bytes) -> tuple[int, int]:
    dcol, drow = RELATION_STEPS[relation]
    col, row = anchor[0] + dcol, anchor[1] + drow
    while 0 <= col < GRID and 0 <= row < GRID:
        if (col, row) not in occupied:
            return (col, row)
        col += dcol
        row += drow
    raise PlacementError(
        f"no free cell {relation.decode()!r} of cell {anchor} on the grid"
    )


def parse(caption: str | bytes) -> SceneGraph:
    """Parses a caption and anchors its objects onto the placement grid.

    Total on arbitrary byte input: every input either yields a scene
    graph or raises CaptionParseError / PlacementError.
    """
    if isinstance(caption, str):
        data = caption.encode("utf-8", errors="replace")
    else:
        data = bytes(caption)
    if not data:
        raise CaptionParseError("empty caption", 0)
    parser = _Parser(data)
    shape, color, size = parser.parse_object()
    cell = DEFAULT_ANCHOR
    occupied = {cell}
    objects = [SceneObject(shape=shape, color=color, size=size, cell=cell)]
    while parser.peek()[0] is not None:
        relation = parser.parse_relation()
        shape, color, size = parser.parse_object()
        cell = _place(occupied, cell, relation)
        occupied.add(cell)
        objects.append(SceneObject(shape=shape, color=color, size=size, cell=cell))
        if len(objects) > GRID:
            raise PlacementError(f"caption describes more than {GRID} objects")
    return SceneGraph(tuple(objects))


def validate(caption: str | bytes) -> bool:
    """True iff the caption parses and places."""
    try:
        parse(caption)
    except CaptionError:
        return False
    return True
