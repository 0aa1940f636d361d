import itertools
import random

import numpy as np
import pytest

from oracles import brute_scene_distance
from scenecodec.core import Image
from scenecodec.errors import (
    AmbiguousSceneError,
    FormatError,
    NoObjectsError,
    SceneError,
    TooManyObjectsError,
)
from scenecodec.scene import (
    BACKGROUND,
    Color,
    PALETTE,
    SceneGraph,
    SceneObject,
    Shape,
    Size,
    analyze,
    render,
    scene_distance,
)

ALL_SHAPES = list(Shape)
ALL_COLORS = list(Color)
ALL_SIZES = list(Size)
ALL_CELLS = [(c, r) for c in range(4) for r in range(4)]


def random_scene(rng, max_objects=4):
    k = rng.randint(1, max_objects)
    cells = rng.sample(ALL_CELLS, k)
    return SceneGraph(
        tuple(
            SceneObject(
                rng.choice(ALL_SHAPES), rng.choice(ALL_COLORS), rng.choice(ALL_SIZES), cell
            )
            for cell in cells
        )
    )


class TestPalette:
    def test_entries_distinct_and_far_apart(self):
        rgbs = list(PALETTE.values())
        assert len(set(rgbs)) == 8
        for a, b in itertools.combinations(rgbs, 2):
            dist = sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5
            assert dist >= 128

    def test_background_outside_palette(self):
        assert BACKGROUND not in PALETTE.values()


class TestSceneGraph:
    def test_canonical_order(self):
        objs = (
            SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (3, 2)),
            SceneObject(Shape.SQUARE, Color.BLUE, Size.LARGE, (0, 0)),
            SceneObject(Shape.TRIANGLE, Color.CYAN, Size.SMALL, (1, 2)),
        )
        graph = SceneGraph(objs)
        assert [o.cell for o in graph.objects] == [(0, 0), (1, 2), (3, 2)]

    def test_rejects_duplicate_cells(self):
        objs = (
            SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (1, 1)),
            SceneObject(Shape.SQUARE, Color.BLUE, Size.LARGE, (1, 1)),
        )
        with pytest.raises(ValueError):
            SceneGraph(objs)

    def test_rejects_empty_and_oversized(self):
        with pytest.raises(ValueError):
            SceneGraph(())
        objs = tuple(
            SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, cell)
            for cell in ALL_CELLS[:5]
        )
        with pytest.raises(ValueError):
            SceneGraph(objs)

    def test_cell_bounds(self):
        with pytest.raises(ValueError):
            SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (4, 0))

    def test_text_round_trip(self):
        rng = random.Random(5)
        for _ in range(50):
            s = random_scene(rng)
            assert SceneGraph.from_text(s.to_text()) == s

    def test_text_format(self):
        s = SceneGraph((SceneObject(Shape.SQUARE, Color.MAGENTA, Size.LARGE, (2, 3)),))
        assert s.to_text() == "square magenta large 2 3"

    def test_text_rejects_garbage(self):
        with pytest.raises(FormatError):
            SceneGraph.from_text("pentagon red small 0 0")
        with pytest.raises(FormatError):
            SceneGraph.from_text("")


class TestRender:
    def test_pixel_checks_large_red_circle(self):
        s = SceneGraph((SceneObject(Shape.CIRCLE, Color.RED, Size.LARGE, (0, 0)),))
        img = render(s, 256, 256)
        assert tuple(img.pixels[32, 32]) == (255, 0, 0)
        assert tuple(img.pixels[160, 160]) == BACKGROUND

    def test_determinism(self):
        rng = random.Random(1)
        s = random_scene(rng)
        assert render(s, 256, 256).tobytes() == render(s, 256, 256).tobytes()

    def test_rejects_bad_dimensions(self):
        s = SceneGraph((SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (0, 0)),))
        with pytest.raises(ValueError):
            render(s, 32, 32)  # too small
        with pytest.raises(ValueError):
            render(s, 130, 256)  # not divisible by 4

    def test_non_square_render(self):
        s = SceneGraph((SceneObject(Shape.SQUARE, Color.BLUE, Size.LARGE, (2, 1)),))
        img = render(s, 512, 256)
        assert analyze(img) == s


class TestAnalyze:
    def test_round_trip_exhaustive_single_object(self):
        for shape, color, size in itertools.product(ALL_SHAPES, ALL_COLORS, ALL_SIZES):
            cell = ((hash((shape, color, size)) % 4), (hash((color, size, shape)) >> 3) % 4)
            s = SceneGraph((SceneObject(shape, color, size, cell),))
            assert analyze(render(s, 256, 256)) == s

    def test_round_trip_all_cells(self):
        for cell in ALL_CELLS:
            s = SceneGraph((SceneObject(Shape.TRIANGLE, Color.BLACK, Size.LARGE, cell),))
            assert analyze(render(s, 256, 256)) == s

    def test_round_trip_randomized_multi_object(self):
        rng = random.Random(2024)
        for _ in range(150):
            s = random_scene(rng)
            assert analyze(render(s, 256, 256)) == s

    def test_adjacent_cells_recovered(self):
        s = SceneGraph(
            (
                SceneObject(Shape.SQUARE, Color.BLUE, Size.LARGE, (2, 1)),
                SceneObject(Shape.CIRCLE, Color.YELLOW, Size.SMALL, (3, 1)),
            )
        )
        assert analyze(render(s, 256, 256)) == s

    def test_uniform_background_is_no_objects(self):
        img = Image.filled(256, 256, BACKGROUND)
        with pytest.raises(NoObjectsError):
            analyze(img)

    def test_too_many_components(self):
        arr = np.empty((256, 256, 3), dtype=np.uint8)
        arr[:, :] = BACKGROUND
        for i in range(5):
            y, x = 20 + 40 * i, 16 + 44 * i
            arr[y : y + 8, x : x + 8] = (255, 0, 0)
        with pytest.raises(TooManyObjectsError):
            analyze(Image.from_array(arr))

    def test_centroid_near_boundary_is_ambiguous(self):
        arr = np.empty((256, 256, 3), dtype=np.uint8)
        arr[:, :] = BACKGROUND
        arr[54:74, 54:74] = (0, 0, 255)  # centroid at x=64, a cell boundary
        with pytest.raises(AmbiguousSceneError):
            analyze(Image.from_array(arr))

    def test_rejects_indivisible_dimensions(self):
        img = Image.filled(255, 255, BACKGROUND)
        with pytest.raises(ValueError):
            analyze(img)

    def test_noise_image_gives_structured_error(self):
        rng = np.random.default_rng(11)
        arr = rng.integers(0, 256, (256, 256, 3), dtype=np.uint8)
        with pytest.raises(SceneError):
            analyze(Image.from_array(arr))


class TestSceneDistance:
    def test_identity(self):
        rng = random.Random(77)
        for _ in range(20):
            s = random_scene(rng)
            assert scene_distance(s, s) == 0

    def test_single_attribute(self):
        a = SceneGraph((SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (1, 1)),))
        b = SceneGraph((SceneObject(Shape.CIRCLE, Color.BLUE, Size.SMALL, (1, 1)),))
        assert scene_distance(a, b) == 1

    def test_unmatched_costs_four(self):
        a = SceneGraph((SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (1, 1)),))
        b = SceneGraph(
            (
                SceneObject(Shape.CIRCLE, Color.RED, Size.SMALL, (1, 1)),
                SceneObject(Shape.SQUARE, Color.BLUE, Size.LARGE, (2, 2)),
            )
        )
        assert scene_distance(a, b) == 4

    def test_matches_brute_force(self):
        rng = random.Random(31)
        for _ in range(200):
            a, b = random_scene(rng), random_scene(rng)
            expected = brute_scene_distance(
                [(o.shape, o.color, o.size, o.cell) for o in a.objects],
                [(o.shape, o.color, o.size, o.cell) for o in b.objects],
            )
            assert scene_distance(a, b) == expected

    def test_symmetry_and_triangle_inequality(self):
        rng = random.Random(13)
        for _ in range(200):
            a, b, c = (random_scene(rng) for _ in range(3))
            assert scene_distance(a, b) == scene_distance(b, a)
            assert scene_distance(a, c) <= scene_distance(a, b) + scene_distance(b, c)
