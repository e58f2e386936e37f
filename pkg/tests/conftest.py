"""Shared fixtures: the worked four-plane scene, the 100-detection counting
fixture, and the synthetic flood corpus."""

from __future__ import annotations

import pytest

from sceneq import (
    Corpus,
    Detection,
    GsdMetadata,
    OrientedBox,
    PredicateContext,
    Scene,
    parse_query,
)


@pytest.fixture
def ctx():
    return PredicateContext()


@pytest.fixture
def four_plane_scene():
    """Four planes: confidences .90/.85/.70/.70, centers x = 50/90/40/80."""
    return Scene(
        "planes",
        (
            Detection(0, OrientedBox(50, 10, 10, 4), "plane", 0.90),
            Detection(1, OrientedBox(90, 10, 10, 4), "plane", 0.85),
            Detection(2, OrientedBox(40, 30, 10, 4), "plane", 0.70),
            Detection(3, OrientedBox(80, 30, 10, 4), "plane", 0.70),
        ),
    )


def _spread_boxes(count, x0, y0, step=60.0, w=10.0, h=6.0):
    return [OrientedBox(x0 + i * step, y0, w, h) for i in range(count)]


@pytest.fixture
def counting_scene():
    """100 detections: 10 bridges, 5 storage tanks, 10 ships, 4 harbors, one
    each of roundabout / ground track field / soccer ball field, 68 cars."""
    detections = []

    def add(label, count, y):
        start = len(detections)
        for i, box in enumerate(_spread_boxes(count, 20.0, y)):
            detections.append(Detection(start + i, box, label, 0.9))

    add("bridge", 10, 100.0)
    add("storage_tank", 5, 200.0)
    add("ship", 10, 300.0)
    add("harbor", 4, 400.0)
    add("roundabout", 1, 500.0)
    add("ground_track_field", 1, 600.0)
    add("soccer_ball_field", 1, 700.0)
    add("car", 68, 800.0)
    assert len(detections) == 100
    return Scene("counting", tuple(detections))


@pytest.fixture
def counting_query():
    """Three clause groups over 10 variables with candidate-pool products
    50, 1000, and 16 on the counting scene."""
    return parse_query(
        "bridge(b1) AND storage_tank(t1) AND roundabout(r1)"
        " AND left_of(b1, t1) AND is_close(t1, r1)"
        " AND ship(s1) AND ship(s2) AND ship(s3) AND ground_track_field(g1)"
        " AND left_of(s1, s2) AND left_of(s2, s3) AND is_close(s3, g1)"
        " AND harbor(h1) AND harbor(h2) AND soccer_ball_field(f1)"
        " AND is_close(h1, h2) AND is_close(h2, f1)"
    )


FLOOD_GSD = GsdMetadata(gsd_w_m_per_px=0.0188, gsd_h_m_per_px=0.0185)


def make_flood_scene(image_id: str, connected: bool) -> Scene:
    """A building next to flooded road area (sharing an edge) or far from it."""
    building = OrientedBox(500, 500, 200, 150)
    if connected:
        # Road strip sharing the building's right edge: externally connected.
        road = OrientedBox(700, 500, 200, 150)
    else:
        road = OrientedBox(2000, 2000, 200, 150)
    return Scene(
        image_id,
        (
            Detection(0, building, "building", 1.0),
            Detection(1, road, "road_flooded", 1.0),
        ),
        gsd=FLOOD_GSD,
    )


@pytest.fixture
def flood_corpus():
    """10 scenes with an externally connected building/flooded-road pair, 10 without."""
    scenes = [make_flood_scene(f"pos_{i:02d}", True) for i in range(10)]
    scenes += [make_flood_scene(f"neg_{i:02d}", False) for i in range(10)]
    return Corpus(tuple(scenes))
