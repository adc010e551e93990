import numpy as np
import pytest

from nomfsim.exceptions import ConfigError, OrderError
from nomfsim.model.event import (Event, Polarity, SceneObject, SyntheticSceneConfig, events_from_list, events_to_list,
                                 generate_synthetic, is_time_sorted, require_time_sorted, sort_by_time, traffic_scene)
from nomfsim.model.geometry import BoundingBox, SensorGeometry


def test_events_from_list_keeps_order_and_fields():
    events = events_from_list([Event(100, 5, 7, Polarity.ON), Event(50, 1, 2, Polarity.OFF)])

    assert events_to_list(events) == [Event(100, 5, 7, Polarity.ON), Event(50, 1, 2, Polarity.OFF)]
    assert not is_time_sorted(events)


def test_events_from_list_rejects_wide_timestamps():
    with pytest.raises(ConfigError):
        events_from_list([Event(2 ** 32, 0, 0, Polarity.ON)])


def test_sort_by_time_is_stable():
    events = events_from_list([Event(5, 1, 0, Polarity.ON), Event(3, 2, 0, Polarity.ON),
                               Event(5, 0, 0, Polarity.OFF)])

    ordered = sort_by_time(events)

    assert [(e.t, e.x) for e in events_to_list(ordered)] == [(3, 2), (5, 1), (5, 0)]
    require_time_sorted(ordered)
    with pytest.raises(OrderError):
        require_time_sorted(events)


def test_static_box_without_noise_fires_on_its_boundary_only():
    geometry = SensorGeometry(64, 48)
    box = BoundingBox(10, 10, 29, 19)
    cfg = SyntheticSceneConfig(geometry, (SceneObject(box, rate=200.0, edge_width=1),), noise_rate=0.0,
                               duration=0.5, seed=3)

    events, ground_truth = generate_synthetic(cfg)

    assert len(events) > 0
    xs, ys = events['x'].astype(int), events['y'].astype(int)
    inside = (xs >= box.x_min) & (xs <= box.x_max) & (ys >= box.y_min) & (ys <= box.y_max)
    on_edge = (xs == box.x_min) | (xs == box.x_max) | (ys == box.y_min) | (ys == box.y_max)
    assert np.all(inside & on_edge)
    assert all(boxes == [box] for _, boxes in ground_truth)
    assert len(ground_truth) == cfg.n_frames


def test_same_seed_gives_identical_streams():
    cfg = traffic_scene(SensorGeometry(64, 48), n_objects=2, noise_rate=2.0, duration=0.5, seed=11)

    first, gt_first = generate_synthetic(cfg)
    second, gt_second = generate_synthetic(cfg)

    assert first.tobytes() == second.tobytes()
    assert gt_first == gt_second
    assert is_time_sorted(first)


def test_different_seeds_differ():
    geometry = SensorGeometry(64, 48)
    first, _ = generate_synthetic(traffic_scene(geometry, 0, 2.0, 0.5, seed=1))
    second, _ = generate_synthetic(traffic_scene(geometry, 0, 2.0, 0.5, seed=2))

    assert first.tobytes() != second.tobytes()


def test_noise_count_follows_the_poisson_mean():
    geometry = SensorGeometry(64, 48)
    rate, duration = 2.0, 2.0
    events, _ = generate_synthetic(traffic_scene(geometry, 0, rate, duration, seed=5))

    mean = rate * geometry.size * duration
    assert abs(len(events) - mean) <= 5 * np.sqrt(mean)
    assert events['x'].max() < geometry.width and events['y'].max() < geometry.height


def test_object_leaving_the_sensor_is_clipped():
    geometry = SensorGeometry(64, 48)
    obj = SceneObject(BoundingBox(40, 10, 59, 19), velocity=(100.0, 0.0), rate=100.0)
    cfg = SyntheticSceneConfig(geometry, (obj,), noise_rate=0.0, duration=0.5, seed=0)

    events, ground_truth = generate_synthetic(cfg)

    assert events['x'].max() < geometry.width
    boxes = [b for _, frame_boxes in ground_truth for b in frame_boxes]
    assert all(b.within(geometry) for b in boxes)
    assert boxes[-1].x_max == geometry.width - 1


def test_objects_not_fitting_the_sensor_are_rejected():
    with pytest.raises(ConfigError):
        traffic_scene(SensorGeometry(32, 24), n_objects=10)


def test_traffic_scene_keeps_objects_in_their_lanes():
    geometry = SensorGeometry(128, 96)
    cfg = traffic_scene(geometry, n_objects=3, duration=2.0)

    assert len(cfg.objects) == 3
    lane = geometry.height // 3
    for i, obj in enumerate(cfg.objects):
        assert i * lane <= obj.box.y_min and obj.box.y_max < (i + 1) * lane
        assert obj.box_at(cfg.total_us).within(geometry)
