import numpy as np
import pytest

from nomfsim.exceptions import ConfigError, GeometryError, OrderError
from nomfsim.model.event import EVENT_DTYPE, Event, Polarity, events_from_list, sort_by_time
from nomfsim.model.frame import EbbiFrame, accumulate
from nomfsim.model.geometry import SensorGeometry


def uniform_events(rng, geometry: SensorGeometry, count: int, duration: int) -> np.ndarray:
    events = np.zeros(count, dtype=EVENT_DTYPE)
    events['t'] = rng.integers(0, duration, count)
    events['x'] = rng.integers(0, geometry.width, count)
    events['y'] = rng.integers(0, geometry.height, count)
    events['p'] = rng.integers(0, 2, count)
    return sort_by_time(events)


def test_single_event_sets_one_bit():
    events = events_from_list([Event(0, 1, 2, Polarity.ON)])

    frames = accumulate(events, SensorGeometry(8, 8), 1000)

    assert len(frames) == 1
    frame, stats = frames[0]
    assert frame.bits[2, 1] == 1
    assert frame.active_pixels == 1
    assert stats.event_count == 1


def test_events_on_the_same_pixel_are_ored():
    events = events_from_list([Event(10, 3, 3, Polarity.ON), Event(20, 3, 3, Polarity.OFF)])

    (_, stats), = accumulate(events, SensorGeometry(8, 8), 1000)

    assert stats.active_pixel_count == 1
    assert stats.event_count == 2


def test_gamma_estimate_of_uniform_events(rng):
    geometry = SensorGeometry(320, 240)
    events = uniform_events(rng, geometry, int(0.15 * geometry.size), 1000)

    (_, stats), = accumulate(events, geometry, 1000)

    assert stats.gamma_estimate == pytest.approx(0.15, abs=0.02)
    assert stats.active_pixel_count <= stats.event_count


def test_every_event_lands_in_one_frame(rng):
    geometry = SensorGeometry(40, 30)
    events = uniform_events(rng, geometry, 5000, 100000)

    frames = accumulate(events, geometry, 7000)

    assert sum(s.event_count for _, s in frames) == len(events)
    assert all(f.active_pixels == s.active_pixel_count for f, s in frames)
    assert [f.window_start for f, _ in frames] == [7000 * i for i in range(len(frames))]


def test_duplicated_events_give_the_same_bits(rng):
    geometry = SensorGeometry(40, 30)
    events = uniform_events(rng, geometry, 2000, 50000)

    once = accumulate(events, geometry, 10000)
    twice = accumulate(sort_by_time(np.concatenate([events, events])), geometry, 10000)

    assert [f for f, _ in once] == [f for f, _ in twice]


def test_empty_windows_are_kept():
    events = events_from_list([Event(0, 0, 0, Polarity.ON), Event(3500, 1, 1, Polarity.ON)])

    frames = accumulate(events, SensorGeometry(4, 4), 1000)

    assert len(frames) == 4
    assert [f.active_pixels for f, _ in frames] == [1, 0, 0, 1]


def test_origin_snaps_to_the_window_grid():
    events = events_from_list([Event(2500, 0, 0, Polarity.ON)])

    (frame, _), = accumulate(events, SensorGeometry(4, 4), 1000)

    assert frame.window_start == 2000
    assert frame.window_len == 1000


def test_fixed_frame_count_pads_with_empty_frames():
    events = events_from_list([Event(500, 0, 0, Polarity.ON)])

    frames = accumulate(events, SensorGeometry(4, 4), 1000, origin=0, n_frames=3)

    assert [f.active_pixels for f, _ in frames] == [1, 0, 0]
    with pytest.raises(ConfigError):
        accumulate(events_from_list([Event(5000, 0, 0, Polarity.ON)]), SensorGeometry(4, 4), 1000, 0, 2)


def test_accumulate_rejects_unsorted_and_out_of_bounds_events():
    unsorted = events_from_list([Event(5, 0, 0, Polarity.ON), Event(3, 0, 0, Polarity.ON)])
    outside = events_from_list([Event(5, 9, 0, Polarity.ON)])

    with pytest.raises(OrderError):
        accumulate(unsorted, SensorGeometry(4, 4), 1000)
    with pytest.raises(GeometryError):
        accumulate(outside, SensorGeometry(4, 4), 1000)
    with pytest.raises(ConfigError):
        accumulate(unsorted[:1], SensorGeometry(4, 4), 0)


def test_no_events_no_frames():
    assert accumulate(np.zeros(0, dtype=EVENT_DTYPE), SensorGeometry(4, 4), 1000) == []


def test_frames_are_immutable_copies():
    bits = np.zeros((3, 4), dtype=np.uint8)
    frame = EbbiFrame(SensorGeometry(4, 3), bits)

    bits[0, 0] = 1

    assert frame.bits[0, 0] == 0
    assert bits.flags.writeable
    with pytest.raises(ValueError):
        frame.bits[0, 0] = 1


def test_frame_validation():
    with pytest.raises(GeometryError):
        EbbiFrame(SensorGeometry(4, 3), np.zeros((4, 3), dtype=np.uint8))
    with pytest.raises(ConfigError):
        EbbiFrame(SensorGeometry(2, 1), np.array([[0, 2]], dtype=np.uint8))
