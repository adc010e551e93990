import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from nomfsim.exceptions import ConfigError, GeometryError, OrderError
from nomfsim.model import filters
from nomfsim.model.event import Event, Polarity, events_from_list, generate_synthetic, traffic_scene
from nomfsim.model.frame import EbbiFrame, accumulate
from nomfsim.model.geometry import SensorGeometry
from nomfsim.utils.filter_factory import FilterFactory


def sorted_median(bits: np.ndarray, n: int) -> np.ndarray:
    """Median of the zero-padded n x n neighbourhoods by sorting their values"""
    r = n // 2
    padded = np.pad(bits, r)
    windows = sliding_window_view(padded, (n, n)).reshape(bits.shape + (n * n,))
    return np.sort(windows, axis=-1)[..., n * n // 2]


def tile_oracle(bits: np.ndarray, n: int) -> np.ndarray:
    """NOMF computed tile by tile"""
    out = np.zeros_like(bits)
    h, w = bits.shape
    for y in range(0, h, n):
        for x in range(0, w, n):
            tile = bits[y:y + n, x:x + n]
            out[y:y + n, x:x + n] = 1 if 2 * tile.sum() >= tile.size else 0
    return out


def test_median_of_an_all_ones_square():
    frame = EbbiFrame.from_array(np.ones((3, 3)))

    out = filters.median_overlap(frame, 3)

    assert out.bits[1, 1] == 1
    # Corners see four ones and five padding zeros
    assert out.bits[0, 0] == 0


def test_median_threshold_is_half_the_kernel_rounded_up():
    bits = np.array([[1, 1, 0],
                     [1, 1, 0],
                     [1, 0, 0]])

    assert filters.median_overlap(EbbiFrame.from_array(bits), 3).bits[1, 1] == 1
    bits[2, 0] = 0
    assert filters.median_overlap(EbbiFrame.from_array(bits), 3).bits[1, 1] == 0


@pytest.mark.parametrize('n', [3, 5])
def test_median_matches_the_sorting_oracle(rng, n):
    for _ in range(1000):
        bits = (rng.random((32, 32)) < rng.uniform(0.1, 0.9)).astype(np.uint8)
        out = filters.median_overlap(EbbiFrame.from_array(bits), n)
        assert np.array_equal(out.bits, sorted_median(bits, n))


def test_median_rejects_even_kernels(make_frame):
    with pytest.raises(ConfigError):
        filters.median_overlap(make_frame(), 4)


def test_nomf_tile_with_four_ones_becomes_zero():
    bits = np.array([[1, 0, 1],
                     [0, 0, 0],
                     [1, 0, 1]])

    out = filters.nomf(EbbiFrame.from_array(bits), 3)

    assert not out.bits.any()
    assert filters.nomf(EbbiFrame.from_array(1 - bits), 3).bits.all()


def test_nomf_keeps_the_all_zero_frame():
    frame = EbbiFrame.zeros(SensorGeometry(30, 24))

    assert filters.nomf(frame, 3) == frame
    assert filters.nomf(frame, 5) == frame


def test_nomf_partial_edge_tiles_decide_over_their_pixels():
    bits = np.zeros((240, 320), dtype=np.uint8)
    # Rightmost tile column is 2 wide: 3 of its 6 pixels reach the threshold
    bits[0:3, 318] = 1
    # 2 of 6 do not
    bits[3:5, 319] = 1

    out = filters.nomf(EbbiFrame.from_array(bits), 3).bits

    assert out[0:3, 318:320].all()
    assert not out[3:6, 318:320].any()
    assert np.array_equal(out, tile_oracle(bits, 3))


@pytest.mark.parametrize('n', [3, 5])
@pytest.mark.parametrize('size', [(32, 32), (31, 29), (320, 240)])
def test_nomf_matches_the_tile_oracle(make_frame, n, size):
    for _ in range(20):
        frame = make_frame(*size)
        out = filters.nomf(frame, n)
        assert np.array_equal(out.bits, tile_oracle(frame.bits, n))


def test_nomf_is_constant_on_full_tiles(make_frame):
    for _ in range(50):
        bits = filters.nomf(make_frame(33, 27), 3).bits
        tiles = bits.reshape(9, 3, 11, 3).transpose(0, 2, 1, 3).reshape(9, 11, 9)
        assert np.all(tiles.min(axis=-1) == tiles.max(axis=-1))


def test_nomf_rejects_unsupported_kernels(make_frame):
    for n in (1, 4, 7):
        with pytest.raises(ConfigError):
            filters.nomf(make_frame(), n)


def test_filters_leave_their_input_untouched(make_frame):
    frame = make_frame()
    before = frame.bits.copy()

    filters.nomf(frame, 3)
    filters.median_overlap(frame, 3)
    filters.flipped_fraction(frame, filters.nomf(frame, 5))

    assert np.array_equal(frame.bits, before)


def test_kernel_composition_counts_full_tiles(make_frame):
    frame = make_frame(31, 29)

    histogram = filters.kernel_composition(frame, 3)

    assert len(histogram) == 10
    assert histogram.sum() == 10 * 9
    ones = frame.bits[:27, :30].sum()
    assert np.dot(np.arange(10), histogram) == ones


def test_flipped_fraction():
    frame = EbbiFrame.from_array(np.eye(4))
    complement = frame.with_bits(1 - frame.bits)

    assert filters.flipped_fraction(frame, frame) == 0
    assert filters.flipped_fraction(frame, complement) == 1
    with pytest.raises(GeometryError):
        filters.flipped_fraction(frame, EbbiFrame.zeros(SensorGeometry(5, 4)))


def test_nn_filt_drops_an_isolated_event():
    events = events_from_list([Event(100, 10, 10, Polarity.ON)])

    assert len(filters.nn_filt(events, filters.NnFiltConfig(tau=1000), SensorGeometry(32, 32))) == 0


def test_nn_filt_passes_supported_events():
    events = events_from_list([Event(100, 10, 10, Polarity.ON), Event(400, 11, 11, Polarity.ON),
                               Event(500, 20, 20, Polarity.ON), Event(2000, 20, 21, Polarity.ON)])

    kept = filters.nn_filt(events, filters.NnFiltConfig(tau=1000), SensorGeometry(32, 32))

    assert [(int(e['t']), int(e['x'])) for e in kept] == [(400, 11)]


def test_nn_filt_ignores_the_own_pixel():
    events = events_from_list([Event(100, 5, 5, Polarity.ON), Event(200, 5, 5, Polarity.OFF)])

    assert len(filters.nn_filt(events, filters.NnFiltConfig(tau=1000), SensorGeometry(8, 8))) == 0


def test_nn_filt_neighbourhood_at_the_border():
    events = events_from_list([Event(0, 0, 0, Polarity.ON), Event(10, 1, 0, Polarity.ON)])

    assert len(filters.nn_filt(events, filters.NnFiltConfig(tau=100), SensorGeometry(8, 8))) == 1


def test_wrapped_timestamps_alias_old_events():
    events = events_from_list([Event(0, 1, 1, Polarity.ON), Event(17, 2, 1, Polarity.ON)])
    geometry = SensorGeometry(8, 8)

    exact = filters.nn_filt(events, filters.NnFiltConfig(tau=3, timestamp_bits=4), geometry)
    wrapped = filters.nn_filt(events, filters.NnFiltConfig(tau=3, timestamp_bits=4, wrap_timestamps=True), geometry)

    assert len(exact) == 0
    assert len(wrapped) == 1


def test_nn_filt_rejects_unsorted_events():
    events = events_from_list([Event(5, 0, 0, Polarity.ON), Event(3, 1, 0, Polarity.ON)])

    with pytest.raises(OrderError):
        filters.nn_filt(events)


def test_nn_filt_config_validation():
    with pytest.raises(ConfigError):
        filters.NnFiltConfig(tau=0)
    with pytest.raises(ConfigError):
        filters.NnFiltConfig(timestamp_bits=0)


def test_nn_filt_on_a_scene_removes_noise_and_keeps_objects():
    geometry = SensorGeometry(128, 96)
    scene = dict(geometry=geometry, n_objects=2, duration=1.0, seed=5, object_rate=200.0, edge_width=2)
    events, _ = generate_synthetic(traffic_scene(noise_rate=1.0, **scene))
    objects, _ = generate_synthetic(traffic_scene(noise_rate=0.0, **scene))

    kept = filters.nn_filt(events, filters.NnFiltConfig(tau=66000), geometry)

    assert len(kept) < len(events)
    raw = accumulate(objects, geometry, 66000, 0, 16)
    filtered = accumulate(kept, geometry, 66000, 0, len(raw))
    boundary = sum(int(f.bits.sum()) for f, _ in raw)
    retained = sum(int((f.bits & g.bits).sum()) for (f, _), (g, _) in zip(raw, filtered))
    assert retained >= 0.9 * boundary


def test_nn_filt_keeps_a_subsequence_of_a_random_stream(rng):
    geometry = SensorGeometry(16, 12)
    count = 3000
    events = events_from_list([Event(int(t), int(x), int(y), Polarity(int(p))) for t, x, y, p in
                               zip(np.sort(rng.integers(0, 200000, count)), rng.integers(0, 16, count),
                                   rng.integers(0, 12, count), rng.integers(0, 2, count))])

    kept = filters.nn_filt(events, filters.NnFiltConfig(tau=2000), geometry)

    assert 0 < len(kept) < len(events)
    remaining = iter(events.tolist())
    assert all(any(e == k for e in remaining) for k in kept.tolist())


def test_kernel_config():
    assert filters.KernelConfig(3, filters.KernelMode.OVERLAP).stride == 1
    assert filters.KernelConfig(5).stride == 5
    with pytest.raises(ConfigError):
        filters.KernelConfig(4)


def test_median_filter_follows_the_kernel_mode(make_frame):
    frame = make_frame(31, 23, density=0.5)

    for n in (3, 5):
        overlap = filters.median_filter(frame, filters.KernelConfig(n, filters.KernelMode.OVERLAP))
        assert overlap == filters.median_overlap(frame, n)
        assert filters.median_filter(frame, filters.KernelConfig(n)) == filters.nomf(frame, n)


def test_factory_builds_the_named_filters(make_frame):
    frames = [make_frame(30, 24, density=0.4) for _ in range(2)]

    for method, reference in (('median', filters.median_overlap), ('nomf', filters.nomf)):
        results = FilterFactory.create_frame_filter(method, 3)(frames)
        assert [out for out, _ in results] == [reference(f, 3) for f in frames]
        assert all(s.flipped_pixels == np.count_nonzero(f.bits != o.bits) for f, (o, s) in zip(frames, results))

    in_memory = FilterFactory.create_frame_filter('imc', 3)(frames)
    assert [out for out, _ in in_memory] == [filters.nomf(f, 3) for f in frames]
    assert FilterFactory.create_frame_filter('imc')([]) == []


def test_factory_rejects_unknown_methods():
    with pytest.raises(ConfigError, match='not implemented'):
        FilterFactory.create_frame_filter('mean')
    with pytest.raises(ConfigError, match='not implemented'):
        FilterFactory.create_frame_filter('nn')
    with pytest.raises(ConfigError, match='not implemented'):
        FilterFactory.create_event_filter('nomf')
    with pytest.raises(ConfigError):
        FilterFactory.create_frame_filter('nomf', 4)
