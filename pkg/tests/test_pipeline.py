import numpy as np
import pytest

from nomfsim.model import filters, imc, tracker
from nomfsim.model.event import generate_synthetic, traffic_scene
from nomfsim.model.frame import accumulate
from nomfsim.model.geometry import SensorGeometry

GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


@pytest.fixture(scope='module')
def recording():
    cfg = traffic_scene(SensorGeometry(320, 240), n_objects=2, noise_rate=0.5, duration=33.0, seed=11)
    events, gt = generate_synthetic(cfg)
    frames = [f for f, _ in accumulate(events, cfg.geometry, cfg.window_len, 0, cfg.n_frames)]
    return frames, gt


def curve(frames, gt, denoise) -> tracker.EvalCurve:
    proposals = [(i, tracker.propose_regions(denoise(f), 8, min_area=5)) for i, f in enumerate(frames)]
    return tracker.evaluate(proposals, gt, GRID, n_frames=len(frames))


def test_nomf_tracks_as_well_as_the_overlapping_median(recording):
    frames, gt = recording

    nomf = curve(frames, gt, lambda f: filters.nomf(f, 3))
    median = curve(frames, gt, lambda f: filters.median_overlap(f, 3))

    (p_nomf, r_nomf), (p_median, r_median) = nomf.at(0.5), median.at(0.5)
    assert abs(p_nomf - p_median) <= 0.05
    assert abs(r_nomf - r_median) <= 0.05
    assert r_nomf >= 0.9


def test_flipped_fraction_of_a_traffic_recording(recording):
    frames, _ = recording

    alpha = np.mean([filters.flipped_fraction(f, filters.nomf(f, 3)) for f in frames])

    # The 0.036 of the cost model is a reference point only
    assert 0 < alpha < 0.2


def test_ideal_array_reproduces_nomf_on_a_thousand_frames(make_frame):
    cfg = imc.ArrayConfig()
    frames = [make_frame(320, 240, density=d) for d in np.linspace(0.01, 0.99, 1000)]

    results = imc.filter_frames_imc(frames, cfg, imc.MismatchModel(), seed=0, threads=4)

    assert all(out == filters.nomf(f, 3) for f, (out, _) in zip(frames, results))
