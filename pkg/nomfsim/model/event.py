"""
Module event.py

This module contains the address-event types and the seeded generator of
synthetic traffic-like scenes with per-frame ground truth

"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from nomfsim.exceptions import ConfigError, GeometryError, OrderError
from nomfsim.model.geometry import BoundingBox, SensorGeometry

logger = logging.getLogger('nomfsim.event')

# Packed little-endian record: t (u32), x (u16), y (u16), p (u8) = 9 bytes
EVENT_DTYPE = np.dtype([('t', '<u4'), ('x', '<u2'), ('y', '<u2'), ('p', 'u1')])

MAX_TIMESTAMP = 2 ** 32 - 1


class Polarity(IntEnum):
    """
    This class collects the contrast change directions of an event.

    """

    OFF = 0
    ON = 1


class Event(NamedTuple):
    """
    One address event: timestamp in microseconds, pixel column and row, polarity

    """

    t: int
    x: int
    y: int
    polarity: Polarity


def empty_events() -> np.ndarray:
    return np.zeros(0, dtype=EVENT_DTYPE)


def events_from_list(events: Sequence[Event]) -> np.ndarray:
    """
    This method packs a sequence of Event tuples in a structured array

    Parameters
    ----------
    events : Sequence[Event]
        The events to pack

    Returns
    ----------
    np.ndarray
        Array of EVENT_DTYPE records in the same order

    """

    array = np.zeros(len(events), dtype=EVENT_DTYPE)
    for i, e in enumerate(events):
        if not 0 <= e.t <= MAX_TIMESTAMP:
            raise ConfigError(f'Timestamp {e.t} does not fit 32 bits')
        array[i] = (e.t, e.x, e.y, int(e.polarity))

    return array


def events_to_list(events: np.ndarray) -> list[Event]:
    return [Event(int(t), int(x), int(y), Polarity(int(p)))
            for t, x, y, p in zip(events['t'], events['x'], events['y'], events['p'])]


def is_time_sorted(events: np.ndarray) -> bool:
    return bool(np.all(np.diff(events['t'].astype(np.int64)) >= 0))


def require_time_sorted(events: np.ndarray) -> None:
    if not is_time_sorted(events):
        first = int(np.argmax(np.diff(events['t'].astype(np.int64)) < 0)) + 1
        raise OrderError(f'Events are not sorted by time (first decrease at index {first})')


def sort_by_time(events: np.ndarray) -> np.ndarray:
    """Stable sort on the timestamp, events of equal time keeping their file order"""
    return events[np.argsort(events['t'], kind='stable')]


def check_bounds(events: np.ndarray, geometry: SensorGeometry) -> None:
    """
    This method raises a GeometryError naming the first event whose
    coordinates fall outside the sensor

    """

    outside = (events['x'] >= geometry.width) | (events['y'] >= geometry.height)
    if np.any(outside):
        i = int(np.argmax(outside))
        raise GeometryError(f'Event {i} at ({events["x"][i]}, {events["y"][i]}) is outside '
                            f'the {geometry.width}x{geometry.height} sensor')


@dataclass(frozen=True)
class SceneObject:
    """
    A rectangular object moving at constant velocity.

    Attributes
    ----------
    box : BoundingBox
        Position at t = 0
    velocity : tuple[float, float]
        Horizontal and vertical speed in pixels per second
    rate : float
        Events per second fired by each pixel of the boundary band
    edge_width : int
        Thickness of the boundary band in pixels

    """

    box: BoundingBox
    velocity: tuple[float, float] = (0.0, 0.0)
    rate: float = 60.0
    edge_width: int = 1

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError('Object event rate must be non-negative')
        if self.edge_width < 1:
            raise ConfigError('Object edge width must be at least one pixel')

    def box_at(self, t_us: float) -> BoundingBox:
        dx = int(round(self.velocity[0] * t_us * 1e-6))
        dy = int(round(self.velocity[1] * t_us * 1e-6))
        return self.box.translated(dx, dy)

    def band_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """
        This method computes the (dy, dx) offsets of the boundary band
        relative to the top-left corner of the box

        """

        rows, cols = np.indices((self.box.height, self.box.width))
        depth = np.minimum.reduce([rows, cols, self.box.height - 1 - rows, self.box.width - 1 - cols])
        band = depth < self.edge_width

        return rows[band], cols[band]


@dataclass(frozen=True)
class SyntheticSceneConfig:
    """
    Configuration of a synthetic recording.

    Attributes
    ----------
    geometry : SensorGeometry
        The sensor
    objects : tuple[SceneObject, ...]
        Moving objects
    noise_rate : float
        Background events per pixel per second (homogeneous Poisson)
    duration : float
        Length of the recording in seconds
    seed : int
        Seed of every random draw
    window_len : int
        Frame window of the ground truth, microseconds
    time_step : int
        Motion update step of the object positions, microseconds

    """

    geometry: SensorGeometry = field(default_factory=SensorGeometry)
    objects: tuple[SceneObject, ...] = ()
    noise_rate: float = 0.5
    duration: float = 5.0
    seed: int = 0
    window_len: int = 66000
    time_step: int = 1000

    def __post_init__(self):
        if self.noise_rate < 0 or self.duration < 0:
            raise ConfigError('Noise rate and duration must be non-negative')
        if self.window_len <= 0 or self.time_step <= 0:
            raise ConfigError('Window length and time step must be positive')
        if self.duration * 1e6 > MAX_TIMESTAMP:
            raise ConfigError('Duration exceeds the 32-bit microsecond range')
        for o in self.objects:
            if not o.box.within(self.geometry):
                raise GeometryError(f'Object box {o.box} is not within the sensor at t=0')

    @property
    def total_us(self) -> int:
        return int(round(self.duration * 1e6))

    @property
    def n_frames(self) -> int:
        return math.ceil(self.total_us / self.window_len)


def traffic_scene(geometry: SensorGeometry = SensorGeometry(), n_objects: int = 2, noise_rate: float = 0.5,
                  duration: float = 5.0, seed: int = 0, object_rate: float = 60.0, edge_width: int = 4,
                  window_len: int = 66000, time_step: int = 1000) -> SyntheticSceneConfig:
    """
    This method builds a traffic-like scene: one object per horizontal lane,
    lanes alternating direction, speeds chosen so that every object stays
    inside the sensor for the whole recording.

    Parameters
    ----------
    geometry : SensorGeometry
        The sensor
    n_objects : int
        Number of lanes/objects
    noise_rate : float
        Background events per pixel per second
    duration : float
        Seconds
    seed : int
        Generator seed
    object_rate : float
        Events per second per band pixel
    edge_width : int
        Band thickness in pixels
    window_len : int
        Frame window in microseconds
    time_step : int
        Motion step in microseconds

    Returns
    ----------
    SyntheticSceneConfig
        The scene configuration

    """

    objects = []

    if n_objects > 0:
        lane = geometry.height // n_objects
        w = max(2 * edge_width + 2, geometry.width // 7)
        h = min(max(2 * edge_width + 2, geometry.height // 9), lane - 4)
        if h < 2 * edge_width + 2 or w + 20 > geometry.width:
            raise ConfigError(f'{n_objects} objects do not fit a {geometry.width}x{geometry.height} sensor')

        travel = geometry.width - w - 20
        speed = min(40.0, travel / duration) if duration > 0 else 0.0

        for i in range(n_objects):
            y0 = i * lane + (lane - h) // 2
            if i % 2 == 0:
                x0, vx = 10, speed
            else:
                x0, vx = geometry.width - 10 - w, -speed
            box = BoundingBox(x0, y0, x0 + w - 1, y0 + h - 1)
            objects.append(SceneObject(box, (vx, 0.0), object_rate, edge_width))

    return SyntheticSceneConfig(geometry, tuple(objects), noise_rate, duration, seed, window_len, time_step)


def generate_synthetic(cfg: SyntheticSceneConfig) -> tuple[np.ndarray, list[tuple[int, list[BoundingBox]]]]:
    """
    This method synthesizes an event stream and its per-frame ground truth.
    Noise events are uniform over pixels and time; each object fires on the
    band along its moving boundary at the configured rate. Boxes leaving the
    sensor are clipped.

    Parameters
    ----------
    cfg : SyntheticSceneConfig
        The scene configuration

    Returns
    ----------
    tuple[np.ndarray, list]
        The time-sorted events and, for every frame window, the list of
        ground-truth boxes

    """

    geometry = cfg.geometry
    total_us = cfg.total_us
    streams = np.random.SeedSequence(cfg.seed).spawn(1 + len(cfg.objects))
    chunks = []

    # Background activity
    rng = np.random.default_rng(streams[0])
    if total_us > 0 and cfg.noise_rate > 0:
        count = rng.poisson(cfg.noise_rate * geometry.size * cfg.duration)
        noise = np.zeros(count, dtype=EVENT_DTYPE)
        noise['t'] = rng.integers(0, total_us, count)
        noise['x'] = rng.integers(0, geometry.width, count)
        noise['y'] = rng.integers(0, geometry.height, count)
        noise['p'] = rng.integers(0, 2, count)
        chunks.append(noise)
        logger.debug(f'{count} background events')

    # Objects
    for obj, stream in zip(cfg.objects, streams[1:]):
        rng = np.random.default_rng(stream)
        dy, dx = obj.band_offsets()

        for t0 in range(0, total_us, cfg.time_step):
            t1 = min(t0 + cfg.time_step, total_us)
            box = obj.box_at((t0 + t1) / 2)
            xs, ys = dx + box.x_min, dy + box.y_min
            inside = (xs >= 0) & (xs < geometry.width) & (ys >= 0) & (ys < geometry.height)
            if not np.any(inside) or obj.rate == 0:
                continue

            counts = rng.poisson(obj.rate * (t1 - t0) * 1e-6, size=int(np.count_nonzero(inside)))
            n = int(counts.sum())
            if n == 0:
                continue

            fired = np.zeros(n, dtype=EVENT_DTYPE)
            fired['x'] = np.repeat(xs[inside], counts)
            fired['y'] = np.repeat(ys[inside], counts)
            fired['t'] = rng.integers(t0, t1, n)
            fired['p'] = rng.integers(0, 2, n)
            chunks.append(fired)

    events = np.concatenate(chunks) if chunks else empty_events()
    events = events[np.lexsort((events['x'], events['y'], events['t']))]

    ground_truth = []
    for f in range(cfg.n_frames):
        start = f * cfg.window_len
        end = min(start + cfg.window_len, total_us)
        boxes = []
        for obj in cfg.objects:
            box = obj.box_at(start).union(obj.box_at(end)).clip(geometry)
            if box is not None:
                boxes.append(box)
        ground_truth.append((f, boxes))

    logger.info(f'Generated {len(events)} events over {cfg.n_frames} frames '
                f'({len(cfg.objects)} objects, seed {cfg.seed})')

    return events, ground_truth
