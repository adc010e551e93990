"""
Module frame.py

This module contains the event-based binary image (EBBI) and the
accumulation of an event stream into contiguous frame windows

"""

import logging
from dataclasses import dataclass

import numpy as np

from nomfsim.exceptions import ConfigError, GeometryError
from nomfsim.model.event import check_bounds, require_time_sorted
from nomfsim.model.geometry import SensorGeometry

logger = logging.getLogger('nomfsim.frame')


@dataclass(frozen=True, eq=False)
class EbbiFrame:
    """
    A binary frame: a pixel is 1 iff at least one event fell on it during
    [window_start, window_start + window_len).

    Attributes
    ----------
    geometry : SensorGeometry
        The sensor
    bits : np.ndarray
        uint8 array of shape (H, W), row-major, values in {0, 1}
    window_start : int
        Microseconds
    window_len : int
        Microseconds

    """

    geometry: SensorGeometry
    bits: np.ndarray
    window_start: int = 0
    window_len: int = 0

    def __post_init__(self):
        if self.bits.shape != self.geometry.shape:
            raise GeometryError(f'Frame bits of shape {self.bits.shape} do not match '
                                f'the {self.geometry.width}x{self.geometry.height} sensor')
        # Private read-only copy: frames are immutable values
        object.__setattr__(self, 'bits', np.array(self.bits, dtype=np.uint8))
        if np.any(self.bits > 1):
            raise ConfigError('Frame bits must be 0 or 1')
        self.bits.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EbbiFrame):
            return NotImplemented
        return (self.geometry == other.geometry and self.window_start == other.window_start
                and self.window_len == other.window_len and np.array_equal(self.bits, other.bits))

    @classmethod
    def from_array(cls, bits: np.ndarray, window_start: int = 0, window_len: int = 0) -> 'EbbiFrame':
        bits = np.asarray(bits)
        return cls(SensorGeometry(bits.shape[1], bits.shape[0]), (bits != 0).astype(np.uint8),
                   window_start, window_len)

    @classmethod
    def zeros(cls, geometry: SensorGeometry, window_start: int = 0, window_len: int = 0) -> 'EbbiFrame':
        return cls(geometry, np.zeros(geometry.shape, dtype=np.uint8), window_start, window_len)

    def with_bits(self, bits: np.ndarray) -> 'EbbiFrame':
        """Same geometry and window, new pixel values"""
        return EbbiFrame(self.geometry, (np.asarray(bits) != 0).astype(np.uint8), self.window_start, self.window_len)

    @property
    def active_pixels(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass(frozen=True)
class FrameStats:
    """
    Event statistics of one frame window.

    Attributes
    ----------
    event_count : int
        Events that fell in the window
    active_pixel_count : int
        Pixels set in the frame, never more than event_count
    gamma_estimate : float
        event_count / (W * H)

    """

    event_count: int
    active_pixel_count: int
    gamma_estimate: float


def accumulate(events: np.ndarray, geometry: SensorGeometry, window_len: int = 66000,
               origin: int | None = None, n_frames: int | None = None) -> list[tuple[EbbiFrame, FrameStats]]:
    """
    This method ORs a time-sorted event stream into contiguous frame windows.
    Empty windows are kept as all-zero frames so that indices stay aligned
    with ground truth.

    Parameters
    ----------
    events : np.ndarray
        Structured event array, sorted by time
    geometry : SensorGeometry
        The sensor
    window_len : int
        Window length in microseconds
    origin : int, optional
        Start of the first window; defaults to the window of the first event
        on the grid of multiples of window_len
    n_frames : int, optional
        Number of frames to produce; defaults to the last event's window

    Returns
    ----------
    list[tuple[EbbiFrame, FrameStats]]
        One frame and its statistics per window

    """

    if window_len <= 0:
        raise ConfigError('Window length must be positive')

    require_time_sorted(events)
    check_bounds(events, geometry)

    t = events['t'].astype(np.int64)
    if origin is None:
        origin = int(t[0] // window_len * window_len) if len(t) > 0 else 0

    if len(t) > 0 and t[0] < origin:
        raise ConfigError(f'Event at t={t[0]} precedes the frame origin {origin}')

    last_window = int((t[-1] - origin) // window_len) + 1 if len(t) > 0 else 0
    if n_frames is None:
        n_frames = last_window
    elif n_frames < last_window:
        raise ConfigError(f'{n_frames} frames cannot hold events up to t={t[-1]}')

    starts = origin + window_len * np.arange(n_frames + 1, dtype=np.int64)
    bounds = np.searchsorted(t, starts, side='left')
    flat = events['y'].astype(np.int64) * geometry.width + events['x'].astype(np.int64)

    frames = []
    for f in range(n_frames):
        lo, hi = bounds[f], bounds[f + 1]
        counts = np.bincount(flat[lo:hi], minlength=geometry.size)
        bits = (counts > 0).astype(np.uint8).reshape(geometry.shape)
        stats = FrameStats(int(hi - lo), int(np.count_nonzero(bits)), (hi - lo) / geometry.size)
        frames.append((EbbiFrame(geometry, bits, int(starts[f]), window_len), stats))

    logger.debug(f'Accumulated {len(events)} events in {n_frames} frames of {window_len} us')

    return frames
