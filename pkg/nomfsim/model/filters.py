"""
Module filters.py

This module contains the software reference implementations of the three
denoising algorithms: the overlapping binary median filter, the
non-overlap median filter (NOMF) and the nearest-neighbour event filter
(NN-filt)

"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from nomfsim.exceptions import ConfigError, GeometryError
from nomfsim.model.event import check_bounds, require_time_sorted
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import SensorGeometry

logger = logging.getLogger('nomfsim.filters')

SUPPORTED_KERNELS = (3, 5)


class KernelMode(Enum):
    """
    This class collects the kernel strides: overlap slides by one pixel,
    non-overlap by the kernel side.

    """

    OVERLAP = 'overlap'
    NON_OVERLAP = 'non_overlap'


@dataclass(frozen=True)
class KernelConfig:
    """
    Median kernel.

    Attributes
    ----------
    n : int
        Kernel side, 3 or 5
    mode : KernelMode
        Stride 1 or stride n

    """

    n: int = 3
    mode: KernelMode = KernelMode.NON_OVERLAP

    def __post_init__(self):
        check_kernel(self.n)

    @property
    def stride(self) -> int:
        return 1 if self.mode == KernelMode.OVERLAP else self.n


@dataclass(frozen=True)
class NnFiltConfig:
    """
    Nearest-neighbour filter parameters.

    Attributes
    ----------
    tau : int
        Correlation window in microseconds
    timestamp_bits : int
        Bits per stored timestamp
    wrap_timestamps : bool
        Store timestamps modulo 2^timestamp_bits as a fixed-width memory would

    """

    tau: int = 66000
    timestamp_bits: int = 16
    wrap_timestamps: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError('NN-filt tau must be positive')
        if self.timestamp_bits < 1:
            raise ConfigError('NN-filt timestamps need at least one bit')


def check_kernel(n: int, supported: tuple[int, ...] = SUPPORTED_KERNELS) -> None:
    if n not in supported:
        raise ConfigError(f'Unsupported kernel {n}x{n}: expected one of {supported}')


def majority_threshold(pixels: int | np.ndarray) -> int | np.ndarray:
    """Smallest ones-count deciding 1, i.e. ceil(pixels / 2)"""
    return (pixels + 1) // 2


def median_overlap(frame: EbbiFrame, n: int = 3) -> EbbiFrame:
    """
    This method applies the stride-1 binary median: a pixel becomes 1 iff
    its n x n neighbourhood holds at least ceil(n^2 / 2) ones. Pixels
    outside the image count as 0.

    Parameters
    ----------
    frame : EbbiFrame
        The input frame
    n : int
        Odd kernel side

    Returns
    ----------
    EbbiFrame
        The filtered frame

    """

    if n < 1 or n % 2 == 0:
        raise ConfigError(f'Median kernel side must be odd, got {n}')

    counts = ndimage.correlate(frame.bits.astype(np.int32), np.ones((n, n), dtype=np.int32),
                               mode='constant', cval=0)

    return frame.with_bits(counts >= majority_threshold(n * n))


def tile_counts(bits: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    This method sums an array over the n x n tiles anchored at (0, 0)

    Parameters
    ----------
    bits : np.ndarray
        H x W binary array
    n : int
        Tile side

    Returns
    ----------
    tuple[np.ndarray, np.ndarray]
        Ones per tile and pixels per tile (smaller for the partial tiles of
        the last row and column), both of shape (ceil(H/n), ceil(W/n))

    """

    h, w = bits.shape
    th, tw = math.ceil(h / n), math.ceil(w / n)

    padded = np.zeros((th * n, tw * n), dtype=np.int32)
    padded[:h, :w] = bits
    valid = np.zeros_like(padded)
    valid[:h, :w] = 1

    ones = padded.reshape(th, n, tw, n).sum(axis=(1, 3))
    pixels = valid.reshape(th, n, tw, n).sum(axis=(1, 3))

    return ones, pixels


def nomf(frame: EbbiFrame, n: int = 3) -> EbbiFrame:
    """
    This method applies the non-overlap median filter: the frame is tiled
    in n x n blocks from the top-left corner and each block is set to its
    majority bit. Partial blocks on the right and bottom edges decide over
    the pixels they actually hold, ties resolving to 1.

    Parameters
    ----------
    frame : EbbiFrame
        The input frame
    n : int
        Kernel side, 3 or 5

    Returns
    ----------
    EbbiFrame
        The filtered frame

    """

    check_kernel(n)

    h, w = frame.bits.shape
    ones, pixels = tile_counts(frame.bits, n)
    decision = (ones >= majority_threshold(pixels)).astype(np.uint8)
    bits = np.repeat(np.repeat(decision, n, axis=0), n, axis=1)[:h, :w]

    return frame.with_bits(bits)


def median_filter(frame: EbbiFrame, kernel: KernelConfig = KernelConfig()) -> EbbiFrame:
    """Binary median with the stride of the kernel mode"""
    if kernel.mode == KernelMode.OVERLAP:
        return median_overlap(frame, kernel.n)
    return nomf(frame, kernel.n)


def kernel_composition(frame: EbbiFrame, n: int = 3) -> np.ndarray:
    """
    This method counts the full NOMF tiles by their number of ones

    Returns
    ----------
    np.ndarray
        Array of length n^2 + 1 whose k-th entry is the number of full
        tiles holding exactly k ones

    """

    check_kernel(n)

    ones, pixels = tile_counts(frame.bits, n)
    return np.bincount(ones[pixels == n * n], minlength=n * n + 1)


def nn_filt(events: np.ndarray, cfg: NnFiltConfig = NnFiltConfig(),
            geometry: SensorGeometry = SensorGeometry()) -> np.ndarray:
    """
    This method applies the nearest-neighbour filter: an event passes iff one
    of its 8 neighbours stored a timestamp no older than tau. Every event,
    passed or not, stores its timestamp at its own pixel.

    Parameters
    ----------
    events : np.ndarray
        Time-sorted structured events
    cfg : NnFiltConfig
        Filter parameters
    geometry : SensorGeometry
        The sensor

    Returns
    ----------
    np.ndarray
        The passing events, a subsequence of the input

    """

    require_time_sorted(events)
    check_bounds(events, geometry)

    modulus = 2 ** cfg.timestamp_bits
    # One pixel of border so that every event has a full 3x3 neighbourhood
    stored = np.zeros((geometry.height + 2, geometry.width + 2), dtype=np.int64)
    written = np.zeros_like(stored, dtype=bool)
    keep = np.zeros(len(events), dtype=bool)

    ts = events['t'].astype(np.int64).tolist()
    xs = (events['x'].astype(np.int64) + 1).tolist()
    ys = (events['y'].astype(np.int64) + 1).tolist()

    for i, (t, x, y) in enumerate(zip(ts, xs, ys)):
        window = stored[y - 1:y + 2, x - 1:x + 2]
        support = written[y - 1:y + 2, x - 1:x + 2].copy()
        support[1, 1] = False

        if cfg.wrap_timestamps:
            age = (t % modulus - window) % modulus
        else:
            age = t - window
        keep[i] = bool(np.any(support & (age <= cfg.tau)))

        stored[y, x] = t % modulus if cfg.wrap_timestamps else t
        written[y, x] = True

    logger.debug(f'NN-filt kept {int(keep.sum())} of {len(events)} events')

    return events[keep]


def flipped_fraction(before: EbbiFrame, after: EbbiFrame) -> float:
    """
    This method measures the fraction of pixels whose value differs

    """

    if before.geometry != after.geometry:
        raise GeometryError('Cannot compare frames of different geometry')

    return np.count_nonzero(before.bits != after.bits) / before.geometry.size
