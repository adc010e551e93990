"""
Module filter_factory.py

This module contains the factory class turning a method name of the command
line into the filter it runs

"""

from typing import Callable

import numpy as np

from nomfsim.exceptions import ConfigError
from nomfsim.model import filters, imc
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import SensorGeometry

FRAME_METHODS = ('median', 'nomf', 'imc')
EVENT_METHODS = ('nn',)

FrameFilter = Callable[[list[EbbiFrame]], list[tuple[EbbiFrame, imc.FlipStats]]]


def software_stats(before: EbbiFrame, after: EbbiFrame) -> imc.FlipStats:
    """Flip statistics of a filter computed off-memory, with no cycle count"""
    flipped = int(np.count_nonzero(before.bits != after.bits))
    return imc.FlipStats(flipped, flipped / before.geometry.size, 0, 0, 0.0)


class FilterFactory:
    """
    This class is a factory of filters working either on frames or on the
    event stream.

    Methods
    ----------
    create_frame_filter(str, int, ArrayConfig, MismatchModel, int, int)
        Procedure to build a frame filter given the method name
    create_event_filter(str, NnFiltConfig, SensorGeometry)
        Procedure to build an event filter given the method name

    """

    @staticmethod
    def create_frame_filter(method: str, n: int = 3, array: imc.ArrayConfig | None = None,
                            mismatch: imc.MismatchModel | None = None, seed: int | None = None,
                            threads: int = 1) -> FrameFilter:
        """
        This method builds the frame filter of the given method. If the
        method is not implemented, raises a ConfigError

        Parameters
        ----------
        method : str
            One of 'median', 'nomf', 'imc'.
        n : int
            Kernel side.
        array : ArrayConfig, optional
            The array simulated by 'imc', sized as the first frame by default.
        mismatch : MismatchModel, optional
            Device variation of 'imc', none by default.
        seed : int, optional
            Seed of the 'imc' draws.
        threads : int
            Worker threads of 'imc'.

        Returns
        ----------
        FrameFilter
            Function mapping frames to (filtered frame, stats) pairs.

        """

        if method not in FRAME_METHODS:
            raise ConfigError(f'{method} frame filter not implemented, expected one of {FRAME_METHODS}')

        mode = filters.KernelMode.OVERLAP if method == 'median' else filters.KernelMode.NON_OVERLAP
        kernel = filters.KernelConfig(n, mode)

        if method in ('median', 'nomf'):
            def apply(frames: list[EbbiFrame]) -> list[tuple[EbbiFrame, imc.FlipStats]]:
                out = [filters.median_filter(f, kernel) for f in frames]
                return [(o, software_stats(f, o)) for f, o in zip(frames, out)]
        else:
            model = mismatch if mismatch is not None else imc.MismatchModel()

            def apply(frames: list[EbbiFrame]) -> list[tuple[EbbiFrame, imc.FlipStats]]:
                if not frames:
                    return []
                cfg = array if array is not None else imc.ArrayConfig.for_geometry(frames[0].geometry, n=kernel.n)
                return imc.filter_frames_imc(frames, cfg, model, seed, threads)

        return apply

    @staticmethod
    def create_event_filter(method: str, cfg: filters.NnFiltConfig = filters.NnFiltConfig(),
                            geometry: SensorGeometry = SensorGeometry()) -> Callable[[np.ndarray], np.ndarray]:
        if method not in EVENT_METHODS:
            raise ConfigError(f'{method} event filter not implemented, expected one of {EVENT_METHODS}')

        return lambda events: filters.nn_filt(events, cfg, geometry)
