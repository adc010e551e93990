"""
Module validator.py

This module contains the validations of command line values

"""

import argparse
import re

import numpy as np

from nomfsim.exceptions import ConfigError, GeometryError
from nomfsim.model.filters import check_kernel
from nomfsim.model.geometry import SensorGeometry
from nomfsim.utils import rep


class ArgumentValidator:
    """
    This class collects the possible validators for
    the command line flags.

    NUMBER_LIST : (re.Pattern)
        Comma-separated numbers ("1.0,1.1,1.2").
    RANGE : (re.Pattern)
        Inclusive range "start:stop:step".
    DIMENSIONS : (re.Pattern)
        Sensor size ("WxH", "W,H").

    """

    _NUMBER = r'-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE]-?\d+)?'

    NUMBER_LIST = re.compile(rf'^\s*{_NUMBER}(?:\s*,\s*{_NUMBER})*\s*$')
    RANGE = re.compile(rf'^\s*({_NUMBER}):({_NUMBER}):({_NUMBER})\s*$')
    DIMENSIONS = re.compile(r'^\s*\d+\s*[xX,]\s*\d+\s*$')

    @staticmethod
    def float_grid(text: str) -> list[float]:
        """
        This method parses either a list of numbers or an inclusive range

        Parameters
        ----------
        text : str
            "a,b,c" or "start:stop:step".

        Returns
        ----------
        list[float]
            The grid, in the given order.

        """

        match = ArgumentValidator.RANGE.match(text)
        if match:
            start, stop, step = (float(g) for g in match.groups())
            if step <= 0 or stop < start:
                raise argparse.ArgumentTypeError(f'invalid range {text!r}')
            count = int(round((stop - start) / step)) + 1
            return [round(float(v), 10) for v in start + step * np.arange(count)]

        if ArgumentValidator.NUMBER_LIST.match(text):
            return [float(v) for v in text.split(',')]

        raise argparse.ArgumentTypeError(f'{text!r} is neither a list nor a start:stop:step range')

    @staticmethod
    def int_grid(text: str) -> list[int]:
        values = ArgumentValidator.float_grid(text)
        if any(v != int(v) for v in values):
            raise argparse.ArgumentTypeError(f'{text!r} holds non-integer values')
        return [int(v) for v in values]

    @staticmethod
    def kernel(text: str) -> int:
        try:
            n = int(text)
            check_kernel(n)
        except (ValueError, ConfigError) as e:
            raise argparse.ArgumentTypeError(str(e)) from None
        return n

    @staticmethod
    def positive_int(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f'{text!r} is not an integer') from None
        if value < 1:
            raise argparse.ArgumentTypeError(f'{value} is not positive')
        return value

    @staticmethod
    def fraction(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f'{text!r} is not a number') from None
        if not 0 <= value <= 1:
            raise argparse.ArgumentTypeError(f'{value} is not in [0, 1]')
        return value

    @staticmethod
    def dimensions(text: str) -> SensorGeometry:
        if not ArgumentValidator.DIMENSIONS.match(text):
            raise argparse.ArgumentTypeError(f'{text!r} is not a WxH size')
        try:
            width, height = rep.text2tuple(text)
            return SensorGeometry(width, height)
        except (ConfigError, GeometryError) as e:
            raise argparse.ArgumentTypeError(str(e)) from None
