"""
Module geometry.py

This module contains the sensor geometry and the inclusive pixel bounding box
shared by the event, frame and tracker modules

"""

from dataclasses import dataclass

from nomfsim.exceptions import GeometryError


@dataclass(frozen=True)
class SensorGeometry:
    """
    Pixel array of the vision sensor.

    Attributes
    ----------
    width : int
        Number of columns W
    height : int
        Number of rows H

    """

    width: int = 320
    height: int = 240

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryError(f'Invalid sensor geometry {self.width}x{self.height}')

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (rows, columns) of a frame of this sensor"""
        return self.height, self.width

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True, order=True)
class BoundingBox:
    """
    Axis-aligned box with inclusive pixel coordinates.

    Attributes
    ----------
    x_min, y_min, x_max, y_max : int
        Corners, both included in the box

    """

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise GeometryError(f'Degenerate box {self}')

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def intersection_area(self, other: 'BoundingBox') -> int:
        dx = min(self.x_max, other.x_max) - max(self.x_min, other.x_min) + 1
        dy = min(self.y_max, other.y_max) - max(self.y_min, other.y_min) + 1
        return max(dx, 0) * max(dy, 0)

    def union(self, other: 'BoundingBox') -> 'BoundingBox':
        """Smallest box enclosing both boxes"""
        return BoundingBox(min(self.x_min, other.x_min), min(self.y_min, other.y_min),
                           max(self.x_max, other.x_max), max(self.y_max, other.y_max))

    def translated(self, dx: int, dy: int) -> 'BoundingBox':
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def clip(self, geometry: SensorGeometry) -> 'BoundingBox | None':
        """
        This method intersects the box with the sensor area

        Returns
        ----------
        BoundingBox | None
            The clipped box, None if the box lies entirely outside the sensor

        """

        x_min, y_min = max(self.x_min, 0), max(self.y_min, 0)
        x_max, y_max = min(self.x_max, geometry.width - 1), min(self.y_max, geometry.height - 1)

        if x_min > x_max or y_min > y_max:
            return None

        return BoundingBox(x_min, y_min, x_max, y_max)

    def within(self, geometry: SensorGeometry) -> bool:
        return self.clip(geometry) == self
