"""
Module tracker.py

This module contains the region proposal on denoised frames, the
overlap-based track association and the IoU-thresholded precision/recall
evaluation of proposals against ground truth

"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from nomfsim.exceptions import ConfigError, EvaluationError
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import BoundingBox

logger = logging.getLogger('nomfsim.tracker')

__all__ = ['BoundingBox', 'Region', 'EvalCurve', 'Track', 'connected_components', 'propose_regions', 'iou',
           'evaluate', 'track_overlap']


@dataclass(frozen=True, eq=False)
class Region:
    """
    A maximal connected set of 1-pixels.

    Attributes
    ----------
    label : int
        1-based label, in raster order of the first pixel
    rows, cols : np.ndarray
        Pixel coordinates
    box : BoundingBox
        Enclosing box

    """

    label: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    box: BoundingBox

    @property
    def area(self) -> int:
        return len(self.rows)


def connected_components(frame: EbbiFrame, connectivity: int = 8) -> list[Region]:
    """
    This method labels the connected regions of a binary frame

    Parameters
    ----------
    frame : EbbiFrame
        The frame
    connectivity : int
        4 or 8

    Returns
    ----------
    list[Region]
        The regions, ordered by their first pixel in row-major order

    """

    if connectivity not in (4, 8):
        raise ConfigError(f'Connectivity must be 4 or 8, got {connectivity}')

    structure = ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)
    labels, count = ndimage.label(frame.bits, structure=structure)
    if count == 0:
        return []

    regions = []
    for label, (rows, cols) in sorted(ndimage.value_indices(labels, ignore_value=0).items()):
        box = BoundingBox(int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max()))
        regions.append(Region(int(label), rows, cols, box))

    return regions


def propose_regions(frame: EbbiFrame, connectivity: int = 8, min_area: int = 0) -> list[BoundingBox]:
    """Bounding boxes of the connected regions whose box area reaches min_area"""
    return [r.box for r in connected_components(frame, connectivity) if r.box.area >= min_area]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    inter = a.intersection_area(b)
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class EvalCurve:
    """
    Pooled precision and recall at each IoU threshold.

    Attributes
    ----------
    thresholds : list[float]
        IoU values in (0, 1]
    precision : list[float]
        True positives over proposals, 1 when there are no proposals
    recall : list[float]
        True positives over ground-truth boxes

    """

    thresholds: list[float]
    precision: list[float]
    recall: list[float]

    def __post_init__(self):
        if not len(self.thresholds) == len(self.precision) == len(self.recall):
            raise EvaluationError('Curve columns differ in length')

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds, self.precision, self.recall))

    def at(self, threshold: float) -> tuple[float, float]:
        """Precision and recall at a threshold of the grid"""
        for t, p, r in self.rows():
            if abs(t - threshold) < 1e-9:
                return p, r
        raise EvaluationError(f'Threshold {threshold} is not on the curve')


def _as_mapping(boxes: Mapping[int, Sequence[BoundingBox]] | Iterable[tuple[int, Sequence[BoundingBox]]]) \
        -> dict[int, list[BoundingBox]]:
    items = boxes.items() if isinstance(boxes, Mapping) else boxes
    result: dict[int, list[BoundingBox]] = {}
    for f, frame_boxes in items:
        result.setdefault(int(f), []).extend(frame_boxes)
    return result


def evaluate(proposals, ground_truth, thresholds: Sequence[float], min_area: int = 0,
             n_frames: int | None = None) -> EvalCurve:
    """
    This method matches proposals to ground-truth boxes one-to-one, greedily
    by descending IoU, and pools precision and recall over all frames.
    A proposal is a true positive at threshold t when its match has IoU >= t.

    Parameters
    ----------
    proposals : Mapping or Iterable of (frame, boxes)
        Proposed boxes per frame index
    ground_truth : Mapping or Iterable of (frame, boxes)
        Ground-truth boxes per frame index
    thresholds : Sequence[float]
        IoU grid
    min_area : int
        Proposals with a smaller box area are discarded first
    n_frames : int, optional
        Number of evaluated frames, one past the last ground-truth frame by
        default; proposals outside [0, n_frames) are misaligned

    Returns
    ----------
    EvalCurve
        The curve, one point per threshold

    """

    for t in thresholds:
        if not 0 < t <= 1:
            raise ConfigError(f'IoU threshold {t} is not in (0, 1]')

    gt = _as_mapping(ground_truth)
    prop = {f: [b for b in boxes if b.area >= min_area] for f, boxes in _as_mapping(proposals).items()}

    n_gt = sum(len(b) for b in gt.values())
    if n_gt == 0:
        raise EvaluationError('Ground truth holds no boxes')

    if n_frames is None:
        n_frames = max(gt) + 1
    misaligned = [f for f in list(gt) + list(prop) if not 0 <= f < n_frames]
    if misaligned:
        raise EvaluationError(f'Frame index {misaligned[0]} is outside the {n_frames} evaluated frames')

    n_prop = sum(len(b) for b in prop.values())

    # Every overlapping (proposal, ground truth) pair of every frame
    pairs = []
    for f, boxes in prop.items():
        for i, p in enumerate(boxes):
            for j, g in enumerate(gt.get(f, [])):
                value = iou(p, g)
                if value > 0:
                    pairs.append((-value, f, i, j))
    pairs.sort()

    # Greedy on the whole list; a threshold keeps the matches of its prefix
    matched_ious = []
    used_p, used_g = set(), set()
    for neg, f, i, j in pairs:
        if (f, i) in used_p or (f, j) in used_g:
            continue
        used_p.add((f, i))
        used_g.add((f, j))
        matched_ious.append(-neg)

    matched = np.sort(np.array(matched_ious, dtype=float))
    precision, recall = [], []
    for t in thresholds:
        tp = len(matched) - int(np.searchsorted(matched, t, side='left'))
        precision.append(tp / n_prop if n_prop > 0 else 1.0)
        recall.append(tp / n_gt)

    logger.debug(f'{n_prop} proposals, {n_gt} ground-truth boxes, {len(matched)} overlapping matches')

    return EvalCurve([float(t) for t in thresholds], precision, recall)


@dataclass
class Track:
    """
    Boxes of one object across frames.

    Attributes
    ----------
    track_id : int
        Stable identifier, in order of creation
    boxes : dict[int, BoundingBox]
        Box per frame index

    """

    track_id: int
    boxes: dict[int, BoundingBox] = field(default_factory=dict)

    @property
    def first_frame(self) -> int:
        return min(self.boxes)

    @property
    def last_frame(self) -> int:
        return max(self.boxes)

    @property
    def last_box(self) -> BoundingBox:
        return self.boxes[self.last_frame]

    def coverage(self, n_frames: int) -> float:
        """Fraction of the n_frames in which the track holds a box"""
        return len(self.boxes) / n_frames if n_frames > 0 else 0.0


def track_overlap(per_frame, max_gap: int = 0) -> list[Track]:
    """
    This method links boxes of consecutive frames: each box joins the
    overlapping track with the highest IoU, pairs being taken greedily in
    descending IoU order; unmatched boxes open new tracks.

    Parameters
    ----------
    per_frame : Mapping or Iterable of (frame, boxes)
        Boxes per frame index
    max_gap : int
        Frames a track may miss and still be continued

    Returns
    ----------
    list[Track]
        The tracks, by identifier

    """

    tracks: list[Track] = []

    for f, boxes in sorted(_as_mapping(per_frame).items()):
        active = [t for t in tracks if f - t.last_frame <= max_gap + 1]

        candidates = []
        for i, box in enumerate(boxes):
            for k, track in enumerate(active):
                value = iou(box, track.last_box)
                if value > 0:
                    candidates.append((-value, k, i))
        candidates.sort()

        taken_boxes, taken_tracks = set(), set()
        for _, k, i in candidates:
            if i in taken_boxes or k in taken_tracks:
                continue
            active[k].boxes[f] = boxes[i]
            taken_boxes.add(i)
            taken_tracks.add(k)

        for i, box in enumerate(boxes):
            if i not in taken_boxes:
                tracks.append(Track(len(tracks), {f: box}))

    logger.debug(f'{len(tracks)} tracks')

    return tracks
