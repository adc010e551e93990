"""
Module file.py

This module contains the classes and functions for reading and writing
event streams, PBM frames, box annotations and result tables

"""

import csv
import io
import logging
import os
import re
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from nomfsim.exceptions import EventParseError, ConfigError, EvaluationError
from nomfsim.model.event import EVENT_DTYPE, MAX_TIMESTAMP, empty_events
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import BoundingBox, SensorGeometry

logger = logging.getLogger('nomfsim.file')

CSV_HEADER = 't_us,x,y,p'
BOX_HEADER = ['frame', 'x_min', 'y_min', 'x_max', 'y_max']
_WINDOW_COMMENT = re.compile(rb'window_start=(\d+)\s+window_len=(\d+)')


class FileFormat:
    """
    This class is a container of file formats used in NOMFsim

    """

    SUPPORTED_EVENT_FORMATS = {'CSV': ['csv', 'txt'],
                               'BINARY': ['bin', 'aer', 'evt']}

    SUPPORTED_FRAME_FORMATS = {'PBM': ['pbm']}

    FRAME_PATTERN = 'frame_{:05d}.pbm'


def _field(token: str, name: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise EventParseError(f'non-numeric {name} field {token.strip()!r}', line) from None


def parse_csv(reader: BinaryIO, geometry: SensorGeometry = SensorGeometry(), strict: bool = False) -> np.ndarray:
    """
    This method reads `t_us,x,y,p` lines from a byte stream. A first line
    made of column names is skipped.

    Parameters
    ----------
    reader : BinaryIO
        The UTF-8 byte stream
    geometry : SensorGeometry
        Bounds of the coordinates
    strict : bool
        Reject decreasing timestamps

    Returns
    ----------
    np.ndarray
        The events, in file order

    """

    data = reader.read()
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        line = data.count(b'\n', 0, e.start) + 1
        raise EventParseError(f'invalid UTF-8 byte 0x{data[e.start]:02x}', line) from None
    rows = []
    last_t = -1

    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip() == '':
            continue

        tokens = line.split(',')
        if number == 1 and all(re.fullmatch(r'\s*[A-Za-z_]\w*\s*', tok) for tok in tokens):
            continue  # Header

        if len(tokens) != 4:
            raise EventParseError(f'expected 4 fields, found {len(tokens)}', number)

        t = _field(tokens[0], 't_us', number)
        x = _field(tokens[1], 'x', number)
        y = _field(tokens[2], 'y', number)
        p = _field(tokens[3], 'p', number)

        if not 0 <= t <= MAX_TIMESTAMP:
            raise EventParseError(f'timestamp {t} outside the 32-bit range', number)
        if not geometry.contains(x, y):
            raise EventParseError(f'coordinate ({x}, {y}) out of bounds for '
                                  f'{geometry.width}x{geometry.height}', number)
        if p not in (0, 1):
            raise EventParseError(f'polarity {p} is not 0 or 1', number)
        if strict and t < last_t:
            raise EventParseError(f'timestamp {t} decreases (previous {last_t})', number)

        last_t = t
        rows.append((t, x, y, p))

    return np.array(rows, dtype=EVENT_DTYPE) if rows else empty_events()


def parse_binary(reader: BinaryIO, geometry: SensorGeometry = SensorGeometry(), strict: bool = False) -> np.ndarray:
    """
    This method decodes 9-byte little-endian records (t u32, x u16, y u16, p u8)

    Parameters
    ----------
    reader : BinaryIO
        The byte stream
    geometry : SensorGeometry
        Bounds of the coordinates
    strict : bool
        Reject decreasing timestamps

    Returns
    ----------
    np.ndarray
        The events, in file order

    """

    data = reader.read()
    if len(data) % EVENT_DTYPE.itemsize != 0:
        raise EventParseError(f'truncated record: {len(data)} bytes is not a multiple of {EVENT_DTYPE.itemsize}',
                              len(data) // EVENT_DTYPE.itemsize + 1)

    events = np.frombuffer(data, dtype=EVENT_DTYPE).copy()

    bad_p = events['p'] > 1
    if np.any(bad_p):
        i = int(np.argmax(bad_p))
        raise EventParseError(f'polarity {events["p"][i]} is not 0 or 1', i + 1)

    outside = (events['x'] >= geometry.width) | (events['y'] >= geometry.height)
    if np.any(outside):
        i = int(np.argmax(outside))
        raise EventParseError(f'coordinate ({events["x"][i]}, {events["y"][i]}) out of bounds for '
                              f'{geometry.width}x{geometry.height}', i + 1)

    if strict:
        decreasing = np.diff(events['t'].astype(np.int64)) < 0
        if np.any(decreasing):
            i = int(np.argmax(decreasing)) + 1
            raise EventParseError(f'timestamp {events["t"][i]} decreases (previous {events["t"][i - 1]})', i + 1)

    return events


def write_csv(events: np.ndarray, writer: BinaryIO, header: bool = True) -> None:
    buffer = io.StringIO()
    if header:
        buffer.write(CSV_HEADER + '\n')
    for t, x, y, p in zip(events['t'], events['x'], events['y'], events['p']):
        buffer.write(f'{t},{x},{y},{p}\n')
    writer.write(buffer.getvalue().encode('utf-8'))


def write_binary(events: np.ndarray, writer: BinaryIO) -> None:
    writer.write(np.ascontiguousarray(events, dtype=EVENT_DTYPE).tobytes())


def write_pbm(frame: EbbiFrame, writer: BinaryIO, binary: bool = True) -> None:
    """
    This method serializes a frame as PBM: P4 packs 8 pixels per byte, most
    significant bit first, each row padded to a byte boundary; P1 writes one
    ASCII digit per pixel. The frame window is kept in a header comment.

    Parameters
    ----------
    frame : EbbiFrame
        The frame to write
    writer : BinaryIO
        The output byte stream
    binary : bool
        P4 if True, P1 otherwise

    """

    magic = b'P4' if binary else b'P1'
    header = (magic + f'\n# window_start={frame.window_start} window_len={frame.window_len}\n'
                      f'{frame.geometry.width} {frame.geometry.height}\n'.encode('ascii'))
    writer.write(header)

    if binary:
        writer.write(np.packbits(frame.bits, axis=1).tobytes())
    else:
        for row in frame.bits:
            writer.write(''.join('1' if b else '0' for b in row).encode('ascii') + b'\n')


def read_pbm(reader: BinaryIO) -> EbbiFrame:
    """
    This method parses a P1 or P4 PBM stream

    Parameters
    ----------
    reader : BinaryIO
        The byte stream

    Returns
    ----------
    EbbiFrame
        The frame; the window is read back from the header comment if present

    """

    data = reader.read()
    magic = data[:2]
    if magic not in (b'P1', b'P4'):
        raise ConfigError(f'Not a PBM stream (magic {magic!r})')

    # Header tokens: width and height, with comments allowed in between
    pos, tokens, window = 2, [], (0, 0)
    while len(tokens) < 2:
        if pos >= len(data):
            raise ConfigError('Truncated PBM header')
        c = data[pos:pos + 1]
        if c == b'#':
            end = data.find(b'\n', pos)
            end = len(data) if end < 0 else end
            match = _WINDOW_COMMENT.search(data[pos:end])
            if match:
                window = int(match.group(1)), int(match.group(2))
            pos = end + 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            if start == pos:
                raise ConfigError(f'Unexpected byte {c!r} in PBM header')
            tokens.append(int(data[start:pos]))

    width, height = tokens
    geometry = SensorGeometry(width, height)

    if magic == b'P4':
        raster = data[pos + 1:]  # Single whitespace after the height
        row_bytes = (width + 7) // 8
        if len(raster) < row_bytes * height:
            raise ConfigError('Truncated PBM raster')
        packed = np.frombuffer(raster[:row_bytes * height], dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :width]
    else:
        digits = np.frombuffer(re.sub(rb'\s+', b'', data[pos:]), dtype=np.uint8)
        if len(digits) < width * height:
            raise ConfigError('Truncated PBM raster')
        bits = (digits[:width * height] - ord('0')).reshape(height, width)

    return EbbiFrame(geometry, bits, window[0], window[1])


def write_frames(directory: str, frames: Iterable[EbbiFrame], binary: bool = True) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = os.path.join(directory, FileFormat.FRAME_PATTERN.format(i))
        with open(path, 'wb') as f:
            write_pbm(frame, f, binary)
        paths.append(path)
    return paths


def read_frames(directory: str) -> list[EbbiFrame]:
    names = sorted(n for n in os.listdir(directory) if n.split('.')[-1] in FileFormat.SUPPORTED_FRAME_FORMATS['PBM'])
    frames = []
    for name in names:
        with open(os.path.join(directory, name), 'rb') as f:
            frames.append(read_pbm(f))
    return frames


def write_boxes(path: str, boxes: Sequence[tuple[int, Sequence[BoundingBox]]]) -> None:
    """
    This method writes `frame,x_min,y_min,x_max,y_max` rows, one per box

    """

    with open(path, 'w', newline='', encoding='utf-8') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(BOX_HEADER)
        for frame_index, frame_boxes in boxes:
            for b in frame_boxes:
                out.writerow([frame_index, b.x_min, b.y_min, b.x_max, b.y_max])


def read_boxes(path: str) -> dict[int, list[BoundingBox]]:
    """
    This method reads a box CSV into {frame index: boxes}

    """

    boxes: dict[int, list[BoundingBox]] = {}
    with open(path, newline='', encoding='utf-8') as f:
        for number, row in enumerate(csv.reader(f), start=1):
            if not row or (number == 1 and row[0].strip() == 'frame'):
                continue
            try:
                frame_index, x_min, y_min, x_max, y_max = (int(v) for v in row)
            except ValueError:
                raise EvaluationError(f'{path}: line {number}: malformed box row {row}') from None
            boxes.setdefault(frame_index, []).append(BoundingBox(x_min, y_min, x_max, y_max))
    return boxes


def write_table(path_or_stream, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """
    This method writes a plot-ready CSV table to a path or an open text stream

    """

    if isinstance(path_or_stream, str):
        with open(path_or_stream, 'w', newline='', encoding='utf-8') as f:
            write_table(f, header, rows)
        return

    out = csv.writer(path_or_stream, lineterminator='\n')
    out.writerow(header)
    for row in rows:
        out.writerow([f'{v:.6g}' if isinstance(v, float) else v for v in row])


class InputHandler:
    """
    This class provides an interface for reading an event file with the
    decoder matching its extension.

    Attributes
    ----------
    extension : str
        Extension of the last file read
    geometry : SensorGeometry
        Bounds applied to the coordinates
    strict : bool
        Reject decreasing timestamps

    """

    def __init__(self, geometry: SensorGeometry = SensorGeometry(), strict: bool = False):
        self.extension = ''
        self.geometry = geometry
        self.strict = strict

    def read_events(self, path: str) -> np.ndarray:
        """
        This method decodes the events stored at the given path.

        Parameters
        ----------
        path : str
            The event file path.

        Returns
        ----------
        np.ndarray
            The events.

        """

        if path == '':
            raise ConfigError('Invalid path.')

        self.extension = path.split('.')[-1].lower()

        with open(path, 'rb') as f:
            if self.extension in FileFormat.SUPPORTED_EVENT_FORMATS['CSV']:
                events = parse_csv(f, self.geometry, self.strict)
            elif self.extension in FileFormat.SUPPORTED_EVENT_FORMATS['BINARY']:
                events = parse_binary(f, self.geometry, self.strict)
            else:
                raise ConfigError(f'Unsupported event format {self.extension}')

        logger.info(f'Read {len(events)} events from {path}')

        return events


class OutputHandler:
    """
    This class saves events in one of the supported formats, chosen by
    the file extension.

    """

    def __init__(self):
        self.extension = None

    def save(self, events: np.ndarray, path: str) -> None:
        self.extension = path.split('.')[-1].lower()

        with open(path, 'wb') as f:
            if self.extension in FileFormat.SUPPORTED_EVENT_FORMATS['CSV']:
                write_csv(events, f)
            elif self.extension in FileFormat.SUPPORTED_EVENT_FORMATS['BINARY']:
                write_binary(events, f)
            else:
                raise ConfigError(f'Unsupported event format {self.extension}')
