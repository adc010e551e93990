"""
Module console.py

This module contains the text front-end of the command line: the log
handler writing to the error stream and the user messages

"""

import logging
import sys
from enum import Enum
from typing import TextIO

from nomfsim import APP_NAME


class MessageType(Enum):
    """
    This class collects the different types of messages.

    """

    ERROR = 0
    MESSAGE = 1


class ConsoleLogHandler(logging.StreamHandler):
    """
    Handler printing the records of the package loggers on a text stream,
    the error stream unless told otherwise. The stream is looked up at
    every record so that redirections made after installation are honoured.

    """

    def __init__(self, stream: TextIO | None = None):
        super().__init__(stream)
        self._stream = stream
        self.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))

    @property
    def stream(self) -> TextIO:
        return self._stream if self._stream is not None else sys.stderr

    @stream.setter
    def stream(self, value: TextIO | None) -> None:
        self._stream = value


def install_handler(level: str = 'INFO', stream: TextIO | None = None) -> ConsoleLogHandler:
    """
    This method attaches a single console handler to the package root logger

    Parameters
    ----------
    level : str
        Name of the logging level.
    stream : TextIO, optional
        Destination, the error stream by default.

    Returns
    ----------
    ConsoleLogHandler
        The handler installed.

    """

    logger = logging.getLogger('nomfsim')
    for h in list(logger.handlers):
        if isinstance(h, ConsoleLogHandler):
            logger.removeHandler(h)

    handler = ConsoleLogHandler(stream)
    logger.addHandler(handler)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    logger.propagate = False

    return handler


def banner(command: str) -> str:
    return f'***** {APP_NAME} - {command.upper()} *****'


def message(text: str, message_type: MessageType = MessageType.MESSAGE, stream: TextIO | None = None) -> None:
    """Errors go to the error stream with a prefix, messages to the output stream"""
    if message_type == MessageType.ERROR:
        print(f'{APP_NAME}: error: {text}', file=stream if stream is not None else sys.stderr)
    else:
        print(text, file=stream if stream is not None else sys.stdout)
