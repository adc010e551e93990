"""
Module container.py

This module contains classes for the compact representation of a run

"""

import json
import os
from dataclasses import asdict, dataclass, field

from nomfsim import __version__
from nomfsim.exceptions import ConfigError

MANIFEST_NAME = 'manifest.json'


@dataclass
class RunManifest:
    """
    This class is a container for the description of a command run: given
    the same manifest, a command reproduces its outputs.

    Attributes
    ----------
    command : str
        Subcommand name
    config : dict
        Resolved configuration, every default materialized
    seed : int
        Seed of every stochastic component
    inputs : list[str]
        Paths read
    outputs : list[str]
        Paths written
    arguments : dict
        Command line values
    version : str
        Version of the tool

    Methods
    ----------
    to_json()
        Procedure to serialize the manifest
    write(str)
        Procedure to save the manifest in a directory

    """

    command: str
    config: dict
    seed: int
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    arguments: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)

    def write(self, directory: str) -> str:
        """
        This method saves the manifest as manifest.json in the given directory

        Returns
        ----------
        str
            The path written

        """

        path = os.path.join(directory or '.', MANIFEST_NAME)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_json() + '\n')
        return path

    @staticmethod
    def is_manifest(content: dict) -> bool:
        return {'command', 'config', 'seed'} <= set(content)

    @classmethod
    def read(cls, path: str) -> 'RunManifest':
        try:
            with open(path, encoding='utf-8') as f:
                content = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f'Cannot read manifest {path}: {e}') from e

        if not cls.is_manifest(content):
            raise ConfigError(f'{path} is not a run manifest')

        known = {k: v for k, v in content.items() if k in cls.__dataclass_fields__}
        return cls(**known)
