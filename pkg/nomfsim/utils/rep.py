"""
Module rep.py

This module contains utility methods for the representation of configuration
objects: typed JSON resources, user overrides and dimension strings

"""

import ast
import copy
import json
import logging
import traceback

from nomfsim import JSON_DIR
from nomfsim.exceptions import ConfigError

logger = logging.getLogger('nomfsim.config')


def read_json(path: str) -> dict:
    """
    This method loads the content of a JSON file
    located at the 'path' directory in a dictionary.

    Parameters
    ----------
    path : str
        Path to JSON file.

    Returns
    ----------
    dict
        The dictionary built.

    """

    try:
        with open(path, encoding='utf-8') as json_file:
            # Init dict with default values
            dictionary = json.loads(json_file.read())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f'Cannot read configuration {path}: {e}') from e

    # Update dict with types
    dictionary = allow_list_in_dict(dictionary)
    dictionary = force_types(dictionary)

    return dictionary


def read_resource(name: str) -> dict:
    """
    Shortcut for loading one of the packaged JSON resources by file name

    """

    return read_json(f'{JSON_DIR}/{name}')


def force_types(dictionary: dict) -> dict:
    """
    This method allows to force the value types for the given
    dictionary.

    Parameters
    ----------
    dictionary : dict
        The dictionary with values expressed as strings.

    Returns
    -------
    dict
        The same dictionary with typed values.

    """

    for key in dictionary.keys():
        element = dictionary[key]
        if isinstance(element, dict):
            if 'value' in element.keys() and 'type' in element.keys():  # value => type
                dictionary[key]['value'] = cast_value(element['value'], element['type'])
            else:
                dictionary[key] = force_types(element)
    return dictionary


def cast_value(value, type_name: str):
    """
    This method converts a raw JSON value to the declared type

    Parameters
    ----------
    value : Any
        The raw value, usually a string.
    type_name : str
        One of 'bool', 'int', 'float', 'str', 'tuple', 'list'.

    Returns
    -------
    Any
        The converted value.

    """

    if not isinstance(value, str):
        return value

    try:
        match type_name:
            case 'bool':
                return value == 'True'
            case 'int':
                return int(value)
            case 'float':
                return float(value)
            case 'tuple':
                return tuple(ast.literal_eval(value))
            case 'list':
                return list(ast.literal_eval(value))
            case _:
                return value
    except (ValueError, SyntaxError) as e:
        raise ConfigError(f'Value {value!r} is not a valid {type_name}') from e


def allow_list_in_dict(dictionary: dict) -> dict:
    """
    This method translates string representations of lists
    in the 'allowed' fields of a dictionary to actual lists.
    Necessary for JSON representation of list values.

    Parameters
    ----------
    dictionary : dict
        The dictionary containing strings representing lists.

    Returns
    -------
    dict
        The same dictionary with actual lists.

    """

    for key in dictionary.keys():
        element = dictionary[key]
        if isinstance(element, dict):
            dictionary[key] = allow_list_in_dict(element)
        elif key == 'allowed' and isinstance(element, str) and '[' in element:
            dictionary[key] = [e.strip() for e in element.replace('[', '').replace(']', '').split(',')]

    return dictionary


def flatten_params(section: dict) -> dict:
    """
    This method collapses a section of typed entries into a plain
    dictionary {name: value}, validating 'allowed' choices.

    Parameters
    ----------
    section : dict
        A dictionary of entries, each with 'name' and 'value' keys.

    Returns
    -------
    dict
        The plain dictionary of parameters.

    """

    params = dict()

    for label, entry in section.items():
        if not isinstance(entry, dict) or 'name' not in entry:
            continue

        value = entry.get('value')
        if 'allowed' in entry and str(value) not in entry['allowed']:
            raise ConfigError(f'{label}: {value} is not one of {entry["allowed"]}')

        params[entry['name']] = value

    return params


def load_defaults(name: str) -> dict:
    """
    This method reads a resource made of sections of typed entries and
    returns the nested dictionary {section_name: {param: value}}

    """

    resource = read_resource(name)
    return {section: flatten_params(entries) for section, entries in resource.items()}


def merge_config(defaults: dict, overrides: dict) -> dict:
    """
    This method deep-merges a user dictionary over the defaults. Unknown
    keys are rejected so that misspelled parameters do not go unnoticed.

    Parameters
    ----------
    defaults : dict
        The resolved default configuration.
    overrides : dict
        The user configuration, possibly partial.

    Returns
    -------
    dict
        A new dictionary with the overrides applied.

    """

    merged = copy.deepcopy(defaults)

    for key, value in overrides.items():
        if key not in merged:
            raise ConfigError(f'Unknown configuration key {key!r}')

        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f'Configuration key {key!r} expects a section')
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value

    return merged


def text2tuple(text: str) -> tuple:
    """
    This method takes a string in format '(n,m,l)...', 'nxm' or 'n' and
    converts it into a tuple of integers.

    Parameters
    ----------
    text: str
        Input string to convert.

    Returns
    ----------
    tuple
        The converted dimensions.

    """

    output_tuple = tuple()
    text = str(text).lower().replace('x', ',')

    try:
        for token in text.replace('(', '').replace(')', '').split(','):
            if token.strip() != '':
                output_tuple += (int(token),)
    except ValueError as e:
        raise ConfigError(f'Invalid dimensions {text!r}') from e

    return output_tuple


def dump_exception(e: Exception) -> None:
    logger.debug(''.join(traceback.format_exception(e)))


def format_table(header: list, rows: list) -> str:
    """
    This method renders rows as an aligned text table, numbers right-aligned

    Parameters
    ----------
    header : list
        Column titles.
    rows : list
        Rows of cells.

    Returns
    -------
    str
        The table without trailing newline.

    """

    def cell(v) -> str:
        return f'{v:.6g}' if isinstance(v, float) else str(v)

    cells = [[cell(v) for v in row] for row in rows]
    widths = [max([len(str(h))] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]

    lines = ['  '.join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip(),
             '  '.join('-' * w for w in widths)]
    for raw, row in zip(rows, cells):
        lines.append('  '.join(c.rjust(w) if isinstance(v, (int, float)) else c.ljust(w)
                               for v, c, w in zip(raw, row, widths)).rstrip())

    return '\n'.join(lines)
