"""
Module main.py

This module contains the command line of NOMFsim: the parser, built from the
declarations in commands.json, and one handler per subcommand. Handlers read
the resolved configuration, call the library and report the paths they used
so that a manifest can be written next to the outputs.

"""

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import numpy as np

from nomfsim import APP_NAME, __version__
from nomfsim.exceptions import ConfigError, EvaluationError, NomfsimError
from nomfsim.model import cost, filters, imc, tracker
from nomfsim.model.event import generate_synthetic, is_time_sorted, sort_by_time, traffic_scene
from nomfsim.model.frame import EbbiFrame, accumulate
from nomfsim.model.geometry import SensorGeometry
from nomfsim.utils import file, rep
from nomfsim.utils.container import RunManifest
from nomfsim.utils.filter_factory import FilterFactory, software_stats
from nomfsim.utils.validator import ArgumentValidator
from nomfsim.view import console
from nomfsim.view.console import MessageType

logger = logging.getLogger('nomfsim.cli')

ARG_TYPES = {
    'int': int,
    'float': float,
    'str': str,
    'kernel': ArgumentValidator.kernel,
    'positive_int': ArgumentValidator.positive_int,
    'fraction': ArgumentValidator.fraction,
    'float_grid': ArgumentValidator.float_grid,
    'int_grid': ArgumentValidator.int_grid,
    'dimensions': ArgumentValidator.dimensions
}


def default_config() -> dict:
    """
    This method materializes every default of the JSON resources in a plain
    nested dictionary {resource: {section: {param: value}}}

    """

    cost_resource = rep.read_resource('cost.json')
    return {
        'pipeline': rep.load_defaults('pipeline.json'),
        'imc': rep.load_defaults('imc.json'),
        'cost': {
            'parameters': rep.flatten_params(cost_resource['parameters']),
            'energy_table': {name: rep.flatten_params(row) for name, row in cost_resource['energy_table'].items()}
        }
    }


def set_config(config: dict, path: str, value) -> None:
    *sections, key = path.split('.')
    node = config
    for s in sections:
        node = node[s]

    if isinstance(value, SensorGeometry):
        node[key].update(width=value.width, height=value.height)
    else:
        node[key] = value


class CommandLine:
    """
    This class builds the argument parser from commands.json, the way the
    entries of a menu are read from a resource, and resolves the
    configuration of a parsed command.

    Attributes
    ----------
    spec : dict
        The command declarations
    targets : dict
        For every command, the (flag destination, configuration paths) pairs
    commands : dict
        The subcommand parsers
    parser : argparse.ArgumentParser
        The parser

    Methods
    ----------
    build_parser()
        Procedure to create the parser and its subcommands
    replay(argparse.Namespace, list)
        Procedure to take the defaults of a command from its manifest
    resolve(argparse.Namespace)
        Procedure to merge defaults, configuration file and flags

    """

    def __init__(self, resource: str = 'commands.json'):
        self.spec = rep.read_resource(resource)
        self.targets: dict[str, list[tuple[str, list[str]]]] = {}
        self.commands: dict[str, argparse.ArgumentParser] = {}
        self.parser = self.build_parser()

    @staticmethod
    def add_arguments(parser: argparse.ArgumentParser, entries: dict) -> list[tuple[str, list[str]]]:
        targets = []

        for label, entry in entries.items():
            name = entry['name']
            kwargs = {'help': entry.get('description', label)}
            type_name = entry.get('type', 'str')

            if type_name == 'bool':
                kwargs['action'] = 'store_true'
            else:
                convert = ARG_TYPES[type_name]
                kwargs['type'] = convert
                if 'value' in entry:
                    kwargs['default'] = entry['value']
                if 'allowed' in entry:
                    kwargs['choices'] = [convert(a) for a in entry['allowed']]
                if 'metavar' in entry:
                    kwargs['metavar'] = entry['metavar']

            if entry.get('required') == 'True':
                kwargs['required'] = True

            action = parser.add_argument(name, **kwargs)
            paths = entry['config'].split(',') if 'config' in entry else []
            targets.append((action.dest, paths))

        return targets

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        self.add_arguments(common, self.spec['common'])

        parser = argparse.ArgumentParser(prog=APP_NAME.lower(),
                                         description='Non-overlap median filtering of event-based binary images '
                                                     'and its in-memory computing model.')
        parser.add_argument('--version', action='version', version=f'{APP_NAME} {__version__}')
        subparsers = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

        for command, declaration in self.spec['commands'].items():
            sub = subparsers.add_parser(command, parents=[common], help=declaration['help'],
                                        description=declaration['help'])
            self.commands[command] = sub
            self.targets[command] = self.add_arguments(sub, declaration['args'])

        return parser

    def replay(self, args: argparse.Namespace, argv: list[str] | None = None) -> argparse.Namespace:
        """
        This method parses the command line again when --config names a
        manifest of the same command: the arguments recorded there become the
        defaults, so only the flags given now differ from the recorded run

        """

        if not args.config:
            return args

        content = rep.read_json(args.config)
        if not RunManifest.is_manifest(content) or content['command'] != args.command:
            return args

        known = {dest for dest, _ in self.targets[args.command]}
        recorded = {dest: SensorGeometry(**value) if isinstance(value, dict) else value
                    for dest, value in content.get('arguments', {}).items() if dest in known}
        self.commands[args.command].set_defaults(**recorded)

        return self.parser.parse_args(argv)

    def resolve(self, args: argparse.Namespace) -> tuple[dict, int]:
        """
        This method merges, in order, the defaults, the --config file and the
        flags given on the command line

        Returns
        ----------
        tuple[dict, int]
            The resolved configuration and the seed of the run

        """

        config = default_config()
        seed = args.seed

        if args.config:
            content = rep.read_json(args.config)
            if RunManifest.is_manifest(content):
                logger.info(f'Replaying the {content["command"]} run of {args.config}')
                if seed is None:
                    seed = int(content['seed'])
                content = content['config']
            config = rep.merge_config(config, content)

        for dest, paths in self.targets.get(args.command, []):
            value = getattr(args, dest, None)
            if value is None or value is False:
                continue
            for path in paths:
                set_config(config, path.strip(), value)

        if seed is None:
            seed = int(np.random.SeedSequence().entropy % 2 ** 32)
            logger.info(f'No seed given, drawn {seed}')

        return config, seed


def geometry_of(config: dict) -> SensorGeometry:
    return SensorGeometry(**config['pipeline']['sensor'])


def array_of(config: dict, geometry: SensorGeometry) -> imc.ArrayConfig:
    params = config['imc']['array']
    return imc.array_from_config(params, rows=geometry.height, cols=geometry.width,
                                 banks=max(params['banks'], math.ceil(geometry.width / params['bank_cols'])))


def mismatch_of(config: dict, array: imc.ArrayConfig, seed: int, ideal: bool = False) -> imc.MismatchModel:
    """
    This method builds the device variation of a run: none when ideal, the
    calibrated model when calibration is enabled, the configured one otherwise

    """

    model = imc.mismatch_from_config(config['imc']['mismatch'], seed=seed)
    if ideal:
        return dataclasses.replace(model, sigma_i=0.0, sigma_c_rel=0.0)

    calibration = config['imc']['calibration']
    if calibration['enabled']:
        model = imc.calibrate_mismatch(imc.targets_from_config(calibration['targets']), model, array)

    ok, ratio = imc.validate_tg_constraint(calibration['r_tg'], array, model, calibration['tg_margin'])
    if not ok:
        logger.warning(f'Transmission gates are slow: discharge/RC time constant ratio {ratio:.1f}')

    return model


def load_events(path: str, config: dict, geometry: SensorGeometry) -> np.ndarray:
    handler = file.InputHandler(geometry, config['pipeline']['framing']['strict'])
    events = handler.read_events(path)

    if not is_time_sorted(events):
        logger.warning(f'{path} is not sorted by time: sorting before framing')
        events = sort_by_time(events)

    return events


def frames_of(path: str, config: dict, geometry: SensorGeometry) -> list[EbbiFrame]:
    """Frames of a PBM directory, or accumulated from an event file"""
    if os.path.isdir(path):
        frames = file.read_frames(path)
        logger.info(f'Read {len(frames)} frames from {path}')
        return frames

    events = load_events(path, config, geometry)
    return [f for f, _ in accumulate(events, geometry, config['pipeline']['framing']['window_len'])]


def nn_config(config: dict) -> filters.NnFiltConfig:
    """NN-filt parameters, tau 0 standing for the frame window"""
    params = config['pipeline']['filters']
    tau = params['tau'] or config['pipeline']['framing']['window_len']
    return filters.NnFiltConfig(tau, params['timestamp_bits'], params['wrap_timestamps'])


def denoise_frames(events: np.ndarray | None, frames: list[EbbiFrame], method: str, config: dict, seed: int,
                   threads: int = 1, ideal: bool = False, origin: int = 0,
                   mismatch: imc.MismatchModel | None = None) -> list[tuple[EbbiFrame, imc.FlipStats]]:
    """
    This method runs one denoising method and pairs every filtered frame with
    its flip statistics. NN-filt needs the events the frames were made of;
    the in-memory filter builds its mismatch model unless one is given.

    """

    n = config['pipeline']['filters']['n']

    if method == 'nn':
        if events is None:
            raise ConfigError('NN-filt works on events, not on frames')
        geometry = frames[0].geometry if frames else geometry_of(config)
        kept = FilterFactory.create_event_filter('nn', nn_config(config), geometry)(events)
        window_len = config['pipeline']['framing']['window_len']
        out = [f for f, _ in accumulate(kept, geometry, window_len, origin, len(frames))]
        logger.info(f'NN-filt kept {len(kept)} of {len(events)} events')
        return [(o, software_stats(f, o)) for f, o in zip(frames, out)]

    array = None
    if method == 'imc' and frames:
        array = array_of(config, frames[0].geometry)
        if mismatch is None:
            mismatch = mismatch_of(config, array, seed, ideal)

    apply = FilterFactory.create_frame_filter(method, n, array, mismatch, seed, threads)
    return apply(frames)


def cmd_gen(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    scene = config['pipeline']['scene']
    scene_cfg = traffic_scene(geometry_of(config), scene['objects'], scene['noise_rate'], scene['duration'], seed,
                              scene['object_rate'], scene['edge_width'], config['pipeline']['framing']['window_len'],
                              scene['time_step'])
    events, ground_truth = generate_synthetic(scene_cfg)

    file.OutputHandler().save(events, args.out)
    file.write_boxes(args.gt, ground_truth)
    logger.info(f'Wrote {len(events)} events to {args.out} and {sum(len(b) for _, b in ground_truth)} '
                f'boxes to {args.gt}')

    return [], [args.out, args.gt], os.path.dirname(args.out)


def cmd_frame(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    geometry = geometry_of(config)
    events = load_events(args.input, config, geometry)
    results = accumulate(events, geometry, config['pipeline']['framing']['window_len'])

    paths = file.write_frames(args.outdir, [f for f, _ in results], binary=not args.ascii)
    stats_path = os.path.join(args.outdir, 'stats.csv')
    file.write_table(stats_path, ['frame', 'window_start', 'event_count', 'active_pixels', 'gamma'],
                     [[i, f.window_start, s.event_count, s.active_pixel_count, s.gamma_estimate]
                      for i, (f, s) in enumerate(results)])

    if results:
        logger.info(f'{len(results)} frames, mean gamma {np.mean([s.gamma_estimate for _, s in results]):.4f}')

    return [args.input], paths + [stats_path], args.outdir


def cmd_denoise(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    geometry = geometry_of(config)
    events, origin = None, 0

    if os.path.isdir(args.input):
        frames = frames_of(args.input, config, geometry)
    else:
        events = load_events(args.input, config, geometry)
        window_len = config['pipeline']['framing']['window_len']
        frames = [f for f, _ in accumulate(events, geometry, window_len)]
        origin = frames[0].window_start if frames else 0

    array, mismatch = None, None
    if args.method == 'imc' and frames:
        array = array_of(config, frames[0].geometry)
        mismatch = mismatch_of(config, array, seed, args.ideal)

    results = denoise_frames(events, frames, args.method, config, seed, args.threads, args.ideal, origin, mismatch)
    paths = file.write_frames(args.outdir, [f for f, _ in results], binary=not args.ascii)

    summary = {
        'method': args.method,
        'n': config['pipeline']['filters']['n'],
        'frames': len(results),
        'flipped_pixels': sum(s.flipped_pixels for _, s in results),
        'mean_alpha': float(np.mean([s.alpha_measured for _, s in results])) if results else 0.0,
        'unintended_flips': sum(s.unintended_flips for _, s in results),
        'latency_per_frame': results[0][1].latency if results else 0.0
    }
    if array is not None:
        summary['vdd'] = array.vdd
        summary['cycles'] = array.cycles
        summary['frames_per_us'] = array.frames_per_us
        summary['expected_unintended_kernels'] = float(sum(
            imc.expected_unintended_flips(f, array, mismatch)[0] for f in frames))

    stats_path = os.path.join(args.outdir, 'stats.json')
    with open(stats_path, 'w', encoding='utf-8') as f:
        json.dump({'summary': summary, 'frames': [s.to_dict() for _, s in results]}, f, indent=2)

    logger.info(f'{args.method}: {summary["frames"]} frames, mean alpha {summary["mean_alpha"]:.4f}, '
                f'{summary["unintended_flips"]} unintended flips')

    return [args.input], paths + [stats_path], args.outdir


def cmd_cost(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    geometry = geometry_of(config)
    n = config['pipeline']['filters']['n']
    p = config['cost']['parameters']
    params = cost.CostParams(geometry.width, geometry.height, n, p['beta_t'], p['gamma'], p['alpha'])
    inputs = []

    if args.alpha == 'measured':
        if not args.input:
            raise ConfigError('--alpha measured needs --input')
        frames = frames_of(args.input, config, geometry)
        if not frames:
            raise ConfigError(f'{args.input} holds no frames to measure alpha on')
        alpha = float(np.mean([filters.flipped_fraction(f, filters.nomf(f, n)) for f in frames]))
        logger.info(f'Measured alpha {alpha:.4f} over {len(frames)} frames (configured {params.alpha})')
        params = dataclasses.replace(params, alpha=alpha)
        inputs.append(args.input)

    table = cost.energy_table_from_rows(config['cost']['energy_table'])
    report = cost.build_cost_report(params, table, array_of(config, geometry))
    text = report.to_json() + '\n' if args.format == 'json' else report.to_table()

    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
        return inputs, [args.out], os.path.dirname(args.out)

    sys.stdout.write(text)
    return inputs, [], None


def cmd_mc(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    array = array_of(config, geometry_of(config))
    model = mismatch_of(config, array, seed, args.ideal)

    if (args.ones is None) != (args.zeros is None):
        raise ConfigError('--ones and --zeros go together')

    if args.ones is not None:
        results = [imc.monte_carlo_flip_rate(args.ones, args.zeros, vdd, args.trials, model, array, seed)
                   for vdd in args.vdd]
        rows = [[r.vdd, r.margin, r.trials, r.flip_rate] for r in results]
    else:
        sweep = imc.flip_rate_sweep(args.vdd, args.margin, args.trials, model, array, seed)
        results = [r.result for r in sweep]
        rows = [[r.vdd, r.margin, r.trials, r.flip_rate] for r in sweep]
    first = results[0] if results else None

    for vdd, margin, _, rate in rows:
        logger.info(f'vdd {vdd} V, margin {margin}: flip rate {rate:.4g}')

    outputs, directory = [], None
    if args.histogram and first is not None:
        bl, blb, edges = first.histogram(args.bins)
        file.write_table(args.histogram, ['current_low', 'current_high', 'bl', 'blb'],
                         [[float(edges[i]), float(edges[i + 1]), int(bl[i]), int(blb[i])] for i in range(len(bl))])
        outputs.append(args.histogram)
        directory = os.path.dirname(args.histogram)

    header = ['vdd', 'margin', 'trials', 'flip_rate']
    if args.out:
        file.write_table(args.out, header, rows)
        outputs.append(args.out)
        directory = os.path.dirname(args.out)
    else:
        file.write_table(sys.stdout, header, rows)

    return [], outputs, directory


def pipeline_proposals(events: np.ndarray, geometry: SensorGeometry, method: str, config: dict, seed: int,
                       n_frames: int, threads: int = 1, ideal: bool = False) -> list[tuple[int, list]]:
    """
    This method frames the events on the ground-truth grid, denoises the
    frames and proposes the bounding boxes of the remaining regions

    """

    window_len = config['pipeline']['framing']['window_len']
    frames = [f for f, _ in accumulate(events, geometry, window_len, 0, n_frames)]
    results = denoise_frames(events, frames, method, config, seed, threads, ideal)

    connectivity = config['pipeline']['tracker']['connectivity']
    return [(i, tracker.propose_regions(f, connectivity)) for i, (f, _) in enumerate(results)]


def cmd_eval(args, config: dict, seed: int) -> tuple[list[str], list[str], str | None]:
    ground_truth = file.read_boxes(args.gt)
    if not ground_truth:
        raise EvaluationError(f'{args.gt} holds no ground-truth boxes')

    settings = config['pipeline']['tracker']
    grid = [float(t) for t in settings['iou_grid']]
    inputs = [args.gt]
    curves = {}

    if args.proposals:
        inputs.append(args.proposals)
        curves[args.method] = tracker.evaluate(file.read_boxes(args.proposals), ground_truth, grid,
                                               settings['min_area'])
    elif args.events:
        inputs.append(args.events)
        geometry = geometry_of(config)
        events = load_events(args.events, config, geometry)

        window_len = config['pipeline']['framing']['window_len']
        last = int(events['t'][-1]) // window_len + 1 if len(events) else 0
        n_frames = max(last, max(ground_truth) + 1)

        for method in (['nomf', 'median'] if args.compare else [args.method]):
            proposals = pipeline_proposals(events, geometry, method, config, seed, n_frames, args.threads, args.ideal)
            kept = [(f, [b for b in boxes if b.area >= settings['min_area']]) for f, boxes in proposals]
            logger.info(f'{method}: {sum(len(b) for _, b in kept)} proposals, '
                        f'{len(tracker.track_overlap(kept))} tracks')
            curves[method] = tracker.evaluate(proposals, ground_truth, grid, settings['min_area'], n_frames)
    else:
        raise ConfigError('eval needs --proposals or --events')

    outputs = []
    stem, extension = os.path.splitext(args.out)
    for method, curve in curves.items():
        path = f'{stem}_{method}{extension}' if len(curves) > 1 else args.out
        file.write_table(path, ['iou', 'precision', 'recall'], curve.rows())
        outputs.append(path)

    if len(curves) > 1 and any(abs(t - 0.5) < 1e-9 for t in grid):
        (pa, ra), (pb, rb) = (c.at(0.5) for c in curves.values())
        logger.info(f'At IoU 0.5: delta precision {pa - pb:+.3f}, delta recall {ra - rb:+.3f}')

    return inputs, outputs, os.path.dirname(args.out)


COMMANDS = {
    'gen': cmd_gen,
    'frame': cmd_frame,
    'denoise': cmd_denoise,
    'cost': cmd_cost,
    'mc': cmd_mc,
    'eval': cmd_eval
}


def main(argv: list[str] | None = None) -> int:
    """
    This method runs one command. Usage errors exit with status 2 through
    argparse, library errors return 1.

    """

    cli = CommandLine()
    args = cli.parser.parse_args(argv)
    console.install_handler(args.log_level)

    try:
        args = cli.replay(args, argv)
        config, seed = cli.resolve(args)
        logger.info(console.banner(args.command))

        inputs, outputs, directory = COMMANDS[args.command](args, config, seed)

        if directory is not None:
            manifest = RunManifest(args.command, config, seed, inputs, outputs, vars(args))
            logger.debug(f'Manifest written to {manifest.write(directory)}')
    except (NomfsimError, OSError) as e:
        rep.dump_exception(e)
        console.message(str(e), MessageType.ERROR)
        return 1

    return 0


if __name__ == '__main__':
    sys.exit(main())
