"""
Module cost.py

This module contains the closed-form accounting of memory accesses,
operations, energy, latency and throughput of the four denoising pipelines

"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

from nomfsim.exceptions import ConfigError, CostError
from nomfsim.model.filters import check_kernel
from nomfsim.model.geometry import SensorGeometry
from nomfsim.model.imc import ArrayConfig
from nomfsim.utils import rep

logger = logging.getLogger('nomfsim.cost')


class Method(Enum):
    """
    This class collects the pipelines whose cost is modelled.

    """

    NN_FILT = 'nn_filt'
    MEDIAN = 'median'
    NOMF = 'nomf'
    NOMF_IMC = 'nomf_imc'

    @classmethod
    def from_name(cls, name: str) -> 'Method':
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(f'Unknown method {name!r}: expected one of {[m.value for m in cls]}') from None


@dataclass(frozen=True)
class CostParams:
    """
    Inputs of the access-count formulas.

    Attributes
    ----------
    width, height : int
        Frame size, D = width * height
    n : int
        Kernel side
    beta_t : int
        Bits per NN-filt timestamp
    gamma : float
        Events per frame as a fraction of D
    alpha : float
        Fraction of pixels flipped by NOMF

    """

    width: int = 320
    height: int = 240
    n: int = 3
    beta_t: int = 16
    gamma: float = 0.15
    alpha: float = 0.036

    def __post_init__(self):
        check_kernel(self.n)
        if self.width < 0 or self.height < 0:
            raise ConfigError('Frame size must be non-negative')
        if not 0 <= self.gamma <= 1 or not 0 <= self.alpha <= 1:
            raise ConfigError('gamma and alpha must lie in [0, 1]')
        if self.beta_t < 1:
            raise ConfigError('Timestamps need at least one bit')

    @property
    def d(self) -> int:
        return self.width * self.height


class ResourceCount(NamedTuple):
    reads: int
    writes: int
    ops: int
    bits: int


def resource_formula(method: Method, p: CostParams) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """
    This method evaluates the exact access formulas before rounding

    Parameters
    ----------
    method : Method
        The pipeline
    p : CostParams
        The parameters

    Returns
    ----------
    tuple[Fraction, Fraction, Fraction, Fraction]
        Reads, writes, operations and memory bits

    """

    d = Fraction(p.d)
    n2 = p.n * p.n
    beta = p.beta_t
    # Decimal strings keep 0.036 * 76800 = 2764.8 exact
    gamma = Fraction(str(p.gamma))
    alpha = Fraction(str(p.alpha))

    match method:
        case Method.NN_FILT:
            return beta * gamma * n2 * d, beta * gamma * d, gamma * n2 * d, beta * d
        case Method.MEDIAN:
            return n2 * d, d, n2 * d, 2 * d
        case Method.NOMF:
            return d, d, d, d
        case Method.NOMF_IMC:
            return d / p.n, alpha * d, Fraction(0), d
        case _:
            raise ConfigError(f'Unknown method {method}')


def count_resources(method: Method | str, p: CostParams) -> ResourceCount:
    if isinstance(method, str):
        method = Method.from_name(method)
    return ResourceCount(*(math.ceil(v) for v in resource_formula(method, p)))


@dataclass(frozen=True)
class EnergyLatencyEntry:
    """
    Per-bit figures of one filter implementation.

    Attributes
    ----------
    method : str
        Row name
    process : str
        Technology node
    area_per_cell : float
        um^2
    latency_per_bit : float
        ns
    energy_per_bit : float
        pJ

    """

    method: str
    process: str = ''
    area_per_cell: float = 0.0
    latency_per_bit: float = 0.0
    energy_per_bit: float = 0.0

    def __post_init__(self):
        if min(self.area_per_cell, self.latency_per_bit, self.energy_per_bit) < 0:
            raise CostError(f'Negative figure in the {self.method} entry')


@dataclass(frozen=True)
class ReferenceDesign:
    """Published figures of an in-memory design, carried as constants"""

    name: str
    technology: str
    algorithm: str
    sram_kb: float
    gops: str
    tops_w: str
    note: str = ''


def load_energy_table(resource: dict | None = None) -> dict[str, EnergyLatencyEntry]:
    """
    This method builds the energy/latency table from the 'energy_table'
    section of cost.json, or of an equivalent dictionary

    """

    if resource is None:
        resource = rep.read_resource('cost.json')

    rows = {name: rep.flatten_params(entries) for name, entries in resource.get('energy_table', {}).items()}
    return energy_table_from_rows(rows)


def energy_table_from_rows(rows: dict[str, dict]) -> dict[str, EnergyLatencyEntry]:
    """Table from plain {method: {field: value}} rows, as found in a resolved configuration"""
    try:
        return {name: EnergyLatencyEntry(name, **row) for name, row in rows.items()}
    except TypeError as e:
        raise CostError(f'Malformed energy table: {e}') from e


def load_references(resource: dict | None = None) -> list[ReferenceDesign]:
    if resource is None:
        resource = rep.read_resource('cost.json')

    designs = []
    for name, entries in resource.get('references', {}).items():
        params = rep.flatten_params(entries)
        note = entries.get('Efficiency', {}).get('description', '')
        designs.append(ReferenceDesign(name, note=note, **params))

    return designs


def energy_latency(method: Method | str, p: CostParams, table: dict[str, EnergyLatencyEntry],
                   array: ArrayConfig | None = None) -> tuple[float, float]:
    """
    This method scales the per-bit figures to a frame of D pixels.
    The in-memory filter takes the latency of its cycle count instead when
    the array is given.

    Parameters
    ----------
    method : Method | str
        The pipeline
    p : CostParams
        The parameters
    table : dict[str, EnergyLatencyEntry]
        Per-bit figures by method name
    array : ArrayConfig, optional
        The array running NOMF+IMC

    Returns
    ----------
    tuple[float, float]
        Energy per frame in joules and latency per frame in seconds

    """

    name = method.value if isinstance(method, Method) else method
    if name not in table:
        raise CostError(f'No energy/latency entry for {name!r}')

    entry = table[name]
    energy = entry.energy_per_bit * 1e-12 * p.d
    latency = entry.latency_per_bit * 1e-9 * p.d

    if name == Method.NOMF_IMC.value and array is not None and p.d > 0:
        latency = array.latency

    return energy, latency


@dataclass(frozen=True)
class Savings:
    """
    Energy ratio of the digital median over NOMF+IMC, split into the part
    due to the approximation and the part due to computing in memory.

    """

    total: float
    approx: float
    imc: float


def savings_decomposition(p: CostParams, table: dict[str, EnergyLatencyEntry]) -> Savings:
    for name in (Method.MEDIAN.value, Method.NOMF_IMC.value):
        if name not in table:
            raise CostError(f'No energy/latency entry for {name!r}')

    reference = table[Method.MEDIAN.value].energy_per_bit
    imc = table[Method.NOMF_IMC.value].energy_per_bit
    if reference == 0 or imc == 0:
        raise CostError('Cannot decompose savings with a zero energy entry')

    total = reference / imc
    # Reads and operations of NOMF against the overlapping median
    approx = float(p.n * p.n)

    return Savings(total, approx, total / approx)


def throughput_gops(n: int, frame_rate: float, p: CostParams) -> float:
    """
    n^2 - 1 additions per kernel, D / n^2 kernels per frame

    """

    if frame_rate < 0:
        raise ConfigError('Frame rate must be non-negative')
    return (n * n - 1) * (p.d / (n * n)) * frame_rate * 1e-9


def median_cycles_per_pixel(n: int) -> int:
    """Clock cycles of a digital median per output pixel: n^2 reads, n^2 additions and one write"""
    return 2 * n * n + 1


def precharges_per_column(method: Method | str, n: int, rows: int = 240) -> int:
    """
    This method counts the bit-line precharges of one column per frame: the
    in-memory filter charges once for n cells, reading charges once per cell

    """

    if isinstance(method, str):
        method = Method.from_name(method)
    check_kernel(n)

    if method == Method.NOMF_IMC:
        return math.ceil(rows / n)
    return rows


@dataclass
class CostReport:
    """
    Complete cost comparison for one parameter set.

    Attributes
    ----------
    params : CostParams
        The parameters
    resources : dict[str, ResourceCount]
        Access counts by method
    energy_per_frame : dict[str, float]
        Joules, for every method of the energy table
    latency_per_frame : dict[str, float]
        Seconds, for every method of the energy table
    savings : Savings
        Energy ratio decomposition
    frame_rate : float
        Frames per second of the array
    throughput_gops : float
        Additions per second, 10^9
    references : list[ReferenceDesign]
        Published designs

    """

    params: CostParams
    resources: dict[str, ResourceCount]
    energy_per_frame: dict[str, float]
    latency_per_frame: dict[str, float]
    savings: Savings
    frame_rate: float
    throughput_gops: float
    references: list[ReferenceDesign] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'params': asdict(self.params),
            'resources': {k: v._asdict() for k, v in self.resources.items()},
            'energy_per_frame': self.energy_per_frame,
            'latency_per_frame': self.latency_per_frame,
            'ratios': {'total_saving': self.savings.total,
                       'imc_saving': self.savings.imc,
                       'approx_saving': self.savings.approx},
            'frame_rate': self.frame_rate,
            'throughput_gops': self.throughput_gops,
            'references': [asdict(r) for r in self.references]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        sections = []

        header = ['method', 'reads', 'writes', 'ops', 'bits']
        rows = [[name, *counts] for name, counts in self.resources.items()]
        sections.append(rep.format_table(header, rows))

        header = ['method', 'energy/frame (J)', 'latency/frame (s)']
        rows = [[name, self.energy_per_frame[name], self.latency_per_frame[name]]
                for name in self.energy_per_frame]
        sections.append(rep.format_table(header, rows))

        header = ['saving', 'factor']
        rows = [['total', self.savings.total], ['approximation', self.savings.approx],
                ['in-memory', self.savings.imc]]
        sections.append(rep.format_table(header, rows))

        sections.append(f'Throughput: {self.throughput_gops:.1f} GOPS at {self.frame_rate * 1e-6:.3f} frames/us')

        if self.references:
            header = ['design', 'technology', 'algorithm', 'SRAM (kB)', 'GOPS', 'TOPS/W']
            rows = [[r.name, r.technology, r.algorithm, r.sram_kb, r.gops, r.tops_w] for r in self.references]
            sections.append(rep.format_table(header, rows))

        return '\n\n'.join(sections) + '\n'


def build_cost_report(p: CostParams = CostParams(), table: dict[str, EnergyLatencyEntry] | None = None,
                      array: ArrayConfig | None = None,
                      references: list[ReferenceDesign] | None = None) -> CostReport:
    """
    This method assembles the access counts of every method, the energy and
    latency of every table entry, the savings and the array throughput

    Parameters
    ----------
    p : CostParams
        The parameters
    table : dict[str, EnergyLatencyEntry], optional
        Per-bit figures, cost.json by default
    array : ArrayConfig, optional
        The array, sized as the frame with kernel side n by default
    references : list[ReferenceDesign], optional
        Published designs, cost.json by default

    Returns
    ----------
    CostReport
        The report

    """

    if table is None:
        table = load_energy_table()
    if references is None:
        references = load_references()
    if array is None:
        array = ArrayConfig.for_geometry(SensorGeometry(max(p.width, 1), max(p.height, 1)), n=p.n)

    resources = {m.value: count_resources(m, p) for m in Method}

    energy, latency = dict(), dict()
    for name in table:
        energy[name], latency[name] = energy_latency(name, p, table, array)

    frame_rate = 1.0 / array.latency
    report = CostReport(p, resources, energy, latency, savings_decomposition(p, table), frame_rate,
                        throughput_gops(p.n, frame_rate, p), references)

    logger.debug(f'Cost report for D={p.d}, n={p.n}: total saving {report.savings.total:.0f}x')

    return report
