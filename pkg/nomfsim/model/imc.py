"""
Module imc.py

This module contains the behavioral model of the SRAM array running NOMF in
filter mode. The n x n kernel is a race between the bit-line, discharged by
the cells storing 0, and the bit-line bar, discharged by the cells storing 1:
the line that falls faster writes its value into every cell of the kernel.
Discharge is linear, ΔV(t) = (Σi0 / C_BL - Σi1 / C_BLB) t, with per-cell
current and per-line capacitance mismatch.

"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from nomfsim.exceptions import CalibrationError, ConfigError, GeometryError
from nomfsim.model.filters import check_kernel, kernel_composition, nomf
from nomfsim.model.frame import EbbiFrame
from nomfsim.model.geometry import SensorGeometry

logger = logging.getLogger('nomfsim.imc')

# Capacitance samples are floored at this fraction of the nominal value
_MIN_CAP_FRACTION = 1e-3


@dataclass(frozen=True)
class ArrayConfig:
    """
    Organization and electrical operating point of the bitcell array.

    Attributes
    ----------
    rows : int
        Word-lines (image height)
    cols : int
        Bit-line pairs (image width)
    banks : int
        Column banks, the last one possibly narrower
    bank_cols : int
        Columns per bank, a multiple of n
    n : int
        Kernel side, 3 or 5
    vdd : float
        Supply voltage, volts
    c_bl : float
        Bit-line capacitance, farads
    f_clk : float
        Clock frequency, hertz

    """

    rows: int = 240
    cols: int = 320
    banks: int = 22
    bank_cols: int = 15
    n: int = 3
    vdd: float = 1.2
    c_bl: float = 140e-15
    f_clk: float = 200e6

    def __post_init__(self):
        check_kernel(self.n)
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f'Invalid array size {self.rows}x{self.cols}')
        if self.banks * self.bank_cols < self.cols:
            raise ConfigError(f'{self.banks} banks of {self.bank_cols} columns cannot hold {self.cols} columns')
        if self.bank_cols % self.n != 0:
            raise ConfigError(f'Bank width {self.bank_cols} is not a multiple of the kernel side {self.n}')
        if self.c_bl <= 0 or self.vdd <= 0 or self.f_clk <= 0:
            raise ConfigError('Capacitance, supply and clock must be positive')

    @classmethod
    def for_geometry(cls, geometry: SensorGeometry, **kwargs) -> 'ArrayConfig':
        bank_cols = kwargs.pop('bank_cols', 15)
        banks = kwargs.pop('banks', math.ceil(geometry.width / bank_cols))
        return cls(rows=geometry.height, cols=geometry.width, banks=banks, bank_cols=bank_cols, **kwargs)

    @property
    def bands(self) -> int:
        """Row bands of height n, the last one possibly partial"""
        return math.ceil(self.rows / self.n)

    @property
    def kernel_columns(self) -> int:
        return math.ceil(self.cols / self.n)

    @property
    def cycles(self) -> int:
        """One precharge and one discharge cycle per band"""
        return 2 * self.bands

    @property
    def latency(self) -> float:
        return self.cycles / self.f_clk

    @property
    def frames_per_us(self) -> float:
        return 1e-6 / self.latency

    def bank_widths(self) -> list[int]:
        widths = []
        remaining = self.cols
        while remaining > 0:
            widths.append(min(self.bank_cols, remaining))
            remaining -= self.bank_cols
        return widths

    def kernel_bank_map(self) -> np.ndarray:
        """Bank index of every kernel column"""
        return np.arange(self.kernel_columns) * self.n // self.bank_cols


@dataclass(frozen=True)
class MismatchModel:
    """
    Device variation of the discharge race. The nominal cell current follows
    the overdrive law mu_i = k (vdd - v_t)^exponent while the absolute
    current deviation sigma_i is the same at every supply, so the relative
    mismatch grows as the supply is lowered.

    Attributes
    ----------
    k : float
        Current factor, A / V^exponent
    v_t : float
        Threshold of the overdrive law, volts
    exponent : float
        Overdrive exponent
    sigma_i : float
        Absolute standard deviation of a cell current, amperes
    sigma_c_rel : float
        Relative standard deviation of the BL and BLB capacitances
    seed : int
        Seed of the sampling streams

    """

    k: float = 100e-6
    v_t: float = 0.6
    exponent: float = 2.0
    sigma_i: float = 0.0
    sigma_c_rel: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_i < 0 or self.sigma_c_rel < 0:
            raise ConfigError('Mismatch sigmas must be non-negative')
        if self.k <= 0 or self.exponent <= 0:
            raise ConfigError('Current factor and exponent must be positive')

    def mu_i(self, vdd: float) -> float:
        if vdd <= self.v_t:
            raise ConfigError(f'Supply {vdd} V does not exceed the threshold {self.v_t} V')
        return self.k * (vdd - self.v_t) ** self.exponent

    def sigma_i_rel(self, vdd: float) -> float:
        return self.sigma_i / self.mu_i(vdd)

    @property
    def is_ideal(self) -> bool:
        return self.sigma_i == 0 and self.sigma_c_rel == 0


@dataclass(frozen=True)
class RaceOutcome:
    """
    Decision of one kernel.

    Attributes
    ----------
    decided_bit : int
        Value written into every cell of the kernel
    delta_v_rate : float
        Slope of V_BL - V_BLB in volts per second; negative when the bit-line
        bar falls faster, which decides 1
    margin : int
        |#ones - #zeros|

    """

    decided_bit: int
    delta_v_rate: float
    margin: int


@dataclass(frozen=True)
class FlipStats:
    """
    Outcome of filtering one frame in the array.

    Attributes
    ----------
    flipped_pixels : int
        Cells whose stored value changed
    alpha_measured : float
        flipped_pixels / (rows * cols)
    unintended_flips : int
        Pixels disagreeing with the ideal NOMF output
    cycles : int
        Clock cycles spent
    latency : float
        Seconds
    flips_per_bank : tuple[int, ...]
        Changed cells in each column bank

    """

    flipped_pixels: int
    alpha_measured: float
    unintended_flips: int
    cycles: int
    latency: float
    flips_per_bank: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {'flipped_pixels': self.flipped_pixels,
                'alpha_measured': self.alpha_measured,
                'unintended_flips': self.unintended_flips,
                'cycles': self.cycles,
                'latency': self.latency,
                'flips_per_bank': list(self.flips_per_bank)}


@dataclass(frozen=True)
class MonteCarloResult:
    """
    Repeated races of a single kernel composition.

    Attributes
    ----------
    ones, zeros : int
        Kernel composition
    vdd : float
        Supply voltage
    flips : int
        Trials deciding against the true majority
    trials : int
        Number of races
    bl_current, blb_current : np.ndarray
        Sampled aggregate discharge currents of BL (zeros) and BLB (ones)

    """

    ones: int
    zeros: int
    vdd: float
    flips: int
    trials: int
    bl_current: np.ndarray = field(repr=False)
    blb_current: np.ndarray = field(repr=False)

    @property
    def flip_rate(self) -> float:
        return self.flips / self.trials

    @property
    def margin(self) -> int:
        return abs(self.ones - self.zeros)

    def histogram(self, bins: int = 50) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        This method bins the two current samples on common edges

        Returns
        ----------
        tuple[np.ndarray, np.ndarray, np.ndarray]
            BL counts, BLB counts and the bin edges in amperes

        """

        edges = np.histogram_bin_edges(np.concatenate([self.bl_current, self.blb_current]), bins=bins)
        bl, _ = np.histogram(self.bl_current, bins=edges)
        blb, _ = np.histogram(self.blb_current, bins=edges)
        return bl, blb, edges


@dataclass(frozen=True)
class CalibrationTarget:
    """
    Wanted wrong-decision rate of the kernel composition with the given
    margin at the given supply; kind 'equal' is solved for, 'max' is an
    upper bound checked afterwards.

    """

    vdd: float
    margin: int
    rate: float
    kind: str = 'equal'

    def __post_init__(self):
        if self.kind not in ('equal', 'max'):
            raise ConfigError(f'Unknown calibration target kind {self.kind!r}')
        if not 0 <= self.rate < 0.5:
            raise CalibrationError(f'Flip rate {self.rate} is not in [0, 0.5)')


DEFAULT_TARGETS = (CalibrationTarget(1.0, 1, 0.025, 'equal'), CalibrationTarget(1.2, 1, 0.0005, 'max'))


def composition_for_margin(margin: int, n: int = 3) -> tuple[int, int]:
    """
    This method returns the (ones, zeros) composition of a full n x n kernel
    with the given margin, ones being the minority

    """

    cells = n * n
    if not 1 <= margin <= cells or (cells - margin) % 2 != 0:
        raise ConfigError(f'Margin {margin} is not reachable in a {n}x{n} kernel')
    ones = (cells - margin) // 2
    return ones, cells - ones


def true_majority(ones: int | np.ndarray, zeros: int | np.ndarray):
    """Majority bit, ties resolving to 1"""
    return (np.asarray(ones) >= np.asarray(zeros)).astype(np.uint8)


def _race(bits: np.ndarray, valid: np.ndarray, z: np.ndarray, mm: MismatchModel, vdd: float,
          c_bl: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    This method resolves a batch of kernel races

    Parameters
    ----------
    bits : np.ndarray
        (..., m) stored values of the cells
    valid : np.ndarray
        (..., m) 1 for cells that exist (partial kernels hold fewer)
    z : np.ndarray
        (..., m + 2) standard normal draws: one per cell, then BL and BLB
        capacitance
    mm : MismatchModel
        Device variation
    vdd : float
        Supply voltage
    c_bl : float
        Nominal line capacitance

    Returns
    ----------
    tuple
        decided bits, ΔV slopes, aggregate BL current, aggregate BLB current

    """

    m = bits.shape[-1]
    mu = mm.mu_i(vdd)
    ones = (bits * valid).sum(axis=-1)
    zeros = ((1 - bits) * valid).sum(axis=-1)

    # Deviation from nominal, with currents truncated at 0 A; exactly zero without mismatch
    deviation = (np.maximum(mu + mm.sigma_i * z[..., :m], 0.0) - mu) * valid
    i1 = mu * ones + (deviation * bits).sum(axis=-1)
    i0 = mu * zeros + (deviation * (1 - bits)).sum(axis=-1)

    cap_bl = c_bl * np.maximum(1.0 + mm.sigma_c_rel * z[..., m], _MIN_CAP_FRACTION)
    cap_blb = c_bl * np.maximum(1.0 + mm.sigma_c_rel * z[..., m + 1], _MIN_CAP_FRACTION)

    delta_v_rate = i0 / cap_bl - i1 / cap_blb
    decided = (delta_v_rate <= 0).astype(np.uint8)

    return decided, delta_v_rate, i0, i1


def _composition_cells(ones: int, zeros: int) -> np.ndarray:
    if ones < 0 or zeros < 0 or ones + zeros == 0:
        raise ConfigError(f'Invalid kernel composition ({ones} ones, {zeros} zeros)')
    return np.array([1] * ones + [0] * zeros, dtype=np.uint8)


def kernel_race(ones: int, zeros: int, mm: MismatchModel, cfg: ArrayConfig,
                rng: np.random.Generator) -> RaceOutcome:
    """
    This method samples the cell currents and line capacitances of one
    kernel and decides which line wins.

    Parameters
    ----------
    ones : int
        Cells storing 1, discharging BLB
    zeros : int
        Cells storing 0, discharging BL
    mm : MismatchModel
        Device variation
    cfg : ArrayConfig
        Supply and capacitance
    rng : np.random.Generator
        Random stream

    Returns
    ----------
    RaceOutcome
        The decision

    """

    cells = _composition_cells(ones, zeros)
    z = rng.standard_normal(len(cells) + 2)
    decided, delta, _, _ = _race(cells, np.ones_like(cells), z, mm, cfg.vdd, cfg.c_bl)

    return RaceOutcome(int(decided), float(delta), abs(ones - zeros))


def frame_stream(seed: int, frame_index: int) -> np.random.Generator:
    """Random stream of one frame, independent of the order frames are simulated in"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(frame_index,)))


def filter_frame_imc(frame: EbbiFrame, cfg: ArrayConfig, mm: MismatchModel, seed: int | None = None,
                     frame_index: int = 0) -> tuple[EbbiFrame, FlipStats]:
    """
    This method filters a frame the way the array does: band after band of
    n word-lines, every kernel of the band racing at once. Each kernel owns a
    fixed block of the frame's random draws, addressed by (band, kernel), so
    the outcome only depends on (seed, frame_index, band, kernel).

    Parameters
    ----------
    frame : EbbiFrame
        Frame stored in the array
    cfg : ArrayConfig
        The array, sized as the frame
    mm : MismatchModel
        Device variation
    seed : int, optional
        Seed of the draws, mm.seed by default
    frame_index : int
        Index of the frame in its sequence

    Returns
    ----------
    tuple[EbbiFrame, FlipStats]
        The filtered frame and the flip statistics

    """

    if frame.geometry.shape != (cfg.rows, cfg.cols):
        raise GeometryError(f'Frame {frame.geometry.width}x{frame.geometry.height} does not fit '
                            f'the {cfg.cols}x{cfg.rows} array')

    n = cfg.n
    bands, kcols = cfg.bands, cfg.kernel_columns

    padded = np.zeros((bands * n, kcols * n), dtype=np.uint8)
    padded[:cfg.rows, :cfg.cols] = frame.bits
    valid = np.zeros_like(padded)
    valid[:cfg.rows, :cfg.cols] = 1

    def as_kernels(a: np.ndarray) -> np.ndarray:
        return a.reshape(bands, n, kcols, n).transpose(0, 2, 1, 3).reshape(bands, kcols, n * n)

    rng = frame_stream(mm.seed if seed is None else seed, frame_index)
    z = rng.standard_normal((bands, kcols, n * n + 2))
    decided, _, _, _ = _race(as_kernels(padded), as_kernels(valid), z, mm, cfg.vdd, cfg.c_bl)

    bits = np.repeat(np.repeat(decided, n, axis=0), n, axis=1)[:cfg.rows, :cfg.cols]
    out = frame.with_bits(bits)

    changed = out.bits != frame.bits
    per_column = changed.sum(axis=0)
    bank_edges = np.cumsum([0] + cfg.bank_widths())
    flips_per_bank = tuple(int(per_column[a:b].sum()) for a, b in zip(bank_edges[:-1], bank_edges[1:]))

    flipped = int(np.count_nonzero(changed))
    unintended = int(np.count_nonzero(out.bits != nomf(frame, n).bits))
    stats_ = FlipStats(flipped, flipped / frame.geometry.size, unintended, cfg.cycles, cfg.latency, flips_per_bank)

    if unintended > 0:
        logger.debug(f'Frame {frame_index}: {unintended} pixels differ from ideal NOMF')

    return out, stats_


def filter_frames_imc(frames: Sequence[EbbiFrame], cfg: ArrayConfig, mm: MismatchModel, seed: int | None = None,
                      threads: int = 1) -> list[tuple[EbbiFrame, FlipStats]]:
    """
    This method filters a sequence of frames, in parallel when threads > 1.
    Results do not depend on the number of threads.

    """

    def work(item: tuple[int, EbbiFrame]) -> tuple[EbbiFrame, FlipStats]:
        return filter_frame_imc(item[1], cfg, mm, seed, item[0])

    if threads <= 1:
        return [work(item) for item in enumerate(frames)]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, enumerate(frames)))


def monte_carlo_flip_rate(ones: int, zeros: int, vdd: float, trials: int, mm: MismatchModel, cfg: ArrayConfig,
                          seed: int | None = None) -> MonteCarloResult:
    """
    This method repeats the race of one kernel composition and counts the
    decisions against the true majority.

    Parameters
    ----------
    ones : int
        Cells storing 1
    zeros : int
        Cells storing 0
    vdd : float
        Supply voltage
    trials : int
        Number of races, at least one
    mm : MismatchModel
        Device variation
    cfg : ArrayConfig
        Capacitance of the lines
    seed : int, optional
        Seed of the draws, mm.seed by default

    Returns
    ----------
    MonteCarloResult
        Flip count and the sampled aggregate currents

    """

    if trials < 1:
        raise ConfigError('At least one Monte-Carlo trial is needed')
    mm.mu_i(vdd)

    cells = _composition_cells(ones, zeros)
    key = (ones, zeros, int(round(vdd * 1e6)))
    rng = np.random.default_rng(np.random.SeedSequence(mm.seed if seed is None else seed, spawn_key=key))
    z = rng.standard_normal((trials, len(cells) + 2))

    decided, _, i0, i1 = _race(cells, np.ones_like(cells), z, mm, vdd, cfg.c_bl)
    flips = int(np.count_nonzero(decided != true_majority(ones, zeros)))

    logger.debug(f'{ones} ones / {zeros} zeros at {vdd} V: {flips} flips in {trials} trials')

    return MonteCarloResult(ones, zeros, vdd, flips, trials, i0, i1)


@dataclass(frozen=True)
class SweepRow:
    vdd: float
    margin: int
    trials: int
    flip_rate: float
    result: MonteCarloResult | None = field(default=None, repr=False, compare=False)


def flip_rate_sweep(vdds: Sequence[float], margins: Sequence[int], trials: int, mm: MismatchModel,
                    cfg: ArrayConfig, seed: int | None = None) -> list[SweepRow]:
    """
    This method runs the Monte-Carlo race over the cartesian grid of supplies
    and margins, minority ones in every composition

    """

    rows = []
    for vdd in vdds:
        for margin in margins:
            ones, zeros = composition_for_margin(margin, cfg.n)
            result = monte_carlo_flip_rate(ones, zeros, vdd, trials, mm, cfg, seed)
            rows.append(SweepRow(vdd, margin, trials, result.flip_rate, result))
    return rows


def predict_flip_rate(ones: int, zeros: int, vdd: float, mm: MismatchModel, cfg: ArrayConfig) -> float:
    """
    This method approximates the wrong-decision probability analytically:
    the race slope is a sum of Gaussian currents over perturbed
    capacitances, linearized around the nominal point.

    Returns
    ----------
    float
        Probability that the kernel decides against the true majority

    """

    _composition_cells(ones, zeros)

    mu = mm.mu_i(vdd)
    c = cfg.c_bl
    mean = mu * (zeros - ones) / c
    variance = ((ones + zeros) * mm.sigma_i ** 2 / c ** 2
                + mm.sigma_c_rel ** 2 * ((mu * zeros / c) ** 2 + (mu * ones / c) ** 2))

    if variance == 0:
        return 0.0

    sd = math.sqrt(variance)
    if ones >= zeros:
        # Majority 1 is lost when the slope turns positive
        return float(stats.norm.sf(0.0, loc=mean, scale=sd))
    return float(stats.norm.cdf(0.0, loc=mean, scale=sd))


def calibrate_mismatch(targets: Sequence[CalibrationTarget] = DEFAULT_TARGETS, base: MismatchModel = MismatchModel(),
                       cfg: ArrayConfig = ArrayConfig()) -> MismatchModel:
    """
    This method solves for the absolute current deviation sigma_i meeting the
    'equal' target by bisection over the analytic flip rate, then checks
    every target.

    Parameters
    ----------
    targets : Sequence[CalibrationTarget]
        Wanted rates; at most one non-zero 'equal' target drives the solve
    base : MismatchModel
        Overdrive law, capacitance mismatch and seed to keep
    cfg : ArrayConfig
        Kernel side and line capacitance

    Returns
    ----------
    MismatchModel
        The calibrated model

    """

    def rate(model: MismatchModel, target: CalibrationTarget) -> float:
        ones, zeros = composition_for_margin(target.margin, cfg.n)
        return predict_flip_rate(ones, zeros, target.vdd, model, cfg)

    driving = [t for t in targets if t.kind == 'equal' and t.rate > 0]
    model = replace(base, sigma_i=0.0)

    if driving:
        goal = driving[0]
        if rate(model, goal) > goal.rate:
            raise CalibrationError(f'Capacitance mismatch alone exceeds {goal.rate} at {goal.vdd} V')

        mu = base.mu_i(goal.vdd)
        high = mu
        while rate(replace(base, sigma_i=high), goal) < goal.rate:
            high *= 2
            if high > 1e6 * mu:
                raise CalibrationError(f'Flip rate {goal.rate} is not reachable')

        sigma = optimize.bisect(lambda s: rate(replace(base, sigma_i=s), goal) - goal.rate,
                                0.0, high, xtol=mu * 1e-12)
        model = replace(base, sigma_i=sigma)

    for target in targets:
        achieved = rate(model, target)
        if target.kind == 'equal' and abs(achieved - target.rate) > max(1e-4, 1e-3 * target.rate):
            raise CalibrationError(f'Target {target.rate} at {target.vdd} V, margin {target.margin} '
                                   f'conflicts with the solved model ({achieved:.4g})')
        if target.kind == 'max' and achieved > target.rate:
            raise CalibrationError(f'Flip rate {achieved:.4g} at {target.vdd} V, margin {target.margin} '
                                   f'exceeds the bound {target.rate}')

    logger.info(f'Calibrated sigma_i = {model.sigma_i:.4g} A')

    return model


def expected_unintended_flips(frame: EbbiFrame, cfg: ArrayConfig, mm: MismatchModel) -> tuple[float, float]:
    """
    This method combines the composition histogram of the frame's full
    kernels with the analytic flip rate of each composition

    Returns
    ----------
    tuple[float, float]
        Expected number of wrongly decided kernels in the frame, and the
        probability that a kernel picked at random is decided wrongly

    """

    n = cfg.n
    histogram = kernel_composition(frame, n)
    rates = np.array([predict_flip_rate(k, n * n - k, cfg.vdd, mm, cfg) for k in range(n * n + 1)])
    expected = float(np.dot(histogram, rates))
    total = int(histogram.sum())

    return expected, expected / total if total > 0 else 0.0


def validate_tg_constraint(r_tg: float, cfg: ArrayConfig, mm: MismatchModel,
                           factor: float = 10.0) -> tuple[bool, float]:
    """
    This method checks that the transmission gates linking the kernel's
    lines are fast compared with the discharge: the line time constant
    C_BL VDD / i_s must exceed R_tg C_BL by at least the given factor.

    Returns
    ----------
    tuple[bool, float]
        Whether the criterion holds and the ratio of the two time constants

    """

    if r_tg <= 0:
        raise ConfigError('Transmission-gate resistance must be positive')

    i_s = mm.mu_i(cfg.vdd)
    ratio = cfg.vdd / (i_s * r_tg)

    return ratio >= factor, ratio


def array_from_config(params: dict, **overrides) -> ArrayConfig:
    """Builds the array from the 'array' section of imc.json"""
    return ArrayConfig(**{**params, **overrides})


def mismatch_from_config(params: dict, **overrides) -> MismatchModel:
    """Builds the model from the 'mismatch' section of imc.json"""
    return MismatchModel(**{**params, **overrides})


def targets_from_config(entries: Sequence) -> tuple[CalibrationTarget, ...]:
    try:
        return tuple(CalibrationTarget(float(v), int(m), float(r), str(k)) for v, m, r, k in entries)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'Invalid calibration targets {entries!r}') from e
