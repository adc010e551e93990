import json

import pytest

from nomfsim.exceptions import ConfigError, CostError
from nomfsim.model import cost
from nomfsim.model.cost import CostParams, Method, ResourceCount
from nomfsim.model.imc import ArrayConfig


@pytest.fixture(scope='module')
def table():
    return cost.load_energy_table()


def test_nomf_imc_counts_at_the_default_point():
    assert cost.count_resources(Method.NOMF_IMC, CostParams()) == ResourceCount(25600, 2765, 0, 76800)


def test_median_and_nomf_counts():
    p = CostParams()

    assert cost.count_resources('median', p) == ResourceCount(691200, 76800, 691200, 153600)
    assert cost.count_resources('nomf', p) == ResourceCount(76800, 76800, 76800, 76800)


def test_nn_filt_counts():
    assert cost.count_resources('nn_filt', CostParams()) == ResourceCount(1658880, 184320, 103680, 1228800)


def test_empty_frame_costs_nothing():
    p = CostParams(width=0, height=0)

    for method in Method:
        assert cost.count_resources(method, p) == ResourceCount(0, 0, 0, 0)


@pytest.mark.parametrize('method', list(Method))
def test_counts_scale_linearly_with_the_frame(method):
    small = CostParams(width=90, height=60)
    large = CostParams(width=180, height=120)

    exact_small = cost.resource_formula(method, small)
    exact_large = cost.resource_formula(method, large)

    assert all(b == 4 * a for a, b in zip(exact_small, exact_large))


@pytest.mark.parametrize('n', [3, 5])
def test_read_ratios_between_methods(n):
    p = CostParams(width=300, height=150, n=n)

    median = cost.resource_formula(Method.MEDIAN, p)[0]
    nomf = cost.resource_formula(Method.NOMF, p)[0]
    imc = cost.resource_formula(Method.NOMF_IMC, p)[0]

    assert nomf == median / (n * n)
    assert imc == nomf / n


def test_params_validation():
    with pytest.raises(ConfigError):
        CostParams(n=4)
    with pytest.raises(ConfigError):
        CostParams(gamma=1.5)
    with pytest.raises(ConfigError):
        CostParams(width=-1)
    with pytest.raises(ConfigError):
        Method.from_name('mean')


def test_energy_per_frame(table):
    p = CostParams()

    median_energy, median_latency = cost.energy_latency('median', p, table)
    imc_energy, _ = cost.energy_latency(Method.NOMF_IMC, p, table)

    assert median_energy == pytest.approx(1.75104e-5)
    assert median_latency == pytest.approx(95e-9 * 76800)
    assert imc_energy == pytest.approx(8.448e-9)


def test_in_memory_latency_comes_from_the_array(table):
    _, latency = cost.energy_latency('nomf_imc', CostParams(), table, ArrayConfig())

    assert latency == pytest.approx(0.8e-6)


def test_missing_entry_is_an_error(table):
    with pytest.raises(CostError):
        cost.energy_latency('nomf', CostParams(), table)


def test_savings_decomposition(table):
    savings = cost.savings_decomposition(CostParams(), table)

    assert savings.total == pytest.approx(2072.7, rel=1e-4)
    assert savings.approx == 9
    assert savings.imc == pytest.approx(230.3, rel=1e-3)
    assert savings.approx * savings.imc == pytest.approx(savings.total)


def test_savings_need_non_zero_entries(table):
    broken = dict(table, nomf_imc=cost.EnergyLatencyEntry('nomf_imc'))

    with pytest.raises(CostError):
        cost.savings_decomposition(CostParams(), broken)
    with pytest.raises(CostError):
        cost.savings_decomposition(CostParams(), {'median': table['median']})


def test_throughput():
    assert cost.throughput_gops(3, 1.25e6, CostParams()) == pytest.approx(85.33, rel=1e-3)
    assert cost.throughput_gops(5, 1 / 0.48e-6, CostParams(n=5)) == pytest.approx(153.6, rel=1e-3)
    assert cost.throughput_gops(3, 0.0, CostParams()) == 0
    with pytest.raises(ConfigError):
        cost.throughput_gops(3, -1.0, CostParams())


def test_cycle_and_precharge_counts():
    assert cost.median_cycles_per_pixel(3) == 19
    assert cost.precharges_per_column('nomf_imc', 3) == 80
    assert cost.precharges_per_column('median', 3) == 240
    assert cost.precharges_per_column(Method.NOMF_IMC, 5) == 48


def test_energy_table_from_rows():
    table = cost.energy_table_from_rows({'median': {'energy_per_bit': 1.0}})

    assert table['median'].energy_per_bit == 1.0
    with pytest.raises(CostError):
        cost.energy_table_from_rows({'median': {'joules': 1.0}})
    with pytest.raises(CostError):
        cost.EnergyLatencyEntry('median', energy_per_bit=-1.0)


def test_report(table):
    report = cost.build_cost_report(CostParams(), table)

    assert report.frame_rate == pytest.approx(1.25e6)
    assert report.throughput_gops == pytest.approx(85.33, rel=1e-3)
    assert report.resources['nomf_imc'] == ResourceCount(25600, 2765, 0, 76800)
    assert set(report.energy_per_frame) == set(table)
    assert len(report.references) == 4

    content = json.loads(report.to_json())
    assert set(content) == {'params', 'resources', 'energy_per_frame', 'latency_per_frame', 'ratios',
                            'frame_rate', 'throughput_gops', 'references'}
    assert content['resources']['median']['reads'] == 691200

    text = report.to_table()
    assert '25600' in text and '2765' in text
    assert text.endswith('\n')


def test_five_by_five_report_uses_the_shorter_sweep(table):
    report = cost.build_cost_report(CostParams(n=5), table)

    assert report.latency_per_frame['nomf_imc'] == pytest.approx(0.48e-6)
    assert report.throughput_gops == pytest.approx(153.6, rel=1e-3)
