"""
test_observables
"""

import math

import numpy as np
import pytest

from lgtcli.action import Configuration, cold_start, hot_start, plaquette_product
from lgtcli.group_algebra import GroupId, re_trace
from lgtcli.lattice_geometry import LatticeShape, PlaquetteIndex, rectangular_loop
from lgtcli.observables import (
	CorrelationEstimate,
	LoopTable,
	Measurement,
	MeasurementSeries,
	check_correlation_separations,
	correlation_pairs,
	creutz_ratio,
	effective_potentials,
	loop_expectation_table,
	loop_measurements,
	loop_trace_average,
	mass_gap_fit,
	perimeter_area_fit,
	plaquette_average,
	plaquette_correlation,
	plaquette_correlation_measurements,
	static_potential,
	string_tension_fit,
	wilson_loop,
)
from lgtcli.oracle import TinyObservable, TinyQuantity, exact_tiny_lattice, single_plaquette_expectation, two_dim_exact_loop
from lgtcli.rng import RandomStream
from lgtcli.sampler import SamplerParams, SweepInfo, run_chain
from lgtcli.stats import default_bin_size
from lgtcli.types import UndefinedRatioError, UsageError
from lgtcli.utils import format_label

SIGMA = 0.3
PERIMETER = 0.1
AREA_OFFSET = -0.05


def area_law_table(r_max: int = 4, t_max: int = 5, group_order: int = 2) -> LoopTable:
	values = {
		(r, t): math.exp(AREA_OFFSET - PERIMETER * (r + t) - SIGMA * r * t) for r in range(1, r_max + 1) for t in range(1, t_max + 1)
	}
	return LoopTable.from_values(values, group_order=group_order)


@pytest.mark.parametrize("group", tuple(GroupId))
def test_cold_configuration(group: GroupId) -> None:
	shape = LatticeShape.hypercube(3, 3)
	cfg = cold_start(shape, group)
	assert plaquette_average(cfg) == pytest.approx(1.0)
	assert loop_trace_average(cfg, 2, 2) == pytest.approx(group.matrix_order)
	assert wilson_loop(cfg, rectangular_loop(shape, (0, 0, 0), (0, 2), 2, 1)) == pytest.approx(group.matrix_order)


@pytest.mark.parametrize("group", tuple(GroupId))
def test_unit_loop_is_plaquette_trace(group: GroupId) -> None:
	shape = LatticeShape.hypercube(3, 3)
	cfg, _ = hot_start(shape, group, RandomStream.from_seed(5))
	for site, plane in (((0, 0, 0), (0, 1)), ((2, 1, 0), (1, 2)), ((1, 2, 2), (0, 2))):
		loop = rectangular_loop(shape, site, plane, 1, 1)
		assert wilson_loop(cfg, loop) == pytest.approx(re_trace(plaquette_product(cfg, PlaquetteIndex(site, plane))), abs=1e-12)


def test_unit_loop_table_entry_matches_plaquette_average() -> None:
	shape = LatticeShape.hypercube(3, 3)
	stream = RandomStream.from_seed(6)
	series = {
		"wilson_loop[R=1,T=1]": MeasurementSeries(name="wilson_loop", labels={"R": 1, "T": 1}),
		"plaquette": MeasurementSeries(name="plaquette"),
	}
	for sweep in range(4):
		cfg, stream = hot_start(shape, GroupId.SU2, stream)
		series["wilson_loop[R=1,T=1]"].append(sweep, loop_trace_average(cfg, 1, 1).real)
		series["plaquette"].append(sweep, plaquette_average(cfg))
	table = loop_expectation_table(series, 1, 1, group_order=2)
	assert table.means[(1, 1)] == pytest.approx(2 * np.mean(series["plaquette"].values), abs=1e-12)
	assert table.normalized(1, 1)[0] == pytest.approx(np.mean(series["plaquette"].values), abs=1e-12)


def test_plaquette_average_range() -> None:
	cfg, _ = hot_start(LatticeShape.hypercube(2, 4), GroupId.SU3, RandomStream.from_seed(1))
	assert -0.5 <= plaquette_average(cfg) <= 1.0


def test_loop_measurements() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 4), GroupId.U1)
	measurements = loop_measurements(cfg, 2, 3)
	assert len(measurements) == 12
	keys = [format_label(m.name, m.labels) for m in measurements]
	assert keys[:2] == ["wilson_loop[R=1,T=1]", "wilson_loop_imag[R=1,T=1]"]
	assert "wilson_loop[R=2,T=3]" in keys
	assert all(m.value == pytest.approx(1.0) for m in measurements if m.name == "wilson_loop")  # U(1) has N = 1
	assert all(m.value == pytest.approx(0.0) for m in measurements if m.name == "wilson_loop_imag")


def test_loop_size_checked() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 3), GroupId.Z2)
	with pytest.raises(UsageError):
		loop_trace_average(cfg, 3, 1)


@pytest.mark.parametrize(
	"boundary, separation, expected",
	(
		("periodic", 0, 16),
		("periodic", 2, 16),
		("open", 0, 9),
		("open", 1, 6),
	),
)
def test_correlation_pairs(boundary: str, separation: int, expected: int) -> None:
	first, second = correlation_pairs(LatticeShape.hypercube(2, 4, boundary), separation, 1)
	assert len(first) == len(second) == expected
	if separation == 0:
		assert np.array_equal(first, second)


@pytest.mark.parametrize(
	"boundary, separations, valid",
	(
		("periodic", (0, 1, 2), True),
		("periodic", (3,), False),
		("open", (0, 1, 2), True),
		("open", (3,), False),
		("periodic", (-1,), False),
	),
)
def test_check_correlation_separations(boundary: str, separations: tuple[int, ...], valid: bool) -> None:
	shape = LatticeShape.hypercube(2, 4, boundary)
	if valid:
		assert check_correlation_separations(shape, separations) == 1
	else:
		with pytest.raises(UsageError):
			check_correlation_separations(shape, separations)


def test_invalid_correlation_axis() -> None:
	with pytest.raises(UsageError, match="axis"):
		check_correlation_separations(LatticeShape.hypercube(2, 4), [1], axis=2)


def test_plaquette_correlation_measurements_of_cold_lattice() -> None:
	cfg = cold_start(LatticeShape.hypercube(3, 4), GroupId.SU2)
	measurements = plaquette_correlation_measurements(cfg, [0, 1, 2])
	assert [m.labels for m in measurements] == [{"x": 0}, {"x": 1}, {"x": 2}]
	assert all(m.value == pytest.approx(1.0) for m in measurements)


def test_measurement_series_order() -> None:
	series = MeasurementSeries(name="plaquette")
	series.append(3, 0.5)
	with pytest.raises(UsageError):
		series.append(3, 0.6)
	series.append(5, 0.7)
	assert series.tail(1).values == [0.7]
	assert len(series) == 2


def test_loop_expectation_table() -> None:
	generator = np.random.default_rng(2)
	series = {}
	for r in (1, 2):
		for t in (1, 2):
			key = format_label("wilson_loop", {"R": r, "T": t})
			series[key] = MeasurementSeries(name="wilson_loop", labels={"R": r, "T": t}, values=list(0.5 + 0.01 * generator.standard_normal(40)))
	table = loop_expectation_table(series, 2, 2, bin_size=4)
	assert table.entries == [(1, 1), (1, 2), (2, 1), (2, 2)]
	assert len(table.replicates[(2, 2)]) == 10
	assert table.means[(1, 1)] == pytest.approx(np.mean(series["wilson_loop[R=1,T=1]"].values))
	with pytest.raises(UsageError, match="No measurements"):
		loop_expectation_table(series, 3, 2)


@pytest.mark.parametrize("r, t", ((2, 2), (3, 4), (4, 5)))
def test_creutz_ratio_of_area_law(r: int, t: int) -> None:
	chi, error = creutz_ratio(area_law_table(), r, t)
	assert chi == pytest.approx(SIGMA)
	assert error == 0.0


def test_creutz_ratio_errors() -> None:
	with pytest.raises(UsageError):
		creutz_ratio(area_law_table(), 1, 2)
	with pytest.raises(UsageError, match="lacks"):
		creutz_ratio(area_law_table(), 5, 2)
	table = area_law_table()
	table.means[(2, 2)] = -0.01
	with pytest.raises(UndefinedRatioError):
		creutz_ratio(table, 2, 2)


def test_creutz_ratio_nonpositive_replicate() -> None:
	table = area_law_table(2, 2)
	for key, value in table.means.items():
		table.replicates[key] = np.array([value, value, value])
	table.replicates[(2, 2)] = np.array([table.means[(2, 2)], -0.1, table.means[(2, 2)]])
	chi, error = creutz_ratio(table, 2, 2)
	assert chi == pytest.approx(SIGMA)
	assert math.isnan(error)


@pytest.mark.parametrize("r", (1, 2, 3))
def test_static_potential_of_area_law(r: int) -> None:
	fit = static_potential(area_law_table(), r)
	assert fit.ok
	assert fit.parameters["V"] == pytest.approx(PERIMETER + SIGMA * r)
	assert fit.window["T"] == [2, 3, 4, 5]
	effective = effective_potentials(area_law_table(), r)
	assert [entry["T"] for entry in effective] == [1, 2, 3, 4]


def test_static_potential_with_window() -> None:
	fit = static_potential(area_law_table(), 2, window=(1, 2))
	assert fit.window["T"] == [1, 2]
	assert fit.parameters["V"] == pytest.approx(PERIMETER + 2 * SIGMA)


def test_static_potential_without_plateau() -> None:
	values = {(1, t): math.exp(-0.2 * t * t) for t in range(1, 6)}
	fit = static_potential(LoopTable.from_values(values), 1)
	assert not fit.ok
	assert "plateau" in (fit.diagnostic or "")


def test_static_potential_needs_three_values() -> None:
	with pytest.raises(UsageError):
		static_potential(area_law_table(2, 2), 1)


def test_string_tension_fit() -> None:
	table = area_law_table()
	potentials = {r: static_potential(table, r) for r in (1, 2, 3, 4)}
	fit = string_tension_fit(potentials)
	assert fit.parameters["sigma"] == pytest.approx(SIGMA)
	assert fit.parameters["V0"] == pytest.approx(PERIMETER)
	assert not string_tension_fit({1: potentials[1]}).ok


def test_perimeter_area_fit() -> None:
	fit = perimeter_area_fit(area_law_table())
	assert fit.ok
	assert fit.parameters["a"] == pytest.approx(AREA_OFFSET)
	assert fit.parameters["c"] == pytest.approx(PERIMETER)
	assert fit.parameters["d"] == pytest.approx(SIGMA)
	assert fit.details["max_residual"] == pytest.approx(0.0, abs=1e-10)


def test_perimeter_area_fit_of_cold_lattice() -> None:
	values = {(r, t): 3.0 for r in (1, 2, 3) for t in (1, 2, 3)}
	fit = perimeter_area_fit(LoopTable.from_values(values, group_order=3))
	assert fit.parameters["a"] == pytest.approx(math.log(3))
	assert fit.parameters["c"] == pytest.approx(0.0, abs=1e-10)
	assert fit.parameters["d"] == pytest.approx(0.0, abs=1e-10)


def test_perimeter_area_fit_rejects_small_tables() -> None:
	with pytest.raises(UsageError, match="at least 6"):
		perimeter_area_fit(area_law_table(2, 2))
	values = {(1, t): math.exp(-t) for t in range(1, 8)}
	with pytest.raises(UsageError, match="rank"):
		perimeter_area_fit(LoopTable.from_values(values))


def test_plaquette_correlation_of_constant_series() -> None:
	def constant(name: str, value: float, labels: dict | None = None) -> MeasurementSeries:
		return MeasurementSeries(name=name, values=[value] * 10, labels=labels or {})

	series = {
		"plaquette": constant("plaquette", 0.5),
		"plaquette_product[x=0]": constant("plaquette_product", 0.3, {"x": 0}),
		"plaquette_product[x=1]": constant("plaquette_product", 0.26, {"x": 1}),
	}
	estimate = plaquette_correlation(series, [0, 1])
	assert estimate.values.tolist() == pytest.approx([0.05, 0.01])
	assert estimate.errors.tolist() == pytest.approx([0.0, 0.0])
	assert estimate.as_records()[1] == {"x": 1, "f": pytest.approx(0.01), "error": 0.0}
	with pytest.raises(UsageError):
		plaquette_correlation(series, [2])


def test_mass_gap_of_exponential() -> None:
	xi = 1.7
	separations = list(range(6))
	values = np.array([0.4 * math.exp(-x / xi) for x in separations])
	fit = mass_gap_fit(CorrelationEstimate(separations=separations, values=values, errors=np.zeros(6)))
	assert fit.ok
	assert fit.parameters["xi"] == pytest.approx(xi)
	assert fit.parameters["mass"] == pytest.approx(1 / xi)
	assert fit.window["x"] == [2, 3, 4, 5]


def test_mass_gap_drops_noisy_points() -> None:
	separations = [0, 1, 2, 3, 4]
	values = np.array([1.0, 0.5, 0.25, 0.125, 0.01])
	errors = np.full(5, 0.01)
	fit = mass_gap_fit(CorrelationEstimate(separations=separations, values=values, errors=errors))
	assert fit.ok
	assert fit.window["x"] == [1, 2, 3]
	assert fit.parameters["xi"] == pytest.approx(1 / math.log(2))
	narrow = mass_gap_fit(CorrelationEstimate(separations=separations, values=values, errors=errors), window=(2, 4))
	assert not narrow.ok
	assert narrow.window["x"] == [2, 3]


def test_mass_gap_of_growing_correlation() -> None:
	separations = [0, 1, 2, 3]
	fit = mass_gap_fit(CorrelationEstimate(separations=separations, values=np.array([1.0, 1.0, 2.0, 4.0]), errors=np.zeros(4)))
	assert not fit.ok
	assert "decay" in (fit.diagnostic or "")


def loop_chain(shape: LatticeShape, group: GroupId, beta: float, sweeps: int, loop_size: int, seed: int) -> LoopTable:
	def hook(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
		return loop_measurements(cfg, loop_size, loop_size)

	result = run_chain(cold_start(shape, group), SamplerParams(beta=beta, algorithm="heatbath", seed=seed), sweeps, hook, measure_from=200)
	bin_size = default_bin_size(result.series[format_label("wilson_loop", {"R": 1, "T": 1})])
	return loop_expectation_table(result.series, loop_size, loop_size, bin_size=bin_size, group_order=group.matrix_order)


def correlation_chain(shape: LatticeShape, beta: float, separations: list[int], sweeps: int, seed: int) -> CorrelationEstimate:
	def hook(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
		return [Measurement("plaquette", plaquette_average(cfg)), *plaquette_correlation_measurements(cfg, separations)]

	params = SamplerParams(beta=beta, algorithm="heatbath", seed=seed)
	result = run_chain(cold_start(shape, GroupId.Z2), params, sweeps, hook, measure_from=200)
	return plaquette_correlation(result.series, separations, bin_size=default_bin_size(result.series["plaquette"]))


def test_z2_correlation_matches_enumeration() -> None:
	shape = LatticeShape.hypercube(2, 3)
	beta = 0.5
	estimate = correlation_chain(shape, beta, [0, 1], 6000, seed=21)
	for index, separation in enumerate(estimate.separations):
		exact = exact_tiny_lattice(shape, beta, TinyObservable(quantity=TinyQuantity.CORRELATION, separation=separation))
		assert estimate.errors[index] > 0
		assert abs(estimate.values[index] - exact) < 3 * estimate.errors[index]


@pytest.mark.slow
def test_two_dim_area_law() -> None:
	beta = 2.0
	table = loop_chain(LatticeShape.hypercube(2, 16, "open"), GroupId.U1, beta, 3000, 3, seed=22)
	for r, t in table.entries:
		mean, error = table.normalized(r, t)
		assert error > 0
		assert abs(mean - two_dim_exact_loop(GroupId.U1, beta, r, t)) < 3 * error
	fit = perimeter_area_fit(table)
	assert abs(fit.parameters["c"]) < 3 * fit.errors["c"]
	assert abs(fit.parameters["d"] + math.log(single_plaquette_expectation(GroupId.U1, beta))) < 3 * fit.errors["d"]


@pytest.mark.slow
def test_strong_coupling_creutz_ratio() -> None:
	beta = 0.5
	tension = -math.log(single_plaquette_expectation(GroupId.SU2, beta))
	table = loop_chain(LatticeShape.hypercube(4, 6), GroupId.SU2, beta, 2500, 3, seed=23)
	chi, _error = creutz_ratio(table, 2, 2)
	assert chi == pytest.approx(tension, rel=0.1)
	# larger loops are below the noise at this coupling
	fit = perimeter_area_fit(table, [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)])
	assert fit.parameters["d"] == pytest.approx(tension, rel=0.1)


@pytest.mark.slow
def test_measured_correlation_decays() -> None:
	# confined three dimensional Z2 close to the transition, the correlation stays above the noise up to x = 3
	estimate = correlation_chain(LatticeShape.hypercube(3, 8), 0.7, [1, 2, 3], 4000, seed=24)
	values, errors = estimate.values, estimate.errors
	assert np.all(values > 2 * errors)
	for index in range(len(values) - 1):
		assert values[index + 1] < values[index] + 2 * math.hypot(errors[index], errors[index + 1])
	fit = mass_gap_fit(estimate)
	assert fit.ok
	assert math.isfinite(fit.parameters["xi"]) and fit.parameters["xi"] > 0
