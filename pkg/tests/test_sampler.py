"""
test_sampler
"""

import math
from dataclasses import replace
from typing import Any

import numpy as np
import pytest
from scipy import special

from lgtcli.action import Configuration, cold_start, hot_start, wilson_action
from lgtcli.group_algebra import GroupId, group_defect
from lgtcli.lattice_geometry import LatticeShape
from lgtcli.observables import Measurement, plaquette_average
from lgtcli.oracle import single_plaquette_expectation
from lgtcli.rng import DrawTable, RandomStream
from lgtcli.sampler import (
	SPREAD_MAXIMUM,
	SPREAD_MINIMUM,
	Algorithm,
	SamplerParams,
	SweepInfo,
	heatbath_link,
	heatbath_sweep,
	metropolis_sweep,
	overrelax_sweep,
	run_chain,
	su2_a0,
	su3_subgroup_sweep,
	sweep,
	tuned_spread,
	von_mises,
)
from lgtcli.stats import default_bin_size, integrated_autocorrelation_time, jackknife_mean_error
from lgtcli.types import UnsupportedAlgorithmError, UsageError

SAMPLE_COUNT = 20_000


def plaquette_hook(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
	return [Measurement(name="plaquette", value=plaquette_average(cfg))]


def hot(shape: LatticeShape, group: GroupId, seed: int = 3) -> Configuration:
	cfg, _ = hot_start(shape, group, RandomStream.from_seed(seed))
	return cfg


def mean_with_error(values: list[float] | np.ndarray) -> tuple[float, float]:
	return jackknife_mean_error(values, default_bin_size(values))


def chain_plaquettes(
	shape: LatticeShape,
	group: GroupId,
	algorithm: str,
	beta: float,
	seed: int,
	sweeps: int = 1500,
	thermalization: int = 200,
	**kwargs: Any,
) -> np.ndarray:
	cfg = cold_start(shape, group)
	params = SamplerParams(beta=beta, algorithm=algorithm, seed=seed, **kwargs)
	result = run_chain(cfg, params, sweeps, plaquette_hook, measure_from=thermalization, tune_until=thermalization)
	return np.array(result.series["plaquette"].values)


@pytest.mark.parametrize(
	"value, expected",
	(
		("metropolis", Algorithm.METROPOLIS),
		("HeatBath", Algorithm.HEATBATH),
		("overrelax-mix", Algorithm.OVERRELAX_MIX),
	),
)
def test_algorithm_parse(value: str, expected: Algorithm) -> None:
	assert Algorithm.parse(value) is expected


def test_algorithm_parse_unknown() -> None:
	with pytest.raises(UsageError, match="Unknown algorithm"):
		Algorithm.parse("hybrid")


@pytest.mark.parametrize(
	"kwargs",
	(
		{"beta": -1.0},
		{"beta": float("nan")},
		{"beta": 1.0, "proposal_spread": 0.0},
		{"beta": 1.0, "proposal_spread": 3.0},
		{"beta": 1.0, "or_ratio": -1},
		{"beta": 1.0, "workers": 0},
	),
)
def test_sampler_params_validation(kwargs: dict) -> None:
	with pytest.raises(UsageError):
		SamplerParams(**kwargs)


@pytest.mark.parametrize("group", (GroupId.Z2, GroupId.SU3))
def test_overrelaxation_unsupported(group: GroupId) -> None:
	params = SamplerParams(beta=1.0, algorithm="overrelax_mix", or_ratio=2)
	with pytest.raises(UnsupportedAlgorithmError):
		params.check_group(group)
	with pytest.raises(UnsupportedAlgorithmError):
		run_chain(cold_start(LatticeShape.hypercube(2, 2), group), params, 1)
	# Without overrelaxation steps the mix is a plain heat bath
	SamplerParams(beta=1.0, algorithm="overrelax_mix", or_ratio=0).check_group(group)


@pytest.mark.parametrize("group", tuple(GroupId))
@pytest.mark.parametrize("algorithm", ("metropolis", "heatbath"))
def test_sweeps_are_reproducible(group: GroupId, algorithm: str) -> None:
	shape = LatticeShape.hypercube(3, 3)
	results = []
	for workers in (1, 1, 4):
		cfg = hot(shape, group)
		params = SamplerParams(beta=1.5, algorithm=algorithm, seed=11, workers=workers)
		run_chain(cfg, params, 3)
		results.append(cfg.links)
	assert np.array_equal(results[0], results[1])
	assert np.array_equal(results[0], results[2])


@pytest.mark.parametrize("group", tuple(GroupId))
@pytest.mark.parametrize("algorithm", ("metropolis", "heatbath"))
def test_sweeps_stay_in_group(group: GroupId, algorithm: str) -> None:
	cfg = hot(LatticeShape.hypercube(3, 3), group)
	params = SamplerParams(beta=2.0, algorithm=algorithm, seed=5)
	before = cfg.links.copy()
	run_chain(cfg, params, 2)
	assert group_defect(group, cfg.links) < 1e-10
	assert not np.array_equal(before, cfg.links)


def test_su3_subgroup_sweep_requires_su3() -> None:
	with pytest.raises(UsageError):
		su3_subgroup_sweep(cold_start(LatticeShape.hypercube(2, 2), GroupId.SU2), SamplerParams(beta=1.0), 0)
	cfg = cold_start(LatticeShape.hypercube(2, 3), GroupId.SU3)
	su3_subgroup_sweep(cfg, SamplerParams(beta=4.0, seed=2), 0)
	assert group_defect(GroupId.SU3, cfg.links) < 1e-10


@pytest.mark.parametrize("group", (GroupId.U1, GroupId.SU2))
def test_overrelaxation_keeps_action(group: GroupId) -> None:
	cfg = hot(LatticeShape.hypercube(2, 4), group)
	heatbath_sweep(cfg, SamplerParams(beta=2.0, seed=1), 0)
	before = cfg.links.copy()
	action = float(wilson_action(cfg))
	params = SamplerParams(beta=2.0, algorithm="overrelax_mix", or_ratio=1)
	overrelax_sweep(cfg, params, 4)
	assert float(wilson_action(cfg)) == pytest.approx(action, abs=1e-9)
	assert not np.allclose(before, cfg.links)
	overrelax_sweep(cfg, params, 5)
	assert np.allclose(before, cfg.links, atol=1e-10)


def test_overrelax_sweep_rejects_z2() -> None:
	with pytest.raises(UnsupportedAlgorithmError):
		overrelax_sweep(cold_start(LatticeShape.hypercube(2, 2), GroupId.Z2), SamplerParams(beta=1.0), 0)


@pytest.mark.parametrize("alpha", (1.0, 5.0))
def test_su2_a0_distribution(alpha: float) -> None:
	draws = DrawTable(RandomStream.from_seed(21, int(alpha)), rows=SAMPLE_COUNT)
	x0 = su2_a0(np.full(SAMPLE_COUNT, alpha), draws, np.arange(SAMPLE_COUNT))
	assert np.all(np.abs(x0) <= 1)
	assert x0.mean() == pytest.approx(special.iv(2, alpha) / special.iv(1, alpha), abs=0.02)


@pytest.mark.parametrize("kappa", (0.5, 3.0))
def test_von_mises_distribution(kappa: float) -> None:
	draws = DrawTable(RandomStream.from_seed(22, int(kappa * 10)), rows=SAMPLE_COUNT)
	theta = von_mises(np.zeros(SAMPLE_COUNT), np.full(SAMPLE_COUNT, kappa), draws, np.arange(SAMPLE_COUNT))
	assert np.cos(theta).mean() == pytest.approx(special.iv(1, kappa) / special.iv(0, kappa), abs=0.02)
	assert np.sin(theta).mean() == pytest.approx(0.0, abs=0.02)


def test_heatbath_link_changes_single_link() -> None:
	cfg = hot(LatticeShape.hypercube(2, 3), GroupId.SU2)
	before = cfg.links.copy()
	heatbath_link(cfg, SamplerParams(beta=1.0), 4, RandomStream.from_seed(8))
	changed = np.nonzero(np.any(before != cfg.links, axis=(1, 2)))[0]
	assert changed.tolist() == [4]


@pytest.mark.parametrize(
	"algorithm, sweeps",
	(
		("heatbath", 2000),
		("metropolis", 4000),
	),
)
def test_z2_open_plaquette(algorithm: str, sweeps: int) -> None:
	beta = 0.5
	cfg = cold_start(LatticeShape.hypercube(2, 3, "open"), GroupId.Z2)
	result = run_chain(cfg, SamplerParams(beta=beta, algorithm=algorithm, seed=4), sweeps, plaquette_hook, measure_from=100)
	mean, error = mean_with_error(result.series["plaquette"].values)
	assert 0 < error < 0.03
	assert abs(mean - np.tanh(beta)) < 3 * error


def test_run_chain_cadence() -> None:
	seen: list[int] = []

	def hook(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
		seen.append(info.sweep_index)
		return [Measurement(name="plaquette", value=1.0)]

	progress: list[tuple[int, int]] = []
	cfg = cold_start(LatticeShape.hypercube(2, 2), GroupId.Z2)
	result = run_chain(
		cfg, SamplerParams(beta=1.0), 14, hook, cadence=3, measure_from=5, progress_callback=lambda done, total: progress.append((done, total))
	)
	assert seen == [7, 10, 13]
	assert result.series["plaquette"].sweep_indices == [7, 10, 13]
	assert result.sweeps_done == 14
	assert progress[-1] == (14, 14)


def test_run_chain_arguments() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 2), GroupId.Z2)
	with pytest.raises(UsageError):
		run_chain(cfg, SamplerParams(beta=1.0), -1)
	with pytest.raises(UsageError):
		run_chain(cfg, SamplerParams(beta=1.0), 1, cadence=0)


@pytest.mark.parametrize("algorithm", ("metropolis", "heatbath"))
def test_split_run_matches_single_run(algorithm: str) -> None:
	shape = LatticeShape.hypercube(2, 4)
	params = SamplerParams(beta=2.0, algorithm=algorithm, seed=9)
	whole = hot(shape, GroupId.SU2)
	whole_result = run_chain(whole, params, 10, plaquette_hook, tune_until=10)

	split = hot(shape, GroupId.SU2)
	first = run_chain(split, params, 4, plaquette_hook, tune_until=10)
	assert first.params is not None
	second = run_chain(split, first.params, 6, plaquette_hook, start_sweep=4, tune_until=10)

	assert np.array_equal(whole.links, split.links)
	assert whole_result.params == second.params
	assert whole_result.series["plaquette"].values == first.series["plaquette"].values + second.series["plaquette"].values


@pytest.mark.parametrize(
	"spread, acceptance, expected",
	(
		(0.5, 0.5, 0.5),
		(0.5, 1.0, 0.5 * np.exp(0.1)),
		(0.5, 0.0, 0.5 * np.exp(-0.1)),
		(SPREAD_MAXIMUM, 1.0, SPREAD_MAXIMUM),
		(SPREAD_MINIMUM, 0.0, SPREAD_MINIMUM),
	),
)
def test_tuned_spread(spread: float, acceptance: float, expected: float) -> None:
	assert tuned_spread(spread, acceptance) == pytest.approx(expected)


def test_metropolis_tuning_moves_spread() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 4), GroupId.SU2)
	params = SamplerParams(beta=8.0, algorithm="metropolis", proposal_spread=1.5, seed=1)
	result = run_chain(cfg, params, 20, tune_until=20)
	assert result.params is not None
	assert result.params.proposal_spread < 1.5
	untuned = run_chain(cfg, replace(params, seed=2), 5)
	assert untuned.params == replace(params, seed=2)


def test_metropolis_acceptance_range() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 3), GroupId.U1)
	acceptance = metropolis_sweep(cfg, SamplerParams(beta=1.0, algorithm="metropolis", proposal_spread=0.2), 0)
	assert 0.0 < acceptance <= 1.0


@pytest.mark.slow
@pytest.mark.parametrize("group", (GroupId.U1, GroupId.SU2))
def test_two_dim_open_plaquette_matches_single_plaquette(group: GroupId) -> None:
	beta = 1.5
	cfg = cold_start(LatticeShape.hypercube(2, 4, "open"), group)
	result = run_chain(cfg, SamplerParams(beta=beta, seed=12), 3000, plaquette_hook, measure_from=200)
	values = np.array(result.series["plaquette"].values)
	assert values.mean() == pytest.approx(single_plaquette_expectation(group, beta), abs=0.02)


@pytest.mark.parametrize("group", tuple(GroupId))
def test_zero_coupling_metropolis_accepts_every_proposal(group: GroupId) -> None:
	cfg = hot(LatticeShape.hypercube(2, 3), group)
	params = SamplerParams(beta=0.0, algorithm="metropolis", proposal_spread=0.5, seed=6)
	assert [metropolis_sweep(cfg, params, index) for index in range(3)] == [1.0, 1.0, 1.0]


@pytest.mark.parametrize("group", tuple(GroupId))
@pytest.mark.parametrize("algorithm", ("metropolis", "heatbath"))
def test_zero_coupling_reproduces_haar_moments(group: GroupId, algorithm: str) -> None:
	# Haar measure: <Tr U> = 0 and <|Tr U|^2> = 1 for every group here
	cfg = cold_start(LatticeShape.hypercube(2, 3), group)
	spread = 0.5 if group is GroupId.Z2 else SPREAD_MAXIMUM
	params = SamplerParams(beta=0.0, algorithm=algorithm, proposal_spread=spread, seed=13)
	traces = []
	for index in range(400):
		sweep(cfg, params, index)
		if index >= 50:
			traces.append(np.trace(cfg.links, axis1=-2, axis2=-1))
	samples = np.concatenate(traces)
	assert abs(samples.mean()) < 0.1
	assert np.mean(np.abs(samples) ** 2) == pytest.approx(1.0, abs=0.1)


@pytest.mark.slow
@pytest.mark.parametrize("group, beta", ((GroupId.U1, 1.0), (GroupId.SU2, 2.0)))
def test_metropolis_agrees_with_heatbath(group: GroupId, beta: float) -> None:
	shape = LatticeShape.hypercube(3, 4)
	metropolis_mean, metropolis_error = mean_with_error(chain_plaquettes(shape, group, "metropolis", beta, seed=31))
	heatbath_mean, heatbath_error = mean_with_error(chain_plaquettes(shape, group, "heatbath", beta, seed=31))
	assert metropolis_error > 0 and heatbath_error > 0
	assert abs(metropolis_mean - heatbath_mean) < 3 * math.hypot(metropolis_error, heatbath_error)


@pytest.mark.slow
def test_su3_subgroup_heatbath_agrees_with_metropolis() -> None:
	# heatbath sweeps of SU3 links run su3_subgroup_sweep
	shape = LatticeShape.hypercube(3, 3)
	subgroup_mean, subgroup_error = mean_with_error(chain_plaquettes(shape, GroupId.SU3, "heatbath", 4.0, seed=32))
	metropolis_mean, metropolis_error = mean_with_error(chain_plaquettes(shape, GroupId.SU3, "metropolis", 4.0, seed=32))
	assert subgroup_error > 0 and metropolis_error > 0
	assert abs(subgroup_mean - metropolis_mean) < 3 * math.hypot(subgroup_error, metropolis_error)


@pytest.mark.slow
def test_overrelaxation_shortens_autocorrelation() -> None:
	shape = LatticeShape.hypercube(4, 4)
	heatbath = chain_plaquettes(shape, GroupId.SU2, "heatbath", 2.3, seed=33, sweeps=2200)
	mixed = chain_plaquettes(shape, GroupId.SU2, "overrelax_mix", 2.3, seed=33, sweeps=2200, or_ratio=3)
	assert integrated_autocorrelation_time(mixed).tau < integrated_autocorrelation_time(heatbath).tau
	mixed_mean, mixed_error = mean_with_error(mixed)
	heatbath_mean, heatbath_error = mean_with_error(heatbath)
	assert abs(mixed_mean - heatbath_mean) < 3 * math.hypot(mixed_error, heatbath_error)
