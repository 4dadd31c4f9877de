# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

Markov chain updates

A sweep visits the checkerboard classes of the lattice one after the other.
Links inside a class do not share plaquettes, so a class is updated as one
vectorised block and may be split across worker threads. All random numbers
of a class come from a DrawTable keyed by (seed, sweep, stage, class), which
makes the chain independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]
from scipy.special import expit

from lgtcli.action import Configuration, staple_sums
from lgtcli.group_algebra import (
	GroupId,
	dagger,
	flips_from_uniforms,
	near_identity_from_normals,
	re_trace_matrices,
	reunitarize_matrices,
)
from lgtcli.observables import Measurement, MeasurementSeries
from lgtcli.rng import DrawTable, RandomStream
from lgtcli.types import NumericalError, UnsupportedAlgorithmError, UsageError
from lgtcli.utils import format_label

logger = get_logger("lgtcli")

ATTEMPTS_PER_ROUND = 8
MAX_ATTEMPTS = 1_000_000
REUNITARIZE_EVERY = 100
KENNEDY_PENDLETON_THRESHOLD = 2.0
TINY_COUPLING = 1e-12
SPREAD_MINIMUM = 1e-3
SPREAD_MAXIMUM = 2.0
TUNING_GAIN = 0.2

STAGE_METROPOLIS = 1
STAGE_HEATBATH = 2
STAGE_OVERRELAX = 3
STAGE_SUBGROUP = 10

TAG_PROPOSAL = 0
TAG_ACCEPT = 1
TAG_A0 = 2
TAG_DIRECTION = 3

SU3_SUBGROUPS = ((0, 1), (0, 2), (1, 2))


class Algorithm(str, Enum):
	METROPOLIS = "metropolis"
	HEATBATH = "heatbath"
	OVERRELAX_MIX = "overrelax_mix"

	@classmethod
	def parse(cls, value: str | Algorithm) -> Algorithm:
		if isinstance(value, Algorithm):
			return value
		try:
			return cls(str(value).strip().lower().replace("-", "_"))
		except ValueError:
			raise UsageError(f"Unknown algorithm {value!r}, choose one of: {', '.join(a.value for a in cls)}") from None


@dataclass(frozen=True)
class SamplerParams:
	beta: float
	algorithm: Algorithm = Algorithm.HEATBATH
	proposal_spread: float = 0.5
	or_ratio: int = 0
	seed: int = 0
	workers: int = 1

	def __post_init__(self) -> None:
		object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
		if not math.isfinite(self.beta) or self.beta < 0:
			raise UsageError(f"Coupling beta must be finite and non negative, got {self.beta}")
		if not 0 < self.proposal_spread <= SPREAD_MAXIMUM:
			raise UsageError(f"Proposal spread must be in (0, {SPREAD_MAXIMUM}], got {self.proposal_spread}")
		if self.or_ratio < 0:
			raise UsageError(f"Overrelaxation ratio must not be negative, got {self.or_ratio}")
		if self.workers < 1:
			raise UsageError(f"Worker count must be at least 1, got {self.workers}")

	def check_group(self, group: GroupId) -> None:
		if self.algorithm is Algorithm.OVERRELAX_MIX and self.or_ratio > 0 and group in (GroupId.Z2, GroupId.SU3):
			raise UnsupportedAlgorithmError(f"Overrelaxation is not available for {group.value}, use or_ratio = 0 or another algorithm")


@dataclass(frozen=True)
class SweepInfo:
	sweep_index: int
	acceptance: float
	params: SamplerParams


MeasureHook = Callable[[Configuration, SweepInfo], Iterable[Measurement]]
SweepCallback = Callable[[Configuration, SweepInfo], None]
ProgressCallback = Callable[[int, int], None]


@dataclass
class ChainResult:
	series: dict[str, MeasurementSeries] = field(default_factory=dict)
	acceptance: float = 0.0
	params: SamplerParams | None = None
	sweeps_done: int = 0


@lru_cache(maxsize=8)
def _executor(workers: int) -> ThreadPoolExecutor:
	return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="lgtcli-sweep")


def _run_partitioned(workers: int, size: int, kernel: Callable[[np.ndarray], int]) -> int:
	rows = np.arange(size)
	if workers <= 1 or size < 2 * workers:
		return kernel(rows)
	chunks = np.array_split(rows, workers)
	return sum(_executor(workers).map(kernel, chunks))


def _class_order(cfg: Configuration, sweep_index: int) -> list[tuple[int, np.ndarray]]:
	classes = list(enumerate(cfg.geometry.checkerboard_classes))
	if sweep_index % 2:
		classes.reverse()
	return classes


def _update_classes(
	cfg: Configuration,
	params: SamplerParams,
	sweep_index: int,
	stage: int,
	kernel: Callable[[Configuration, SamplerParams, np.ndarray, DrawTable, np.ndarray], int],
) -> int:
	changed = 0
	for class_index, link_ids in _class_order(cfg, sweep_index):
		draws = DrawTable(RandomStream.from_seed(params.seed, sweep_index, stage, class_index), rows=len(link_ids))

		def run(rows: np.ndarray, link_ids: np.ndarray = link_ids, draws: DrawTable = draws) -> int:
			return kernel(cfg, params, link_ids[rows], draws, rows)

		changed += _run_partitioned(params.workers, len(link_ids), run)
	return changed


def _checked_staples(cfg: Configuration, link_ids: np.ndarray) -> np.ndarray:
	staples = staple_sums(cfg, link_ids)
	if not np.all(np.isfinite(staples)):
		raise NumericalError("Non finite staple sum encountered")
	return staples


def _metropolis_kernel(cfg: Configuration, params: SamplerParams, link_ids: np.ndarray, draws: DrawTable, rows: np.ndarray) -> int:
	old = cfg.links[link_ids]
	staples = _checked_staples(cfg, link_ids)
	if cfg.group is GroupId.Z2:
		change = flips_from_uniforms(params.proposal_spread, draws.uniform(TAG_PROPOSAL)[rows])
	else:
		normals = draws.normal(TAG_PROPOSAL, 0, (cfg.group.generator_count,))[rows]
		change = near_identity_from_normals(cfg.group, params.proposal_spread, normals)
	new = change @ old
	delta = -re_trace_matrices((new - old) @ staples)
	accept = draws.uniform(TAG_ACCEPT)[rows] < np.exp(np.minimum(0.0, -params.beta * delta))
	cfg.links[link_ids[accept]] = new[accept]
	return int(np.count_nonzero(accept))


def metropolis_sweep(cfg: Configuration, params: SamplerParams, sweep_index: int) -> float:
	"""
	One Metropolis proposal per link, U' = R U with R near the identity.
	Returns the acceptance rate of the sweep.
	"""
	accepted = _update_classes(cfg, params, sweep_index, STAGE_METROPOLIS, _metropolis_kernel)
	return accepted / cfg.geometry.link_count


def quaternion_projection(blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
	"""
	Write 2x2 blocks B as k W with W in SU(2) such that Re Tr(V B) = k Re Tr(V W) for all V in SU(2).
	Returns k and W, W is the identity where k vanishes.
	"""
	p = (blocks[..., 0, 0] + np.conj(blocks[..., 1, 1])) / 2
	q = (blocks[..., 0, 1] - np.conj(blocks[..., 1, 0])) / 2
	k = np.sqrt(np.abs(p) ** 2 + np.abs(q) ** 2)
	degenerate = k < TINY_COUPLING
	scale = np.where(degenerate, 1.0, k)
	p = np.where(degenerate, 1.0, p / scale)
	q = np.where(degenerate, 0.0, q / scale)
	w = np.empty(blocks.shape[:-2] + (2, 2), dtype=np.complex128)
	w[..., 0, 0] = p
	w[..., 0, 1] = q
	w[..., 1, 0] = -np.conj(q)
	w[..., 1, 1] = np.conj(p)
	return k, w


def su2_a0(alpha: np.ndarray, draws: DrawTable, rows: np.ndarray, tag: int = TAG_A0) -> np.ndarray:
	"""
	Sample x0 in [-1, 1] with density proportional to sqrt(1 - x0^2) exp(alpha x0).

	Kennedy-Pendleton for alpha >= 2, Creutz inversion below. Every round
	offers ATTEMPTS_PER_ROUND candidates per row, the first accepted one is used.
	"""
	result = np.zeros(len(rows))
	pending = np.arange(len(rows))
	for round_ in range(MAX_ATTEMPTS // ATTEMPTS_PER_ROUND):
		if not len(pending):
			return result
		u = draws.uniform(tag, round_, (ATTEMPTS_PER_ROUND, 4))[rows[pending]]
		a = alpha[pending][:, None]
		with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
			lambda_sq = -(np.log1p(-u[..., 0]) + np.cos(2 * np.pi * u[..., 1]) ** 2 * np.log1p(-u[..., 2])) / (2 * a)
			kp_x0 = 1 - 2 * lambda_sq
			kp_accept = u[..., 3] ** 2 <= 1 - lambda_sq
			floor = np.exp(-2 * a)
			creutz_x0 = np.where(a < TINY_COUPLING, 2 * u[..., 0] - 1, 1 + np.log(floor + u[..., 0] * (1 - floor)) / a)
			creutz_accept = u[..., 3] ** 2 <= 1 - creutz_x0**2
		use_kp = a >= KENNEDY_PENDLETON_THRESHOLD
		candidate = np.where(use_kp, kp_x0, creutz_x0)
		accepted = np.where(use_kp, kp_accept, creutz_accept) & np.isfinite(candidate) & (np.abs(candidate) <= 1)
		found = accepted.any(axis=1)
		first = np.argmax(accepted, axis=1)
		result[pending[found]] = candidate[found, first[found]]
		pending = pending[~found]
	if len(pending):
		raise NumericalError(f"Heat bath rejection sampling exceeded {MAX_ATTEMPTS} attempts for {len(pending)} links")
	return result


def su2_from_a0(x0: np.ndarray, directions: np.ndarray) -> np.ndarray:
	"""SU(2) matrices with real part x0 and a uniformly distributed direction of the vector part."""
	cos_theta = 2 * directions[:, 0] - 1
	sin_theta = np.sqrt(np.maximum(0.0, 1 - cos_theta**2))
	phi = 2 * np.pi * directions[:, 1]
	radius = np.sqrt(np.maximum(0.0, 1 - x0**2))
	x1 = radius * sin_theta * np.cos(phi)
	x2 = radius * sin_theta * np.sin(phi)
	x3 = radius * cos_theta
	matrices = np.empty((len(x0), 2, 2), dtype=np.complex128)
	matrices[:, 0, 0] = x0 + 1j * x3
	matrices[:, 0, 1] = x2 + 1j * x1
	matrices[:, 1, 0] = -x2 + 1j * x1
	matrices[:, 1, 1] = x0 - 1j * x3
	return matrices


def _su2_heatbath_blocks(beta: float, blocks: np.ndarray, draws: DrawTable, rows: np.ndarray) -> np.ndarray:
	"""New SU(2) elements R distributed as exp(beta Re Tr(R B))."""
	k, w = quaternion_projection(blocks)
	x0 = su2_a0(2 * beta * k, draws, rows)
	x = su2_from_a0(x0, draws.uniform(TAG_DIRECTION, 0, (2,))[rows])
	return x @ dagger(w)


def von_mises(mu: np.ndarray, kappa: np.ndarray, draws: DrawTable, rows: np.ndarray) -> np.ndarray:
	"""
	Angles with density proportional to exp(kappa cos(theta - mu)), Best-Fisher rejection.
	"""
	result = np.zeros(len(rows))
	flat = kappa < 1e-8
	if np.any(flat):
		result[flat] = 2 * np.pi * draws.uniform(TAG_DIRECTION)[rows[flat]] - np.pi
	pending = np.nonzero(~flat)[0]
	with np.errstate(divide="ignore", invalid="ignore"):
		small = kappa < 1e-3
		tau = 1 + np.sqrt(1 + 4 * kappa**2)
		rho = (tau - np.sqrt(2 * tau)) / (2 * kappa)
		r = np.where(small, 1 / kappa + kappa, (1 + rho**2) / (2 * rho))
	for round_ in range(MAX_ATTEMPTS // ATTEMPTS_PER_ROUND):
		if not len(pending):
			return result
		u = draws.uniform(TAG_A0, round_, (ATTEMPTS_PER_ROUND, 3))[rows[pending]]
		kp = kappa[pending][:, None]
		rp = r[pending][:, None]
		z = np.cos(np.pi * u[..., 0])
		f = (1 + rp * z) / (rp + z)
		c = kp * (rp - f)
		u2 = 1 - u[..., 1]
		with np.errstate(divide="ignore", invalid="ignore"):
			accepted = (c * (2 - c) - u2 > 0) | (np.log(c / u2) + 1 - c >= 0)
		accepted &= np.isfinite(f) & (np.abs(f) <= 1)
		found = accepted.any(axis=1)
		first = np.argmax(accepted, axis=1)
		index = pending[found]
		chosen_f = f[found, first[found]]
		sign = np.where(u[found, first[found], 2] < 0.5, -1.0, 1.0)
		result[index] = mu[index] + sign * np.arccos(np.clip(chosen_f, -1.0, 1.0))
		pending = pending[~found]
	if len(pending):
		raise NumericalError(f"von Mises rejection sampling exceeded {MAX_ATTEMPTS} attempts for {len(pending)} links")
	return result


def _heatbath_kernel(cfg: Configuration, params: SamplerParams, link_ids: np.ndarray, draws: DrawTable, rows: np.ndarray) -> int:
	staples = _checked_staples(cfg, link_ids)
	if cfg.group is GroupId.Z2:
		plus = expit(2 * params.beta * staples[:, 0, 0].real)
		new = np.where(draws.uniform(TAG_ACCEPT)[rows] < plus, 1.0, -1.0).astype(np.complex128)
		cfg.links[link_ids] = new.reshape(-1, 1, 1)
	elif cfg.group is GroupId.U1:
		a = staples[:, 0, 0]
		theta = von_mises(-np.angle(a), params.beta * np.abs(a), draws, rows)
		cfg.links[link_ids] = np.exp(1j * theta).reshape(-1, 1, 1)
	elif cfg.group is GroupId.SU2:
		cfg.links[link_ids] = _su2_heatbath_blocks(params.beta, staples, draws, rows)
	else:
		raise UsageError("SU3 links are updated through su3_subgroup_sweep")
	return len(link_ids)


def _subgroup_kernel(pair: tuple[int, int]) -> Callable[[Configuration, SamplerParams, np.ndarray, DrawTable, np.ndarray], int]:
	i, j = pair
	index = np.array(pair)

	def kernel(cfg: Configuration, params: SamplerParams, link_ids: np.ndarray, draws: DrawTable, rows: np.ndarray) -> int:
		links = cfg.links[link_ids]
		staples = _checked_staples(cfg, link_ids)
		blocks = (links @ staples)[:, index[:, None], index[None, :]]
		rotation = _su2_heatbath_blocks(params.beta, blocks, draws, rows)
		updated = links.copy()
		updated[:, [i, j], :] = rotation @ links[:, [i, j], :]
		cfg.links[link_ids] = updated
		return len(link_ids)

	return kernel


def su3_subgroup_sweep(cfg: Configuration, params: SamplerParams, sweep_index: int) -> float:
	"""
	Cabibbo-Marinari heat bath: SU(2) heat bath updates in the (0,1), (0,2) and (1,2)
	subgroups, applied in that order to every link of a class.
	"""
	if cfg.group is not GroupId.SU3:
		raise UsageError(f"Subgroup heat bath needs SU3, got {cfg.group.value}")
	for class_index, link_ids in _class_order(cfg, sweep_index):
		for pair_index, pair in enumerate(SU3_SUBGROUPS):
			draws = DrawTable(
				RandomStream.from_seed(params.seed, sweep_index, STAGE_SUBGROUP + pair_index, class_index), rows=len(link_ids)
			)
			kernel = _subgroup_kernel(pair)

			def run(rows: np.ndarray, link_ids: np.ndarray = link_ids, draws: DrawTable = draws, kernel: Callable = kernel) -> int:
				return kernel(cfg, params, link_ids[rows], draws, rows)

			_run_partitioned(params.workers, len(link_ids), run)
	return 1.0


def heatbath_sweep(cfg: Configuration, params: SamplerParams, sweep_index: int) -> float:
	"""
	Draw every link from its conditional distribution exp(beta Re Tr(U A)).
	"""
	if cfg.group is GroupId.SU3:
		return su3_subgroup_sweep(cfg, params, sweep_index)
	_update_classes(cfg, params, sweep_index, STAGE_HEATBATH, _heatbath_kernel)
	return 1.0


def heatbath_link(cfg: Configuration, params: SamplerParams, link_id: int, stream: RandomStream) -> None:
	"""Heat bath update of a single link, used for checks of the conditional distribution."""
	link_ids = np.array([link_id])
	draws = DrawTable(stream, rows=1)
	rows = np.array([0])
	if cfg.group is GroupId.SU3:
		for pair_index, pair in enumerate(SU3_SUBGROUPS):
			_subgroup_kernel(pair)(cfg, params, link_ids, DrawTable(stream.derive(pair_index), rows=1), rows)
	else:
		_heatbath_kernel(cfg, params, link_ids, draws, rows)


def _overrelax_kernel(cfg: Configuration, params: SamplerParams, link_ids: np.ndarray, draws: DrawTable, rows: np.ndarray) -> int:
	links = cfg.links[link_ids]
	staples = _checked_staples(cfg, link_ids)
	if cfg.group is GroupId.U1:
		a = staples[:, 0, 0]
		phase = np.exp(-2j * np.angle(a))
		reflected = (phase * np.conj(links[:, 0, 0])).reshape(-1, 1, 1)
		new = np.where((np.abs(a) > TINY_COUPLING)[:, None, None], reflected, links)
	else:
		k, w = quaternion_projection(staples)
		w_dagger = dagger(w)
		reflected = w_dagger @ dagger(links) @ w_dagger
		new = np.where((k > TINY_COUPLING)[:, None, None], reflected, links)
	cfg.links[link_ids] = new
	return len(link_ids)


def overrelax_sweep(cfg: Configuration, params: SamplerParams, sweep_index: int) -> float:
	"""
	Microcanonical reflection of every link, the action is unchanged.
	Sweeps with odd index visit the classes in reverse order, so a sweep with
	index 2k followed by one with index 2k+1 restores the configuration.
	"""
	if cfg.group not in (GroupId.U1, GroupId.SU2):
		raise UnsupportedAlgorithmError(f"Overrelaxation is not available for {cfg.group.value}")
	_update_classes(cfg, params, sweep_index, STAGE_OVERRELAX, _overrelax_kernel)
	return 1.0


def sweep(cfg: Configuration, params: SamplerParams, sweep_index: int) -> float:
	"""One sweep of the configured algorithm, returns the acceptance rate."""
	if params.algorithm is Algorithm.METROPOLIS:
		return metropolis_sweep(cfg, params, sweep_index)
	acceptance = heatbath_sweep(cfg, params, sweep_index)
	if params.algorithm is Algorithm.OVERRELAX_MIX:
		for offset in range(params.or_ratio):
			# Distinct class order per overrelaxation step
			overrelax_sweep(cfg, params, sweep_index * (params.or_ratio + 1) + offset + 1)
	return acceptance


def reunitarize_configuration(cfg: Configuration) -> None:
	cfg.links[:] = reunitarize_matrices(cfg.group, cfg.links)


def tuned_spread(spread: float, acceptance: float) -> float:
	return float(min(SPREAD_MAXIMUM, max(SPREAD_MINIMUM, spread * math.exp(TUNING_GAIN * (acceptance - 0.5)))))


def run_chain(
	cfg: Configuration,
	params: SamplerParams,
	n_sweeps: int,
	measure_hook: MeasureHook | None = None,
	cadence: int = 1,
	*,
	start_sweep: int = 0,
	measure_from: int = 0,
	tune_until: int = 0,
	sweep_callback: SweepCallback | None = None,
	progress_callback: ProgressCallback | None = None,
	series_params: dict | None = None,
) -> ChainResult:
	"""
	Run ``n_sweeps`` sweeps starting at sweep index ``start_sweep``.

	Measurements are taken after sweep s when s >= measure_from and
	(s - measure_from + 1) is a multiple of ``cadence``. Links are projected
	back onto the group after every REUNITARIZE_EVERY sweeps. For Metropolis
	the proposal spread is tuned towards 50% acceptance while s < tune_until.
	"""
	if n_sweeps < 0:
		raise UsageError(f"Number of sweeps must not be negative, got {n_sweeps}")
	if cadence < 1:
		raise UsageError(f"Measurement cadence must be positive, got {cadence}")
	params.check_group(cfg.group)
	result = ChainResult(params=params)
	acceptances = []
	for sweep_index in range(start_sweep, start_sweep + n_sweeps):
		acceptance = sweep(cfg, params, sweep_index)
		acceptances.append(acceptance)
		if (sweep_index + 1) % REUNITARIZE_EVERY == 0:
			reunitarize_configuration(cfg)
		info = SweepInfo(sweep_index=sweep_index, acceptance=acceptance, params=params)
		if params.algorithm is Algorithm.METROPOLIS and sweep_index < tune_until:
			params = replace(params, proposal_spread=tuned_spread(params.proposal_spread, acceptance))
		if measure_hook and sweep_index >= measure_from and (sweep_index - measure_from + 1) % cadence == 0:
			for measurement in measure_hook(cfg, info):
				key = format_label(measurement.name, measurement.labels)
				if key not in result.series:
					result.series[key] = MeasurementSeries(
						name=measurement.name, params=dict(series_params or {}), cadence=cadence, labels=dict(measurement.labels)
					)
				result.series[key].append(sweep_index, measurement.value)
		if sweep_callback:
			sweep_callback(cfg, replace(info, params=params))
		if progress_callback:
			progress_callback(sweep_index + 1 - start_sweep, n_sweeps)
		result.sweeps_done += 1
	result.params = params
	result.acceptance = float(np.mean(acceptances)) if acceptances else 0.0
	logger.info("Chain finished %d sweeps, mean acceptance %.4f", result.sweeps_done, result.acceptance)
	return result
