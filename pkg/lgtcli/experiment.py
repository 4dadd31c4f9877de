# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

experiments

An experiment file describes the model, the sampler, the schedule, the
observables and optionally a list of couplings to scan. ``run_experiment``
turns it into a run directory holding measurement records, checkpoints, a
summary and fit tables, ``scan_experiment`` runs one such directory per
coupling and ``write_report`` turns finished directories into column files.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from opsicommon.logging import get_logger  # type: ignore[import]
from ruamel.yaml import YAML  # type: ignore[import]

from lgtcli import __version__
from lgtcli.action import Configuration, cold_start, hot_start
from lgtcli.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from lgtcli.group_algebra import GroupId
from lgtcli.io import RecordWriter, dump_json, read_json_file, read_records, write_columns, write_json_file
from lgtcli.lattice_geometry import Boundary, LatticeShape, check_loop_size, get_geometry
from lgtcli.observables import (
	FitResult,
	Measurement,
	MeasurementSeries,
	check_correlation_separations,
	creutz_ratio,
	effective_potentials,
	loop_expectation_table,
	loop_measurements,
	mass_gap_fit,
	perimeter_area_fit,
	plaquette_average,
	plaquette_correlation,
	plaquette_correlation_measurements,
	static_potential,
	string_tension_fit,
)
from lgtcli.oracle import MAX_ENUMERATION_LINKS, exact_tiny_lattice
from lgtcli.rng import RandomStream, mix_seed
from lgtcli.sampler import Algorithm, SamplerParams, SweepInfo, run_chain
from lgtcli.stats import (
	MIN_SERIES_LENGTH,
	default_bin_size,
	integrated_autocorrelation_time,
	jackknife_mean_error,
	thermalization_cut,
)
from lgtcli.types import ExperimentConfigError, LgtCliRuntimeError, UndefinedRatioError, UsageError, ValidationFailure
from lgtcli.utils import format_label

logger = get_logger("lgtcli")

START_STREAM_TAG = 0x5354415254
EXACT_CHECK_SIGMAS = 3.0

EXPERIMENT_FILE = "experiment.json"
MEASUREMENTS_FILE = "measurements.jsonl"
SUMMARY_FILE = "summary.json"
FITS_FILE = "fits.json"
CHECKPOINT_FILE = "checkpoint.lgtc"
SAMPLER_STATE_FILE = "sampler_state.json"
SCAN_TABLE_FILE = "scan_table.json"

SECTIONS = {
	"model": ("group", "ndims", "extents", "boundary", "beta", "start", "coupling", "lattice_spacing"),
	"sampler": ("algorithm", "proposal_spread", "or_ratio", "seed", "auto_tune", "workers"),
	"schedule": ("thermalization", "measurements", "cadence", "checkpoint_every"),
	"observables": (
		"plaquette",
		"loops_r_max",
		"loops_t_max",
		"loop_planes",
		"correlation_separations",
		"correlation_axis",
		"exact_check",
	),
	"scan": ("betas", "parallel"),
	"output": ("directory",),
}


def beta_from_coupling(coupling: float, lattice_spacing: float, ndims: int) -> float:
	"""
	Inverse lattice coupling 4 a^(n-4) / g^2 whose Wilson action weight reproduces
	exp(-S_YM / g^2) at leading order in the lattice spacing a.
	"""
	if not coupling > 0 or not lattice_spacing > 0:
		raise UsageError(f"Coupling and lattice spacing must be positive, got {coupling}, {lattice_spacing}")
	return 4 * lattice_spacing ** (ndims - 4) / coupling**2


@dataclass(frozen=True)
class ModelConfig:
	group: GroupId
	shape: LatticeShape
	beta: float | None = None
	start: str = "cold"
	coupling: float | None = None
	lattice_spacing: float | None = None


@dataclass(frozen=True)
class ScheduleConfig:
	thermalization: int
	measurements: int
	cadence: int = 1
	checkpoint_every: int = 100

	@property
	def total_sweeps(self) -> int:
		return self.thermalization + self.measurements

	@property
	def sample_count(self) -> int:
		return self.measurements // self.cadence


@dataclass(frozen=True)
class ObservablesConfig:
	plaquette: bool = True
	loops_r_max: int = 0
	loops_t_max: int = 0
	loop_planes: tuple[tuple[int, int], ...] | None = None
	correlation_separations: tuple[int, ...] = ()
	correlation_axis: int | None = None
	exact_check: bool = False

	@property
	def loops(self) -> bool:
		return self.loops_r_max > 0 and self.loops_t_max > 0


@dataclass(frozen=True)
class ScanConfig:
	betas: tuple[float, ...]
	parallel: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
	model: ModelConfig
	sampler: SamplerParams
	schedule: ScheduleConfig
	observables: ObservablesConfig = field(default_factory=ObservablesConfig)
	scan: ScanConfig | None = None
	output: Path = Path("lgt-output")
	auto_tune: bool = False

	@classmethod
	def from_file(cls, path: Path, workers: int | None = None) -> ExperimentConfig:
		"""
		Read an INI style experiment file, or a YAML file with the same two level structure.
		"""
		path = Path(path)
		try:
			text = path.read_text(encoding="utf-8")
		except OSError as err:
			raise UsageError(f"Cannot read experiment file {path}: {err}") from err
		if path.suffix.lower() in (".yaml", ".yml"):
			data = YAML(typ="safe").load(text) or {}
			if not isinstance(data, Mapping):
				raise UsageError(f"Experiment file {path} must contain sections")
			sections = {str(name): dict(values or {}) for name, values in data.items()}
		else:
			parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
			try:
				parser.read_string(text, source=str(path))
			except configparser.Error as err:
				raise UsageError(f"Invalid experiment file {path}: {err}") from err
			sections = {name: dict(parser[name]) for name in parser.sections()}
		logger.info("Read experiment file %s", path)
		return cls.from_mapping(sections, workers=workers, base_dir=path.parent)

	@classmethod
	def from_mapping(cls, sections: Mapping[str, Mapping[str, Any]], workers: int | None = None, base_dir: Path | None = None) -> ExperimentConfig:
		for name, values in sections.items():
			if name not in SECTIONS:
				raise ExperimentConfigError(name, None, f"unknown section, expected one of: {', '.join(SECTIONS)}")
			for key in values:
				if key not in SECTIONS[name]:
					raise ExperimentConfigError(name, key, "unknown key")
		reader = _SectionReader(sections)
		model = _read_model(reader)
		schedule = _read_schedule(reader)
		scan = _read_scan(reader, "scan" in sections)
		beta = model.beta
		if beta is None:
			if scan is None:
				raise ExperimentConfigError("model", "beta", "required (or coupling and lattice_spacing)")
			beta = scan.betas[0]
		sampler = _read_sampler(reader, beta, workers)
		observables = _read_observables(reader, model, schedule)
		sampler.check_group(model.group)
		directory = Path(str(reader.get("output", "directory", "lgt-output")))
		if not directory.is_absolute() and base_dir is not None and "directory" in sections.get("output", {}):
			directory = base_dir / directory
		return cls(
			model=model,
			sampler=sampler,
			schedule=schedule,
			observables=observables,
			scan=scan,
			output=directory,
			auto_tune=reader.boolean("sampler", "auto_tune", False),
		)

	def as_mapping(self) -> dict[str, Any]:
		"""Canonical typed form, read back by ``from_mapping``."""
		observables = self.observables
		return {
			"model": {
				"group": self.model.group.value,
				"ndims": self.model.shape.ndims,
				"extents": list(self.model.shape.extents),
				"boundary": self.model.shape.boundary.value,
				"beta": self.sampler.beta,
				"start": self.model.start,
			},
			"sampler": {
				"algorithm": self.sampler.algorithm.value,
				"proposal_spread": self.sampler.proposal_spread,
				"or_ratio": self.sampler.or_ratio,
				"seed": self.sampler.seed,
				"auto_tune": self.auto_tune,
				"workers": self.sampler.workers,
			},
			"schedule": {
				"thermalization": self.schedule.thermalization,
				"measurements": self.schedule.measurements,
				"cadence": self.schedule.cadence,
				"checkpoint_every": self.schedule.checkpoint_every,
			},
			"observables": {
				"plaquette": observables.plaquette,
				"loops_r_max": observables.loops_r_max,
				"loops_t_max": observables.loops_t_max,
				"loop_planes": "all" if observables.loop_planes is None else [list(plane) for plane in observables.loop_planes],
				"correlation_separations": list(observables.correlation_separations),
				"correlation_axis": observables.correlation_axis,
				"exact_check": observables.exact_check,
			},
			**({"scan": {"betas": list(self.scan.betas), "parallel": self.scan.parallel}} if self.scan else {}),
			"output": {"directory": str(self.output)},
		}

	def config_hash(self) -> str:
		"""Hash of everything that determines the measurements: output location, workers and scan list are left out."""
		mapping = self.as_mapping()
		mapping.pop("output")
		mapping.pop("scan", None)
		mapping["sampler"].pop("workers")
		return hashlib.sha256(dump_json(mapping, pretty=False)).hexdigest()[:16]

	def for_scan_point(self, index: int) -> ExperimentConfig:
		"""
		Configuration of scan point ``index``: its coupling, a seed mixed from the master seed and directory beta_<index>.
		A scan of a single coupling keeps the master seed, so it measures exactly what ``run`` measures.
		"""
		if not self.scan:
			raise UsageError("Experiment has no scan section")
		beta = self.scan.betas[index]
		seed = self.sampler.seed if len(self.scan.betas) == 1 else mix_seed(self.sampler.seed, index)
		sampler = replace(self.sampler, beta=beta, seed=seed)
		return replace(
			self,
			model=replace(self.model, beta=beta, coupling=None, lattice_spacing=None),
			sampler=sampler,
			scan=None,
			output=self.output / f"beta_{index}",
		)

	def series_params(self) -> dict[str, Any]:
		return {
			"group": self.model.group.value,
			"shape": list(self.model.shape.extents),
			"boundary": self.model.shape.boundary.value,
			"beta": self.sampler.beta,
			"algorithm": self.sampler.algorithm.value,
			"seed": self.sampler.seed,
		}


class _SectionReader:
	def __init__(self, sections: Mapping[str, Mapping[str, Any]]) -> None:
		self.sections = sections

	def get(self, section: str, key: str, default: Any = None) -> Any:
		value = self.sections.get(section, {}).get(key)
		if value is None or (isinstance(value, str) and not value.strip()):
			return default
		return value.strip() if isinstance(value, str) else value

	def integer(self, section: str, key: str, default: int | None = None, minimum: int | None = None) -> int:
		value = self.get(section, key, default)
		if value is None:
			raise ExperimentConfigError(section, key, "required")
		try:
			if isinstance(value, float) and not value.is_integer():
				raise ValueError(value)
			number = int(value)
		except (TypeError, ValueError):
			raise ExperimentConfigError(section, key, f"expected an integer, got {value!r}") from None
		if minimum is not None and number < minimum:
			raise ExperimentConfigError(section, key, f"must be at least {minimum}, got {number}")
		return number

	def optional_integer(self, section: str, key: str) -> int | None:
		if self.get(section, key) is None:
			return None
		return self.integer(section, key)

	def real(self, section: str, key: str, default: float | None = None) -> float | None:
		value = self.get(section, key, default)
		if value is None:
			return None
		try:
			number = float(value)
		except (TypeError, ValueError):
			raise ExperimentConfigError(section, key, f"expected a number, got {value!r}") from None
		if not math.isfinite(number):
			raise ExperimentConfigError(section, key, f"must be finite, got {number}")
		return number

	def boolean(self, section: str, key: str, default: bool) -> bool:
		value = self.get(section, key, default)
		if isinstance(value, bool):
			return value
		text = str(value).lower()
		if text in ("1", "true", "yes", "on"):
			return True
		if text in ("0", "false", "no", "off"):
			return False
		raise ExperimentConfigError(section, key, f"expected true or false, got {value!r}")

	def items(self, section: str, key: str) -> list[Any]:
		value = self.get(section, key)
		if value is None:
			return []
		if isinstance(value, (list, tuple)):
			return list(value)
		return [item.strip() for item in str(value).split(",") if item.strip()]

	def integers(self, section: str, key: str) -> list[int]:
		try:
			return [int(item) for item in self.items(section, key)]
		except (TypeError, ValueError):
			raise ExperimentConfigError(section, key, f"expected a comma separated list of integers, got {self.get(section, key)!r}") from None

	def reals(self, section: str, key: str) -> list[float]:
		try:
			return [float(item) for item in self.items(section, key)]
		except (TypeError, ValueError):
			raise ExperimentConfigError(section, key, f"expected a comma separated list of numbers, got {self.get(section, key)!r}") from None


def _read_model(reader: _SectionReader) -> ModelConfig:
	try:
		group = GroupId.parse(reader.get("model", "group", ""))
	except UsageError as err:
		raise ExperimentConfigError("model", "group", str(err)) from err
	extents = reader.integers("model", "extents")
	if not extents:
		raise ExperimentConfigError("model", "extents", "required")
	ndims = reader.integer("model", "ndims", len(extents))
	if len(extents) == 1:
		extents = extents * ndims
	try:
		boundary = Boundary.parse(reader.get("model", "boundary", "periodic"))
	except UsageError as err:
		raise ExperimentConfigError("model", "boundary", str(err)) from err
	try:
		shape = LatticeShape(ndims, tuple(extents), boundary)
	except UsageError as err:
		raise ExperimentConfigError("model", "extents", str(err)) from err
	start = str(reader.get("model", "start", "cold")).lower()
	if start not in ("cold", "hot"):
		raise ExperimentConfigError("model", "start", f"expected cold or hot, got {start!r}")
	beta = reader.real("model", "beta")
	coupling = reader.real("model", "coupling")
	lattice_spacing = reader.real("model", "lattice_spacing")
	if (coupling is None) != (lattice_spacing is None):
		raise ExperimentConfigError("model", "coupling", "coupling and lattice_spacing must be given together")
	if coupling is not None and lattice_spacing is not None:
		if beta is not None:
			raise ExperimentConfigError("model", "beta", "give either beta or coupling and lattice_spacing")
		try:
			beta = beta_from_coupling(coupling, lattice_spacing, ndims)
		except UsageError as err:
			raise ExperimentConfigError("model", "coupling", str(err)) from err
	if beta is not None and beta < 0:
		raise ExperimentConfigError("model", "beta", f"must not be negative, got {beta}")
	return ModelConfig(group=group, shape=shape, beta=beta, start=start, coupling=coupling, lattice_spacing=lattice_spacing)


def _read_sampler(reader: _SectionReader, beta: float, workers: int | None) -> SamplerParams:
	try:
		algorithm = Algorithm.parse(reader.get("sampler", "algorithm", Algorithm.HEATBATH.value))
	except UsageError as err:
		raise ExperimentConfigError("sampler", "algorithm", str(err)) from err
	spread = reader.real("sampler", "proposal_spread", 0.5)
	configured_workers = reader.optional_integer("sampler", "workers")
	try:
		return SamplerParams(
			beta=beta,
			algorithm=algorithm,
			proposal_spread=float(spread),  # type: ignore[arg-type]
			or_ratio=reader.integer("sampler", "or_ratio", 0, minimum=0),
			seed=reader.integer("sampler", "seed", 0, minimum=0),
			workers=configured_workers or workers or 1,
		)
	except ExperimentConfigError:
		raise
	except UsageError as err:
		raise ExperimentConfigError("sampler", "proposal_spread", str(err)) from err


def _read_schedule(reader: _SectionReader) -> ScheduleConfig:
	schedule = ScheduleConfig(
		thermalization=reader.integer("schedule", "thermalization", minimum=0),
		measurements=reader.integer("schedule", "measurements", minimum=1),
		cadence=reader.integer("schedule", "cadence", 1, minimum=1),
		checkpoint_every=reader.integer("schedule", "checkpoint_every", 100, minimum=1),
	)
	if schedule.sample_count < 2:
		raise ExperimentConfigError("schedule", "measurements", f"gives {schedule.sample_count} samples at cadence {schedule.cadence}, at least 2 are needed")
	return schedule


def _parse_plane(value: Any) -> tuple[int, int]:
	if isinstance(value, (list, tuple)) and len(value) == 2:
		return int(value[0]), int(value[1])
	mu, nu = str(value).split("-")
	return int(mu), int(nu)


def _read_observables(reader: _SectionReader, model: ModelConfig, schedule: ScheduleConfig) -> ObservablesConfig:
	shape = model.shape
	r_max = reader.integer("observables", "loops_r_max", 0, minimum=0)
	t_max = reader.integer("observables", "loops_t_max", 0, minimum=0)
	planes_value = reader.get("observables", "loop_planes", "all")
	planes: tuple[tuple[int, int], ...] | None = None
	if not (isinstance(planes_value, str) and planes_value.lower() == "all"):
		try:
			planes = tuple(_parse_plane(value) for value in reader.items("observables", "loop_planes"))
		except ValueError:
			raise ExperimentConfigError("observables", "loop_planes", f"expected 'all' or planes like 0-1, got {planes_value!r}") from None
		for plane in planes:
			if plane not in shape.planes:
				raise ExperimentConfigError("observables", "loop_planes", f"invalid plane {plane[0]}-{plane[1]} on {shape.ndims} dimensions")
	if r_max and t_max:
		for plane in planes or shape.planes:
			try:
				check_loop_size(shape, plane, r_max, 1)
			except UsageError as err:
				raise ExperimentConfigError("observables", "loops_r_max", str(err)) from err
			try:
				check_loop_size(shape, plane, 1, t_max)
			except UsageError as err:
				raise ExperimentConfigError("observables", "loops_t_max", str(err)) from err
	separations = tuple(reader.integers("observables", "correlation_separations"))
	axis = reader.optional_integer("observables", "correlation_axis")
	if separations:
		try:
			axis = check_correlation_separations(shape, separations, axis)
		except UsageError as err:
			raise ExperimentConfigError("observables", "correlation_separations", str(err)) from err
	exact_check = reader.boolean("observables", "exact_check", False)
	if exact_check:
		if model.group is not GroupId.Z2:
			raise ExperimentConfigError("observables", "exact_check", f"exact enumeration is available for Z2 only, got {model.group.value}")
		if get_geometry(shape).link_count > MAX_ENUMERATION_LINKS:
			raise ExperimentConfigError("observables", "exact_check", f"lattice {shape} has more than {MAX_ENUMERATION_LINKS} links")
	return ObservablesConfig(
		plaquette=reader.boolean("observables", "plaquette", True),
		loops_r_max=r_max,
		loops_t_max=t_max,
		loop_planes=planes,
		correlation_separations=separations,
		correlation_axis=axis,
		exact_check=exact_check,
	)


def _read_scan(reader: _SectionReader, present: bool) -> ScanConfig | None:
	if not present:
		return None
	betas = tuple(reader.reals("scan", "betas"))
	if not betas:
		raise ExperimentConfigError("scan", "betas", "scan list is empty")
	if any(beta <= 0 for beta in betas):
		raise ExperimentConfigError("scan", "betas", "values must be positive")
	if any(second <= first for first, second in zip(betas, betas[1:])):
		raise ExperimentConfigError("scan", "betas", "values must be strictly increasing")
	return ScanConfig(betas=betas, parallel=reader.integer("scan", "parallel", 1, minimum=1))


def measurement_hook(config: ExperimentConfig) -> Callable[[Configuration, SweepInfo], list[Measurement]]:
	observables = config.observables
	planes = list(observables.loop_planes) if observables.loop_planes else None
	with_plaquette = observables.plaquette or bool(observables.correlation_separations) or observables.exact_check

	def measure(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
		measurements = []
		if with_plaquette:
			measurements.append(Measurement("plaquette", plaquette_average(cfg)))
		if observables.loops:
			measurements.extend(loop_measurements(cfg, observables.loops_r_max, observables.loops_t_max, planes))
		if observables.correlation_separations:
			measurements.extend(
				plaquette_correlation_measurements(cfg, observables.correlation_separations, observables.correlation_axis)
			)
		return measurements

	return measure


@dataclass
class RunResult:
	directory: Path
	summary: dict[str, Any]
	fits: dict[str, Any]


def _initial_configuration(config: ExperimentConfig) -> Configuration:
	if config.model.start == "hot":
		cfg, _stream = hot_start(config.model.shape, config.model.group, RandomStream.from_seed(config.sampler.seed, START_STREAM_TAG))
		return cfg
	return cold_start(config.model.shape, config.model.group)


def _resume_state(config: ExperimentConfig, checkpoint_path: Path) -> tuple[Checkpoint, dict[str, Any]]:
	checkpoint = load_checkpoint(checkpoint_path)
	cfg = checkpoint.configuration
	if cfg.group is not config.model.group or cfg.shape != config.model.shape:
		raise UsageError(f"Checkpoint holds a {cfg.group.value} {cfg.shape} configuration, experiment is {config.model.group.value} {config.model.shape}")
	if checkpoint.beta != config.sampler.beta:
		raise UsageError(f"Checkpoint was written at beta={checkpoint.beta}, experiment has beta={config.sampler.beta}")
	if checkpoint.stream.key != RandomStream.from_seed(config.sampler.seed).key:
		raise UsageError("Checkpoint was written with a different seed")
	if checkpoint.sweep > config.schedule.total_sweeps:
		raise UsageError(f"Checkpoint at sweep {checkpoint.sweep} is beyond the {config.schedule.total_sweeps} scheduled sweeps")
	state_path = checkpoint_path.parent / SAMPLER_STATE_FILE
	state = read_json_file(state_path)
	if state.get("sweep") != checkpoint.sweep:
		raise UsageError(f"Sampler state {state_path} belongs to sweep {state.get('sweep')}, checkpoint to sweep {checkpoint.sweep}")
	return checkpoint, state


def run_experiment(
	config: ExperimentConfig,
	resume: Path | None = None,
	progress_callback: Callable[[int, int], None] | None = None,
) -> RunResult:
	"""
	Thermalize, measure and analyse one chain.

	Records go to measurements.jsonl as they are measured. A checkpoint and the
	sampler state are written every ``checkpoint_every`` sweeps and at the end,
	so an interrupted run can be resumed from its directory and yields the same
	records as an uninterrupted one.
	"""
	directory = Path(config.output)
	directory.mkdir(parents=True, exist_ok=True)
	schedule = config.schedule
	params = config.sampler
	config_hash = config.config_hash()
	provenance = {"config_hash": config_hash, "seed": params.seed, "version": __version__}
	series_params = config.series_params()
	write_json_file(directory / EXPERIMENT_FILE, config.as_mapping())

	acceptance_sum = 0.0
	if resume is not None:
		checkpoint, state = _resume_state(config, Path(resume))
		cfg = checkpoint.configuration
		start_sweep = checkpoint.sweep
		params = replace(params, proposal_spread=float(state["proposal_spread"]))
		acceptance_sum = float(state.get("acceptance_sum", 0.0))
		logger.notice("Resuming %s at sweep %d of %d", directory, start_sweep, schedule.total_sweeps)
	else:
		cfg = _initial_configuration(config)
		start_sweep = 0
		logger.notice("Starting %s %s run at beta=%s in %s", config.model.group.value, config.model.shape, params.beta, directory)

	measure = measurement_hook(config)
	writer = RecordWriter(directory / MEASUREMENTS_FILE).open(keep=lambda record: record["sweep"] < start_sweep)

	def recording_hook(cfg: Configuration, info: SweepInfo) -> list[Measurement]:
		measurements = measure(cfg, info)
		for measurement in measurements:
			writer.write(
				{
					"sweep": info.sweep_index,
					"name": measurement.name,
					"labels": measurement.labels,
					"params": series_params,
					"value": measurement.value,
					"provenance": provenance,
				}
			)
		return measurements

	total = schedule.total_sweeps
	try:
		sweep_index = start_sweep
		while sweep_index < total:
			segment_end = min(total, (sweep_index // schedule.checkpoint_every + 1) * schedule.checkpoint_every)
			segment_start = sweep_index

			def segment_progress(done: int, _count: int, offset: int = segment_start - start_sweep) -> None:
				if progress_callback:
					progress_callback(offset + done, total - start_sweep)

			result = run_chain(
				cfg,
				params,
				segment_end - sweep_index,
				recording_hook,
				schedule.cadence,
				start_sweep=sweep_index,
				measure_from=schedule.thermalization,
				tune_until=schedule.thermalization if config.auto_tune else 0,
				progress_callback=segment_progress,
				series_params=series_params,
			)
			assert result.params
			params = result.params
			acceptance_sum += result.acceptance * result.sweeps_done
			sweep_index = segment_end
			writer.flush()
			save_checkpoint(
				directory / CHECKPOINT_FILE,
				Checkpoint(cfg, params.beta, sweep_index, RandomStream(RandomStream.from_seed(params.seed).key, sweep_index)),
			)
			write_json_file(
				directory / SAMPLER_STATE_FILE,
				{"sweep": sweep_index, "proposal_spread": params.proposal_spread, "acceptance_sum": acceptance_sum},
			)
			if segment_start < schedule.thermalization <= sweep_index:
				logger.notice("Thermalization finished after %d sweeps", schedule.thermalization)
	finally:
		writer.close()

	summary, fits = analyze_run(directory)
	summary["acceptance"] = acceptance_sum / total if total else 0.0
	summary["proposal_spread"] = params.proposal_spread
	write_json_file(directory / SUMMARY_FILE, summary)
	write_json_file(directory / FITS_FILE, fits)
	logger.notice("Run finished, results in %s", directory)
	exact = summary.get("exact_check")
	if exact and not exact["passed"]:
		raise ValidationFailure(
			f"Plaquette {exact['mcmc']:.6f} +- {exact['error']:.6f} deviates from the exact value {exact['exact']:.6f} by {exact['deviation_sigma']:.2f} sigma"
		)
	return RunResult(directory=directory, summary=summary, fits=fits)


def load_series(directory: Path, cadence: int = 1) -> dict[str, MeasurementSeries]:
	series: dict[str, MeasurementSeries] = {}
	for record in read_records(Path(directory) / MEASUREMENTS_FILE):
		labels = record.get("labels") or {}
		key = format_label(record["name"], labels)
		if key not in series:
			series[key] = MeasurementSeries(name=record["name"], params=record.get("params") or {}, cadence=cadence, labels=labels)
		series[key].append(record["sweep"], record["value"])
	return series


def _series_diagnostics(series: MeasurementSeries) -> dict[str, Any]:
	if len(series) < MIN_SERIES_LENGTH:
		return {"count": len(series), "cut": 0, "cut_capped": False, "tau_int": None, "tau_error": None, "tau_converged": None}
	cut = thermalization_cut(series)
	tail = series.tail(cut.index)
	diagnostics: dict[str, Any] = {"count": len(series), "cut": cut.index, "cut_capped": cut.capped}
	if len(tail) >= MIN_SERIES_LENGTH:
		tau = integrated_autocorrelation_time(tail)
		diagnostics.update(
			{
				"tau_int": tau.tau,
				"tau_error": tau.error,
				"tau_converged": tau.converged,
				"tau_diagnostic": tau.diagnostic,
				"window": tau.window,
			}
		)
	else:
		diagnostics.update({"tau_int": None, "tau_error": None, "tau_converged": None})
	return diagnostics


def _common_bin_size(tails: Iterable[MeasurementSeries]) -> int:
	tails = list(tails)
	size = max((default_bin_size(tail) for tail in tails), default=1)
	shortest = min((len(tail) for tail in tails), default=2)
	return max(1, min(size, shortest // 2))


def _fit_or_failure(function: Callable[[], FitResult]) -> dict[str, Any]:
	try:
		return function().as_dict()
	except (UsageError, UndefinedRatioError) as err:
		return FitResult.failure(str(err)).as_dict()


def analyze_run(directory: Path) -> tuple[dict[str, Any], dict[str, Any]]:
	"""
	Summary and fit tables of a run directory.

	All series share one thermalization cut (the largest cut of any series) and
	one bin size, so jackknife replicates of different observables line up.
	"""
	directory = Path(directory)
	config = ExperimentConfig.from_mapping(read_json_file(directory / EXPERIMENT_FILE))
	all_series = load_series(directory, config.schedule.cadence)
	if not all_series:
		raise UsageError(f"No measurements in {directory}")
	diagnostics = {key: _series_diagnostics(series) for key, series in all_series.items()}
	cut = max(entry["cut"] for entry in diagnostics.values())
	tails = {key: series.tail(cut) for key, series in all_series.items()}
	bin_size = _common_bin_size(tails.values())
	logger.info("Analysing %s: %d series, cut %d, bin size %d", directory, len(tails), cut, bin_size)

	observables: dict[str, Any] = {}
	reality: dict[str, Any] = {}
	for key, tail in tails.items():
		mean, error = jackknife_mean_error(tail, bin_size)
		entry = {"mean": mean, "error": error, "bin_size": bin_size, "common_cut": cut, **diagnostics[key]}
		if tail.name == "wilson_loop_imag":
			sigma = abs(mean) / error if error > 0 else (0.0 if mean == 0 else math.inf)
			reality[key] = {"mean": mean, "error": error, "sigma": sigma}
		else:
			observables[key] = entry
		if diagnostics[key]["cut_capped"]:
			logger.warning("Series %s did not reach a stationary tail", key)

	summary: dict[str, Any] = {
		"config_hash": config.config_hash(),
		"seed": config.sampler.seed,
		"version": __version__,
		"group": config.model.group.value,
		"shape": list(config.model.shape.extents),
		"boundary": config.model.shape.boundary.value,
		"beta": config.sampler.beta,
		"algorithm": config.sampler.algorithm.value,
		"sweeps": config.schedule.total_sweeps,
		"thermalization_cut": cut,
		"bin_size": bin_size,
		"observables": observables,
	}
	if reality:
		summary["loop_imaginary_parts"] = reality

	fits: dict[str, Any] = {"bin_size": bin_size, "thermalization_cut": cut}
	options = config.observables
	if options.loops:
		table = loop_expectation_table(tails, options.loops_r_max, options.loops_t_max, bin_size, config.model.group.matrix_order)
		fits["loops"] = table.as_records()
		creutz = []
		for r in range(2, options.loops_r_max + 1):
			for t in range(2, options.loops_t_max + 1):
				try:
					chi, chi_error = creutz_ratio(table, r, t)
					creutz.append({"R": r, "T": t, "chi": chi, "error": chi_error, "diagnostic": None})
				except UndefinedRatioError as err:
					creutz.append({"R": r, "T": t, "chi": None, "error": None, "diagnostic": str(err)})
		fits["creutz_ratios"] = creutz
		if options.loops_t_max >= 3:
			potentials = {r: static_potential(table, r) for r in range(1, options.loops_r_max + 1)}
			fits["static_potential"] = [
				{"R": r, **fit.as_dict(), "effective": effective_potentials(table, r)} for r, fit in potentials.items()
			]
			fits["string_tension"] = string_tension_fit(potentials).as_dict()
		fits["perimeter_area"] = _fit_or_failure(lambda: perimeter_area_fit(table))
	if options.correlation_separations:
		estimate = plaquette_correlation(tails, options.correlation_separations, bin_size)
		fits["correlation"] = estimate.as_records()
		fits["mass_gap"] = mass_gap_fit(estimate).as_dict()

	if options.exact_check:
		exact = exact_tiny_lattice(config.model.shape, config.sampler.beta)
		estimate_entry = observables["plaquette"]
		deviation = abs(estimate_entry["mean"] - exact)
		sigma = deviation / estimate_entry["error"] if estimate_entry["error"] > 0 else (0.0 if deviation == 0 else math.inf)
		summary["exact_check"] = {
			"exact": exact,
			"mcmc": estimate_entry["mean"],
			"error": estimate_entry["error"],
			"deviation_sigma": sigma,
			"passed": sigma <= EXACT_CHECK_SIGMAS,
		}
		logger.notice("Exact check: MCMC %.6f +- %.6f, exact %.6f (%.2f sigma)", estimate_entry["mean"], estimate_entry["error"], exact, sigma)
	return summary, fits


def _scan_row(index: int, beta: float, seed: int, result: RunResult | None, diagnostic: str | None = None) -> dict[str, Any]:
	row: dict[str, Any] = {
		"index": index,
		"beta": beta,
		"seed": seed,
		"status": "ok" if result else "failed",
		"diagnostic": diagnostic,
	}
	for name in ("plaquette", "plaquette_error", "c", "c_error", "d", "d_error", "xi", "xi_error"):
		row[name] = None
	if result is None:
		return row
	plaquette = result.summary["observables"].get("plaquette")
	if plaquette:
		row["plaquette"], row["plaquette_error"] = plaquette["mean"], plaquette["error"]
	perimeter_area = result.fits.get("perimeter_area")
	if perimeter_area and perimeter_area["ok"]:
		for name in ("c", "d"):
			row[name], row[f"{name}_error"] = perimeter_area["parameters"][name], perimeter_area["errors"][name]
	mass_gap = result.fits.get("mass_gap")
	if mass_gap and mass_gap["ok"]:
		row["xi"], row["xi_error"] = mass_gap["parameters"]["xi"], mass_gap["errors"]["xi"]
	return row


def _run_scan_point(mapping: dict[str, Any], index: int) -> dict[str, Any]:
	config = ExperimentConfig.from_mapping(mapping).for_scan_point(index)
	try:
		result = run_experiment(config)
	except LgtCliRuntimeError as err:
		logger.warning("Scan point %d (beta=%s) failed: %s", index, config.sampler.beta, err)
		return _scan_row(index, config.sampler.beta, config.sampler.seed, None, str(err))
	logger.notice("Scan point %d (beta=%s) done", index, config.sampler.beta)
	return _scan_row(index, config.sampler.beta, config.sampler.seed, result)


def scan_experiment(config: ExperimentConfig, progress_callback: Callable[[int, int], None] | None = None) -> list[dict[str, Any]]:
	"""
	Run every coupling of the scan list in its own directory beta_<index>.

	Seeds are mixed from the master seed and the point index, a single point keeps
	the master seed. Failing points are recorded and the scan continues. Points run
	in ``parallel`` processes.
	"""
	if not config.scan or not config.scan.betas:
		raise ExperimentConfigError("scan", "betas", "scan list is empty")
	config.output.mkdir(parents=True, exist_ok=True)
	mapping = config.as_mapping()
	indices = range(len(config.scan.betas))
	rows: list[dict[str, Any]] = []
	if config.scan.parallel > 1 and len(indices) > 1:
		with ProcessPoolExecutor(max_workers=config.scan.parallel) as executor:
			futures = [executor.submit(_run_scan_point, mapping, index) for index in indices]
			for index, future in enumerate(futures):
				rows.append(future.result())
				if progress_callback:
					progress_callback(index + 1, len(futures))
	else:
		for index in indices:
			rows.append(_run_scan_point(mapping, index))
			if progress_callback:
				progress_callback(index + 1, len(indices))
	write_json_file(config.output / SCAN_TABLE_FILE, {"config_hash": config.config_hash(), "points": rows})
	return rows


def _log_with_error(value: float, error: float) -> tuple[float, float]:
	if value <= 0:
		return math.nan, math.nan
	return math.log(value), error / value


def _number(value: Any) -> float:
	return math.nan if value is None else float(value)


def _write_run_report(directory: Path) -> list[Path]:
	fits = read_json_file(directory / FITS_FILE)
	written = []
	if "static_potential" in fits:
		path = directory / "potential.dat"
		rows = [(entry["R"], entry["parameters"]["V"], entry["errors"]["V"]) for entry in fits["static_potential"] if entry["ok"]]
		write_columns(path, ["R", "V", "V_error"], rows)
		written.append(path)
	if "correlation" in fits:
		path = directory / "correlation.dat"
		rows = []
		for entry in fits["correlation"]:
			log_f, log_error = _log_with_error(_number(entry["f"]), _number(entry["error"]))
			rows.append((abs(entry["x"]), entry["f"], entry["error"], log_f, log_error))
		write_columns(path, ["x", "f", "f_error", "log_f", "log_f_error"], rows)
		written.append(path)
	if "loops" in fits:
		path = directory / "loops_area.dat"
		perimeter_area = fits.get("perimeter_area") or {}
		c = perimeter_area["parameters"]["c"] if perimeter_area.get("ok") else math.nan
		rows = []
		for entry in fits["loops"]:
			log_w, log_error = _log_with_error(entry["mean"], entry["error"])
			r, t = entry["R"], entry["T"]
			rows.append((r, t, r * t, r + t, log_w, log_error, log_w + c * (r + t)))
		write_columns(path, ["R", "T", "area", "perimeter", "log_W", "log_W_error", "log_W_plus_c_perimeter"], rows)
		written.append(path)
	return written


def write_report(directory: Path) -> list[Path]:
	"""
	Column files for plotting: potential.dat, correlation.dat and loops_area.dat
	per run directory, scan.dat for scan directories.
	"""
	directory = Path(directory)
	written: list[Path] = []
	if (directory / SCAN_TABLE_FILE).exists():
		table = read_json_file(directory / SCAN_TABLE_FILE)
		columns = ["beta", "plaquette", "plaquette_error", "c", "c_error", "d", "d_error", "xi", "xi_error"]
		path = directory / "scan.dat"
		write_columns(path, columns, [[_number(row[name]) for name in columns] for row in table["points"]])
		written.append(path)
		for row in table["points"]:
			point = directory / f"beta_{row['index']}"
			if (point / FITS_FILE).exists():
				written.extend(_write_run_report(point))
	elif (directory / FITS_FILE).exists():
		written.extend(_write_run_report(directory))
	else:
		raise UsageError(f"No run or scan results in {directory}, expected {FITS_FILE} or {SCAN_TABLE_FILE}")
	logger.notice("Report files written: %s", ", ".join(str(path) for path in written))
	return written
