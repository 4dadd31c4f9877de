# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

observables and their estimators

Measurement functions act on a single configuration. The plaquette average
is normalised by the matrix order N, Wilson loops are plain traces of the
ordered product, so a cold configuration measures 1 and N respectively.
Estimators act on measurement series and carry jackknife replicates, so
derived quantities (ratios, fits) get their errors from refits on the
leave-one-bin-out samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.action import Configuration, path_products, plaquette_traces
from lgtcli.lattice_geometry import (
	LatticeShape,
	LoopSpec,
	check_loop_size,
	get_geometry,
	loop_links,
	loop_paths,
	rectangle_steps,
)
from lgtcli.stats import bin_series, jackknife_error, jackknife_replicates, series_values
from lgtcli.types import UndefinedRatioError, UsageError
from lgtcli.utils import format_label

logger = get_logger("lgtcli")

PLATEAU_SIGNIFICANCE = 2.0
SIGNAL_SIGNIFICANCE = 2.0
EXACT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Measurement:
	name: str
	value: float
	labels: dict[str, int] = field(default_factory=dict)


@dataclass
class MeasurementSeries:
	name: str
	params: dict[str, Any] = field(default_factory=dict)
	cadence: int = 1
	values: list[float] = field(default_factory=list)
	sweep_indices: list[int] = field(default_factory=list)
	labels: dict[str, int] = field(default_factory=dict)

	@property
	def key(self) -> str:
		return format_label(self.name, self.labels)

	def append(self, sweep_index: int, value: float) -> None:
		if self.sweep_indices and sweep_index <= self.sweep_indices[-1]:
			raise UsageError(f"Sweep indices of series {self.key} must increase, got {sweep_index} after {self.sweep_indices[-1]}")
		self.sweep_indices.append(int(sweep_index))
		self.values.append(float(value))

	def tail(self, start: int) -> MeasurementSeries:
		"""Series without its first ``start`` measurements."""
		return MeasurementSeries(
			name=self.name,
			params=dict(self.params),
			cadence=self.cadence,
			values=self.values[start:],
			sweep_indices=self.sweep_indices[start:],
			labels=dict(self.labels),
		)

	def __len__(self) -> int:
		return len(self.values)


@dataclass
class FitResult:
	parameters: dict[str, float]
	errors: dict[str, float]
	window: dict[str, Any]
	quality: float
	ok: bool = True
	diagnostic: str | None = None
	details: dict[str, Any] = field(default_factory=dict)

	@classmethod
	def failure(cls, diagnostic: str, window: dict[str, Any] | None = None) -> FitResult:
		logger.info("Fit failed: %s", diagnostic)
		return cls(parameters={}, errors={}, window=window or {}, quality=math.nan, ok=False, diagnostic=diagnostic)

	def as_dict(self) -> dict[str, Any]:
		return {
			"ok": self.ok,
			"parameters": self.parameters,
			"errors": self.errors,
			"window": self.window,
			"quality": self.quality,
			"diagnostic": self.diagnostic,
			"details": self.details,
		}


def plaquette_average(cfg: Configuration) -> float:
	"""Mean of Re Tr U_p / N over all plaquettes."""
	return float(np.mean(plaquette_traces(cfg)) / cfg.group.matrix_order)


def wilson_loop_trace(cfg: Configuration, spec: LoopSpec) -> complex:
	"""Tr of the ordered product around the loop."""
	path = loop_links(cfg.shape, spec)
	geometry = cfg.geometry
	links = np.array([[geometry.link_id(directed.link) for directed in path]])
	reversed_flags = np.array([[directed.reversed for directed in path]])
	product = path_products(cfg, links, reversed_flags)[0]
	return complex(np.trace(product))


def wilson_loop(cfg: Configuration, spec: LoopSpec) -> float:
	return wilson_loop_trace(cfg, spec).real


def loop_trace_average(cfg: Configuration, r: int, t: int, planes: Sequence[tuple[int, int]] | None = None) -> complex:
	"""
	Trace of the R x T loop averaged over every translation that fits
	and over the given planes (all planes by default). R runs along the first
	axis of the plane, T along the second.
	"""
	planes = list(planes or cfg.shape.planes)
	total = 0j
	count = 0
	for plane in planes:
		check_loop_size(cfg.shape, tuple(plane), r, t)  # type: ignore[arg-type]
		paths = loop_paths(cfg.shape, rectangle_steps(tuple(plane), r, t))  # type: ignore[arg-type]
		if not len(paths.starts):
			continue
		traces = np.trace(path_products(cfg, paths.links, paths.reversed), axis1=-2, axis2=-1)
		total += complex(traces.sum())
		count += len(traces)
	if not count:
		raise UsageError(f"No {r}x{t} loop fits on lattice {cfg.shape}")
	return total / count


def loop_measurements(cfg: Configuration, r_max: int, t_max: int, planes: Sequence[tuple[int, int]] | None = None) -> list[Measurement]:
	"""Real and imaginary parts of the averaged R x T loops, 1 <= R <= r_max, 1 <= T <= t_max."""
	measurements = []
	for r in range(1, r_max + 1):
		for t in range(1, t_max + 1):
			value = loop_trace_average(cfg, r, t, planes)
			labels = {"R": r, "T": t}
			measurements.append(Measurement("wilson_loop", value.real, labels))
			measurements.append(Measurement("wilson_loop_imag", value.imag, labels))
	return measurements


def check_correlation_separations(shape: LatticeShape, separations: Iterable[int], axis: int | None = None) -> int:
	axis = shape.ndims - 1 if axis is None else axis
	if not 0 <= axis < shape.ndims:
		raise UsageError(f"Invalid correlation axis {axis}")
	extent = shape.extents[axis]
	limit = extent // 2 if shape.is_periodic else min(extent // 2, extent - 2)
	for separation in separations:
		if not 0 <= separation <= limit:
			raise UsageError(f"Correlation separation {separation} outside 0..{limit} for extent {extent} along axis {axis}")
	return axis


def correlation_pairs(shape: LatticeShape, separation: int, axis: int) -> tuple[np.ndarray, np.ndarray]:
	"""
	Plaquette ids (p, q) with q the same-plane plaquette ``separation`` steps along ``axis`` from p,
	in the order of (site, plane) of p.
	"""
	geometry = get_geometry(shape)
	partner = geometry.shifted_sites(axis, separation)
	first = geometry.plaquette_at
	second = np.where(partner[:, None] >= 0, geometry.plaquette_at[np.where(partner >= 0, partner, 0)], -1)
	keep = (first >= 0) & (second >= 0)
	return first[keep], second[keep]


def plaquette_correlation_measurements(cfg: Configuration, separations: Sequence[int], axis: int | None = None) -> list[Measurement]:
	"""
	Per configuration averages of W_p(y) W_p(y + x e_axis) over all y and planes
	where both plaquettes exist. Combined with the plaquette series they give
	the connected correlation function.
	"""
	axis = check_correlation_separations(cfg.shape, separations, axis)
	traces = plaquette_traces(cfg) / cfg.group.matrix_order
	measurements = []
	for separation in separations:
		first, second = correlation_pairs(cfg.shape, separation, axis)
		measurements.append(Measurement("plaquette_product", float(np.mean(traces[first] * traces[second])), {"x": int(separation)}))
	return measurements


@dataclass
class LoopTable:
	group_order: int
	means: dict[tuple[int, int], float]
	errors: dict[tuple[int, int], float]
	replicates: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
	imaginary: dict[tuple[int, int], float] = field(default_factory=dict)
	bin_size: int = 1

	@classmethod
	def from_values(
		cls, values: Mapping[tuple[int, int], float], group_order: int = 1, errors: Mapping[tuple[int, int], float] | None = None
	) -> LoopTable:
		"""Table of exactly known or synthetic loop values."""
		means = {(int(r), int(t)): float(value) for (r, t), value in values.items()}
		return cls(group_order=group_order, means=means, errors={key: float((errors or {}).get(key, 0.0)) for key in means})

	@property
	def entries(self) -> list[tuple[int, int]]:
		return sorted(self.means)

	def normalized(self, r: int, t: int) -> tuple[float, float]:
		"""Mean and error of W(R, T) / N."""
		return self.means[(r, t)] / self.group_order, self.errors.get((r, t), 0.0) / self.group_order

	def replicate_matrix(self, keys: Sequence[tuple[int, int]]) -> np.ndarray | None:
		if not keys or any(key not in self.replicates for key in keys):
			return None
		return np.stack([self.replicates[key] for key in keys], axis=1)

	def as_records(self) -> list[dict[str, Any]]:
		return [
			{
				"R": r,
				"T": t,
				"mean": self.means[(r, t)],
				"error": self.errors.get((r, t), 0.0),
				"imaginary": self.imaginary.get((r, t), 0.0),
			}
			for r, t in self.entries
		]


def loop_expectation_table(
	series: Mapping[str, MeasurementSeries], r_max: int, t_max: int, bin_size: int = 1, group_order: int = 1
) -> LoopTable:
	"""
	Means, jackknife errors and replicates of the measured loops up to r_max x t_max.
	"""
	if r_max < 1 or t_max < 1:
		raise UsageError(f"Loop table needs r_max, t_max >= 1, got {r_max}, {t_max}")
	table = LoopTable(group_order=group_order, means={}, errors={}, bin_size=bin_size)
	for r in range(1, r_max + 1):
		for t in range(1, t_max + 1):
			key = format_label("wilson_loop", {"R": r, "T": t})
			if key not in series:
				raise UsageError(f"No measurements of {key}")
			replicates = jackknife_replicates(series[key], bin_size)
			table.means[(r, t)] = float(bin_series(series[key], bin_size).bin_means.mean())
			table.errors[(r, t)] = jackknife_error(replicates)
			table.replicates[(r, t)] = replicates
			imaginary = series.get(format_label("wilson_loop_imag", {"R": r, "T": t}))
			if imaginary is not None and len(imaginary):
				table.imaginary[(r, t)] = float(np.mean(series_values(imaginary)))
	return table


def _creutz_value(w_rt: Any, w_r1t1: Any, w_rt1: Any, w_r1t: Any) -> Any:
	return -np.log(w_rt * w_r1t1 / (w_rt1 * w_r1t))


def creutz_ratio(table: LoopTable, r: int, t: int) -> tuple[float, float]:
	"""
	chi(R, T) = -log(W(R,T) W(R-1,T-1) / (W(R,T-1) W(R-1,T))) and its jackknife error.
	"""
	if r < 2 or t < 2:
		raise UsageError(f"Creutz ratio needs R, T >= 2, got {r}, {t}")
	keys = [(r, t), (r - 1, t - 1), (r, t - 1), (r - 1, t)]
	missing = [key for key in keys if key not in table.means]
	if missing:
		raise UsageError(f"Loop table lacks entries {missing}")
	values = [table.means[key] for key in keys]
	if any(value <= 0 for value in values):
		raise UndefinedRatioError(f"Creutz ratio chi({r},{t}) undefined, non positive loop expectation among {dict(zip(keys, values))}")
	chi = float(_creutz_value(*values))
	matrix = table.replicate_matrix(keys)
	if matrix is None:
		return chi, 0.0
	if np.any(matrix <= 0):
		logger.warning("Non positive jackknife replicate for chi(%d,%d), error undefined", r, t)
		return chi, math.nan
	return chi, jackknife_error(_creutz_value(*matrix.T))


def _linear_fit(design: np.ndarray, y: np.ndarray, sigma: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, float]:
	"""Least squares with optional absolute errors, returns coefficients, covariance and chi^2 per degree of freedom."""
	weighted = sigma is not None and bool(np.all(sigma > 0)) and bool(np.all(np.isfinite(sigma)))
	weights = 1 / sigma if weighted else np.ones(len(y))  # type: ignore[operator]
	scaled = design * weights[:, None]
	target = y * weights
	coefficients, *_ = np.linalg.lstsq(scaled, target, rcond=None)
	residuals = target - scaled @ coefficients
	dof = len(y) - design.shape[1]
	chi2 = float(residuals @ residuals)
	normal = np.linalg.pinv(scaled.T @ scaled)
	quality = chi2 / dof if dof > 0 else 0.0
	covariance = normal if weighted else normal * quality
	return coefficients, covariance, quality


def _jackknife_or_covariance(replicate_values: np.ndarray | None, covariance_error: float) -> float:
	if replicate_values is None:
		return covariance_error
	if not np.all(np.isfinite(replicate_values)):
		return math.nan
	return jackknife_error(replicate_values)


def effective_potentials(table: LoopTable, r: int) -> list[dict[str, float]]:
	"""
	Local slopes V_eff(R, T) = log(W(R,T) / W(R,T+1)) over consecutive T.
	"""
	ts = sorted(t for rr, t in table.means if rr == r)
	result = []
	for t, t_next in zip(ts, ts[1:]):
		w, w_next = table.means[(r, t)], table.means[(r, t_next)]
		if w <= 0 or w_next <= 0:
			break
		value = math.log(w / w_next) / (t_next - t)
		matrix = table.replicate_matrix([(r, t), (r, t_next)])
		error = 0.0
		if matrix is not None:
			with np.errstate(divide="ignore", invalid="ignore"):
				replicate_values = np.log(matrix[:, 0] / matrix[:, 1]) / (t_next - t)
			error = _jackknife_or_covariance(replicate_values, 0.0)
		result.append({"T": t, "value": value, "error": error})
	return result


def static_potential(table: LoopTable, r: int, window: tuple[int, int] | None = None) -> FitResult:
	"""
	Fit -log W(R, T) = V(R) T + c over a window of T.

	Without an explicit window the smallest T is excluded and the window starts
	at the first T from which all effective potentials agree within 2 sigma.
	Returns a failed FitResult when no such plateau exists.
	"""
	ts = sorted(t for rr, t in table.means if rr == r)
	if len(ts) < 3:
		raise UsageError(f"Static potential at R={r} needs at least 3 values of T, got {len(ts)}")
	usable = []
	for t in ts:
		if table.means[(r, t)] <= 0:
			break
		usable.append(t)
	if window is not None:
		chosen = [t for t in usable if window[0] <= t <= window[1]]
	else:
		effective = effective_potentials(table, r)
		chosen = []
		# A plateau spans at least two effective potentials when the table allows it
		for start in range(1, max(2, len(effective) - 1)):
			segment = effective[start:]
			if _is_plateau(segment):
				chosen = usable[start : start + len(segment) + 1]
				break
		if not chosen:
			return FitResult.failure(f"no stable plateau of the effective potential at R={r}", {"R": r, "T": usable})
	if len(chosen) < 2:
		return FitResult.failure(f"fewer than 2 usable values of T at R={r}", {"R": r, "T": chosen})

	keys = [(r, t) for t in chosen]
	t_values = np.array(chosen, dtype=float)
	y = -np.log([table.means[key] for key in keys])
	matrix = table.replicate_matrix(keys)
	sigma = None
	replicate_slopes = None
	design = np.column_stack([t_values, np.ones_like(t_values)])
	if matrix is not None:
		with np.errstate(divide="ignore", invalid="ignore"):
			replicate_y = -np.log(matrix)
		sigma = np.array([jackknife_error(column) if np.all(np.isfinite(column)) else math.nan for column in replicate_y.T])
		if np.all(np.isfinite(replicate_y)):
			replicate_slopes = np.array([_linear_fit(design, row, sigma)[0][0] for row in replicate_y])
		else:
			replicate_slopes = np.full(len(replicate_y), math.nan)
	coefficients, covariance, quality = _linear_fit(design, y, sigma)
	error = _jackknife_or_covariance(replicate_slopes, float(math.sqrt(max(covariance[0, 0], 0.0))))
	return FitResult(
		parameters={"V": float(coefficients[0]), "c": float(coefficients[1])},
		errors={"V": error, "c": float(math.sqrt(max(covariance[1, 1], 0.0)))},
		window={"R": r, "T": chosen},
		quality=quality,
	)


def _is_plateau(segment: list[dict[str, float]]) -> bool:
	for index, first in enumerate(segment):
		for second in segment[index + 1 :]:
			scale = max(1.0, abs(first["value"]), abs(second["value"]))
			tolerance = PLATEAU_SIGNIFICANCE * math.hypot(first["error"], second["error"]) + EXACT_TOLERANCE * scale
			if not abs(first["value"] - second["value"]) <= tolerance:
				return False
	return True


def string_tension_fit(potentials: Mapping[int, FitResult]) -> FitResult:
	"""
	Linear fit V(R) = sigma R + V0 to successful static potential fits.
	"""
	points = sorted((r, fit) for r, fit in potentials.items() if fit.ok)
	if len(points) < 2:
		return FitResult.failure("fewer than 2 successful static potential fits")
	r_values = np.array([r for r, _ in points], dtype=float)
	v_values = np.array([fit.parameters["V"] for _, fit in points])
	sigma = np.array([fit.errors.get("V", 0.0) for _, fit in points])
	design = np.column_stack([r_values, np.ones_like(r_values)])
	coefficients, covariance, quality = _linear_fit(design, v_values, sigma)
	return FitResult(
		parameters={"sigma": float(coefficients[0]), "V0": float(coefficients[1])},
		errors={"sigma": float(math.sqrt(max(covariance[0, 0], 0.0))), "V0": float(math.sqrt(max(covariance[1, 1], 0.0)))},
		window={"R": [int(r) for r in r_values]},
		quality=quality,
	)


@dataclass
class CorrelationEstimate:
	separations: list[int]
	values: np.ndarray
	errors: np.ndarray
	replicates: np.ndarray | None = None

	def as_records(self) -> list[dict[str, float]]:
		return [
			{"x": int(x), "f": float(value), "error": float(error)} for x, value, error in zip(self.separations, self.values, self.errors)
		]


def plaquette_correlation(series: Mapping[str, MeasurementSeries], separations: Sequence[int], bin_size: int = 1) -> CorrelationEstimate:
	"""
	Connected correlation f(x) = <W_p(y) W_p(y + x)> - <W_p>^2 with jackknife errors.
	Needs the ``plaquette`` series and one ``plaquette_product`` series per separation.
	"""
	if "plaquette" not in series:
		raise UsageError("Connected correlation needs the plaquette series")
	mean_replicates = jackknife_replicates(series["plaquette"], bin_size)
	mean = float(bin_series(series["plaquette"], bin_size).bin_means.mean())
	values, errors, columns = [], [], []
	for separation in separations:
		key = format_label("plaquette_product", {"x": int(separation)})
		if key not in series:
			raise UsageError(f"No measurements of {key}")
		product_replicates = jackknife_replicates(series[key], bin_size)
		product = float(bin_series(series[key], bin_size).bin_means.mean())
		replicate_values = product_replicates - mean_replicates**2
		values.append(product - mean**2)
		errors.append(jackknife_error(replicate_values))
		columns.append(replicate_values)
	return CorrelationEstimate(
		separations=[int(x) for x in separations],
		values=np.array(values),
		errors=np.array(errors),
		replicates=np.stack(columns, axis=1) if columns else None,
	)


def mass_gap_fit(correlation: CorrelationEstimate, window: tuple[int, int] | None = None) -> FitResult:
	"""
	Fit log f(x) = -|x| / xi + c.

	x = 0 is never used. Points must have f > 2 sigma. Without an explicit window
	the smallest remaining |x| is dropped when at least 3 points stay.
	Fewer than 3 usable points give a failed FitResult.
	"""
	x = np.abs(np.array(correlation.separations))
	f = np.asarray(correlation.values, dtype=float)
	sigma = np.asarray(correlation.errors, dtype=float)
	usable = (x > 0) & (f > 0) & ((sigma == 0) | (f > SIGNAL_SIGNIFICANCE * sigma))
	if window is not None:
		usable &= (x >= window[0]) & (x <= window[1])
	indices = np.nonzero(usable)[0]
	indices = indices[np.argsort(x[indices], kind="stable")]
	if window is None and len(indices) > 3:
		indices = indices[1:]
	if len(indices) < 3:
		return FitResult.failure(f"fewer than 3 usable separations ({len(indices)})", {"x": [int(v) for v in x[indices]]})
	xs = x[indices].astype(float)
	log_f = np.log(f[indices])
	log_sigma = sigma[indices] / f[indices] if np.all(sigma[indices] > 0) else None
	design = np.column_stack([xs, np.ones_like(xs)])
	coefficients, covariance, quality = _linear_fit(design, log_f, log_sigma)
	slope = float(coefficients[0])
	if slope >= 0:
		return FitResult.failure("correlation does not decay", {"x": [int(v) for v in xs]})
	xi = -1.0 / slope
	covariance_error = math.sqrt(max(covariance[0, 0], 0.0)) / slope**2
	replicate_xi = None
	if correlation.replicates is not None:
		columns = correlation.replicates[:, indices]
		if np.all(columns > 0):
			slopes = np.array([_linear_fit(design, np.log(row), log_sigma)[0][0] for row in columns])
			with np.errstate(divide="ignore"):
				replicate_xi = np.where(slopes < 0, -1.0 / slopes, math.nan)
		else:
			replicate_xi = np.full(len(columns), math.nan)
	error = _jackknife_or_covariance(replicate_xi, covariance_error)
	return FitResult(
		parameters={"xi": xi, "mass": 1.0 / xi, "c": float(coefficients[1])},
		errors={"xi": error, "mass": error / xi**2 if math.isfinite(error) else math.nan},
		window={"x": [int(v) for v in xs]},
		quality=quality,
	)


def perimeter_area_fit(table: LoopTable, entries: Sequence[tuple[int, int]] | None = None) -> FitResult:
	"""
	Fit log W(R, T) = a - c (R + T) - d R T over the entries with positive expectation.
	The table holds plain traces, so a carries the log N of a cold configuration.
	"""
	keys = [key for key in (entries or table.entries) if table.means.get(key, 0.0) > 0]
	if len(keys) < 6:
		raise UsageError(f"Perimeter-area fit needs at least 6 usable loop entries, got {len(keys)}")
	r = np.array([key[0] for key in keys], dtype=float)
	t = np.array([key[1] for key in keys], dtype=float)
	design = np.column_stack([np.ones_like(r), -(r + t), -(r * t)])
	if np.linalg.matrix_rank(design) < 3:
		raise UsageError("Perimeter-area fit is rank deficient for the chosen loop entries")
	means = np.array([table.means[key] for key in keys])
	errors = np.array([table.errors.get(key, 0.0) for key in keys])
	log_w = np.log(means)
	sigma = errors / means if np.all(errors > 0) else None
	coefficients, covariance, quality = _linear_fit(design, log_w, sigma)
	names = ("a", "c", "d")
	parameter_errors = {name: float(math.sqrt(max(covariance[index, index], 0.0))) for index, name in enumerate(names)}
	matrix = table.replicate_matrix(keys)
	if matrix is not None:
		if np.all(matrix > 0):
			refits = np.array([_linear_fit(design, np.log(row), sigma)[0] for row in matrix])
			parameter_errors = {name: jackknife_error(refits[:, index]) for index, name in enumerate(names)}
		else:
			parameter_errors = {name: math.nan for name in names}
	residuals = log_w - design @ coefficients
	return FitResult(
		parameters={name: float(value) for name, value in zip(names, coefficients)},
		errors=parameter_errors,
		window={"entries": [[int(a), int(b)] for a, b in keys]},
		quality=quality,
		details={"max_residual": float(np.max(np.abs(residuals)))},
	)
