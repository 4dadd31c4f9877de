# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

statistics of Markov chain time series
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.types import UsageError

if TYPE_CHECKING:
	from lgtcli.observables import MeasurementSeries

logger = get_logger("lgtcli")

MIN_SERIES_LENGTH = 100
WINDOW_FACTOR = 5.0
CUT_SIGNIFICANCE = 2.0


def series_values(series: MeasurementSeries | Sequence[float] | np.ndarray) -> np.ndarray:
	values = getattr(series, "values", series)
	array = np.asarray(values, dtype=float)
	if array.ndim != 1:
		raise UsageError(f"Expected a one dimensional series, got shape {array.shape}")
	return array


@dataclass(frozen=True)
class BinnedSeries:
	bin_size: int
	bin_means: np.ndarray
	source_length: int

	@property
	def bin_count(self) -> int:
		return len(self.bin_means)


def bin_series(series: MeasurementSeries | Sequence[float] | np.ndarray, bin_size: int) -> BinnedSeries:
	"""
	Means of consecutive, non overlapping blocks. A trailing partial block is dropped.
	"""
	values = series_values(series)
	if bin_size < 1:
		raise UsageError(f"Bin size must be positive, got {bin_size}")
	count = len(values) // bin_size
	means = values[: count * bin_size].reshape(count, bin_size).mean(axis=1) if count else np.zeros(0)
	return BinnedSeries(bin_size=bin_size, bin_means=means, source_length=len(values))


def jackknife_replicates(series: MeasurementSeries | Sequence[float] | np.ndarray, bin_size: int = 1) -> np.ndarray:
	"""Leave-one-bin-out means."""
	binned = bin_series(series, bin_size)
	if binned.bin_count < 2:
		raise UsageError(f"Jackknife needs at least 2 bins, got {binned.bin_count} (series length {binned.source_length}, bin size {bin_size})")
	means = binned.bin_means
	return (means.sum() - means) / (len(means) - 1)


def jackknife_error(replicates: np.ndarray | Sequence[float]) -> float:
	"""Jackknife standard error of any estimator from its leave-one-out replicates."""
	replicates = np.asarray(replicates, dtype=float)
	count = len(replicates)
	if count < 2:
		raise UsageError(f"Jackknife needs at least 2 replicates, got {count}")
	deviation = replicates - replicates.mean(axis=0)
	return float(np.sqrt((count - 1) / count * np.sum(deviation**2, axis=0)))


def jackknife_mean_error(series: MeasurementSeries | Sequence[float] | np.ndarray, bin_size: int = 1) -> tuple[float, float]:
	"""
	Mean and jackknife error of a series binned with ``bin_size``.
	The mean is taken over the binned part of the series.
	"""
	replicates = jackknife_replicates(series, bin_size)
	binned = bin_series(series, bin_size)
	return float(binned.bin_means.mean()), jackknife_error(replicates)


@dataclass(frozen=True)
class AutocorrelationResult:
	tau: float
	error: float
	window: int
	converged: bool = True
	diagnostic: str | None = None


def autocorrelation(series: MeasurementSeries | Sequence[float] | np.ndarray) -> np.ndarray:
	"""Normalised autocorrelation function rho(t), t = 0 .. n-1, computed with an FFT."""
	values = series_values(series)
	count = len(values)
	centered = values - values.mean()
	spectrum = np.fft.rfft(centered, 2 * count)
	covariance = np.fft.irfft(spectrum * np.conj(spectrum), 2 * count)[:count] / count
	if covariance[0] <= 0:
		return np.zeros(count)
	return covariance / covariance[0]


def integrated_autocorrelation_time(
	series: MeasurementSeries | Sequence[float] | np.ndarray, window_factor: float = WINDOW_FACTOR
) -> AutocorrelationResult:
	"""
	tau_int(W) = 1/2 + sum_{t=1..W} rho(t) with the window chosen as the smallest
	W satisfying W >= window_factor * tau_int(W). The error follows
	tau * sqrt(2 (2W + 1) / n).
	"""
	values = series_values(series)
	count = len(values)
	if count < MIN_SERIES_LENGTH:
		raise UsageError(f"Autocorrelation analysis needs at least {MIN_SERIES_LENGTH} measurements, got {count}")
	if np.ptp(values) == 0:
		return AutocorrelationResult(tau=0.5, error=0.0, window=0, converged=False, diagnostic="constant series, autocorrelation undefined")
	rho = autocorrelation(values)
	tau_of_window = 0.5 + np.cumsum(rho[1:])
	windows = np.arange(1, count)
	satisfied = np.nonzero(windows >= window_factor * tau_of_window)[0]
	if len(satisfied):
		window = int(windows[satisfied[0]])
		converged = True
		diagnostic = None
	else:
		window = count - 1
		converged = False
		diagnostic = "window condition never satisfied, series too short for its autocorrelation"
		logger.warning("Autocorrelation window did not converge for series of length %d", count)
	tau = float(tau_of_window[window - 1])
	error = tau * math.sqrt(2 * (2 * window + 1) / count)
	return AutocorrelationResult(tau=tau, error=error, window=window, converged=converged, diagnostic=diagnostic)


def default_bin_size(series: MeasurementSeries | Sequence[float] | np.ndarray) -> int:
	"""max(1, ceil(2 tau_int)), 1 for series too short to estimate tau_int."""
	values = series_values(series)
	if len(values) < MIN_SERIES_LENGTH:
		return 1
	tau = integrated_autocorrelation_time(values).tau
	return max(1, math.ceil(2 * tau))


@dataclass(frozen=True)
class ThermalizationCut:
	index: int
	capped: bool = False
	bin_size: int = 1


def thermalization_cut(series: MeasurementSeries | Sequence[float] | np.ndarray) -> ThermalizationCut:
	"""
	Smallest candidate cut after which the first and second half of the remaining
	series agree within 2 combined jackknife standard errors. Candidates are
	spaced by max(1, n // 200) and never exceed n / 2, the cut is capped and
	flagged when no candidate qualifies.
	"""
	values = series_values(series)
	count = len(values)
	if count < MIN_SERIES_LENGTH:
		raise UsageError(f"Thermalization analysis needs at least {MIN_SERIES_LENGTH} measurements, got {count}")
	if np.ptp(values) == 0:
		return ThermalizationCut(index=0)
	bin_size = default_bin_size(values[count // 2 :])
	stride = max(1, count // 200)
	for cut in range(0, count // 2 + 1, stride):
		remaining = values[cut:]
		half = len(remaining) // 2
		first, second = remaining[:half], remaining[half:]
		size = min(bin_size, max(1, half // 2))
		mean_first, error_first = jackknife_mean_error(first, size)
		mean_second, error_second = jackknife_mean_error(second, size)
		if abs(mean_first - mean_second) <= CUT_SIGNIFICANCE * math.hypot(error_first, error_second):
			logger.debug("Thermalization cut at %d of %d (bin size %d)", cut, count, size)
			return ThermalizationCut(index=cut, bin_size=size)
	logger.warning("No stationary tail found, thermalization cut capped at %d of %d measurements", count // 2, count)
	return ThermalizationCut(index=count // 2, capped=True, bin_size=bin_size)
