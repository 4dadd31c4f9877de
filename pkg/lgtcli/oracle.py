# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

exact and deterministic reference values

Exact Z2 enumeration on tiny lattices, single plaquette expectations by
adaptive quadrature, leading order area law predictions and the comparison
of the lattice action of a discretised smooth connection with its continuum
Yang-Mills action.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol, Sequence

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]
from scipy import integrate

from lgtcli.group_algebra import GroupId, algebra_basis, dagger, exp_algebra
from lgtcli.lattice_geometry import LatticeShape, check_loop_size, get_geometry, loop_paths, rectangle_steps
from lgtcli.observables import check_correlation_separations, correlation_pairs
from lgtcli.types import UsageError

logger = get_logger("lgtcli")

MAX_ENUMERATION_LINKS = 24
ENUMERATION_CHUNK = 1 << 16
QUADRATURE_TOLERANCE = 1e-13
QUADRATURE_LIMIT = 400
SUPPORTED_QUADRATURE = (GroupId.Z2, GroupId.U1, GroupId.SU2)


class TinyQuantity(str, Enum):
	PLAQUETTE = "plaquette"
	WILSON_LOOP = "wilson_loop"
	CORRELATION = "correlation"


@dataclass(frozen=True)
class TinyObservable:
	"""
	Observable for exact enumeration. Loops are averaged over translations and
	the given planes (all planes when ``plane`` is None), correlations are the
	connected plaquette correlation at ``separation`` along ``axis``.
	"""

	quantity: TinyQuantity = TinyQuantity.PLAQUETTE
	r: int = 1
	t: int = 1
	plane: tuple[int, int] | None = None
	separation: int = 0
	axis: int | None = None


def _check_beta(beta: float) -> None:
	if not math.isfinite(beta) or beta < 0:
		raise UsageError(f"Coupling beta must be finite and non negative, got {beta}")


def _enumeration_chunk(
	start: int, stop: int, link_count: int, beta: float, plaquettes: np.ndarray, columns: list[Any]
) -> tuple[float, list[float]]:
	states = np.arange(start, stop, dtype=np.int64)
	spins = 1 - 2 * ((states[:, None] >> np.arange(link_count)) & 1).astype(np.int8)
	plaquette_values = spins[:, plaquettes].prod(axis=-1, dtype=np.int64)
	weights = np.exp(beta * (plaquette_values.sum(axis=1) - plaquettes.shape[0]))
	sums = [float(np.sum(weights * column(plaquette_values, spins))) for column in columns]
	return float(np.sum(weights)), sums


def exact_tiny_lattice(
	shape: LatticeShape, beta: float, observable: TinyObservable | None = None, group: GroupId | str = GroupId.Z2, workers: int = 1
) -> float:
	"""
	Exact expectation under the Gibbs measure exp(-beta S) by summing over all 2^L link states.

	Chunks are summed in a fixed order so the result does not depend on ``workers``.
	"""
	group = GroupId.parse(group)
	if group is not GroupId.Z2:
		raise UsageError(f"Exact enumeration is available for Z2 only, got {group.value}")
	_check_beta(beta)
	observable = observable or TinyObservable()
	geometry = get_geometry(shape)
	link_count = geometry.link_count
	if link_count > MAX_ENUMERATION_LINKS:
		raise UsageError(f"Lattice {shape} has {link_count} links, enumeration is limited to {MAX_ENUMERATION_LINKS}")
	plaquettes = geometry.plaquette_links
	if not len(plaquettes):
		raise UsageError(f"Lattice {shape} has no plaquettes")

	columns: list[Any] = []
	if observable.quantity is TinyQuantity.PLAQUETTE:
		columns.append(lambda values, spins: values.mean(axis=1))
	elif observable.quantity is TinyQuantity.WILSON_LOOP:
		planes = [observable.plane] if observable.plane else shape.planes
		link_sets = []
		for plane in planes:
			check_loop_size(shape, plane, observable.r, observable.t)
			paths = loop_paths(shape, rectangle_steps(plane, observable.r, observable.t))
			if len(paths.starts):
				link_sets.append(paths.links)
		if not link_sets:
			raise UsageError(f"No {observable.r}x{observable.t} loop fits on lattice {shape}")
		loops = np.concatenate(link_sets)
		columns.append(lambda values, spins: spins[:, loops].prod(axis=-1, dtype=np.int64).mean(axis=1))
	else:
		axis = check_correlation_separations(shape, [observable.separation], observable.axis)
		first, second = correlation_pairs(shape, observable.separation, axis)
		if not len(first):
			raise UsageError(f"No plaquette pairs at separation {observable.separation} on lattice {shape}")
		columns.append(lambda values, spins: values.mean(axis=1))
		columns.append(lambda values, spins: (values[:, first] * values[:, second]).mean(axis=1))

	bounds = [(start, min(start + ENUMERATION_CHUNK, 1 << link_count)) for start in range(0, 1 << link_count, ENUMERATION_CHUNK)]

	def run(bound: tuple[int, int]) -> tuple[float, list[float]]:
		return _enumeration_chunk(bound[0], bound[1], link_count, beta, plaquettes, columns)

	if workers > 1 and len(bounds) > 1:
		with ThreadPoolExecutor(max_workers=workers) as executor:
			partials = list(executor.map(run, bounds))
	else:
		partials = [run(bound) for bound in bounds]
	partition = math.fsum(partial[0] for partial in partials)
	expectations = [math.fsum(partial[1][index] for partial in partials) / partition for index in range(len(columns))]
	logger.debug("Enumerated %d states of %s at beta=%s", 1 << link_count, shape, beta)
	if observable.quantity is TinyQuantity.CORRELATION:
		return expectations[1] - expectations[0] ** 2
	return expectations[0]


def _quadrature(function: Any, upper: float, beta: float) -> float:
	points = [upper / (1 + math.sqrt(beta))] if beta > 1 else None
	value, _error = integrate.quad(
		function, 0.0, upper, epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE, limit=QUADRATURE_LIMIT, points=points
	)
	return float(value)


def single_plaquette_expectation(group: GroupId | str, beta: float) -> float:
	"""
	w1(beta) = <Re Tr U_p / N> for one plaquette variable distributed as exp(beta Re Tr U_p) times Haar measure.

	Z2 is tanh(beta). U1 and SU2 integrate over the class angle with the weights
	exp(beta (cos t - 1)) and sin^2 t exp(2 beta (cos t - 1)).
	"""
	group = GroupId.parse(group)
	_check_beta(beta)
	if group not in SUPPORTED_QUADRATURE:
		raise UsageError(f"Single plaquette expectation is not available for {group.value}, supported: Z2, U1, SU2")
	if beta == 0:
		return 0.0
	if group is GroupId.Z2:
		return math.tanh(beta)
	if group is GroupId.U1:
		numerator = _quadrature(lambda angle: math.cos(angle) * math.exp(beta * (math.cos(angle) - 1)), math.pi, beta)
		denominator = _quadrature(lambda angle: math.exp(beta * (math.cos(angle) - 1)), math.pi, beta)
	else:
		numerator = _quadrature(
			lambda angle: math.cos(angle) * math.sin(angle) ** 2 * math.exp(2 * beta * (math.cos(angle) - 1)), math.pi, 2 * beta
		)
		denominator = _quadrature(lambda angle: math.sin(angle) ** 2 * math.exp(2 * beta * (math.cos(angle) - 1)), math.pi, 2 * beta)
	return numerator / denominator


def _check_loop_extents(r: int, t: int) -> None:
	if r < 1 or t < 1:
		raise UsageError(f"Loop extents must be positive, got {r}x{t}")


def two_dim_exact_loop(group: GroupId | str, beta: float, r: int, t: int) -> float:
	"""<W(R,T)> / N = w1^(R T) on an open two dimensional lattice."""
	_check_loop_extents(r, t)
	return single_plaquette_expectation(group, beta) ** (r * t)


def strong_coupling_leading(group: GroupId | str, beta: float, r: int, t: int) -> float:
	"""
	Leading strong coupling prediction w1^(R T) for the minimal tiling of the loop.
	Corrections are of relative order beta^2 in three and four dimensions.
	"""
	_check_loop_extents(r, t)
	return single_plaquette_expectation(group, beta) ** (r * t)


class Coefficient(Protocol):
	def value(self, points: np.ndarray) -> np.ndarray: ...

	def derivative(self, points: np.ndarray, axis: int) -> np.ndarray: ...


@dataclass(frozen=True)
class PolynomialCoefficient:
	"""Sum of monomials, ``terms`` maps exponent tuples to coefficients."""

	terms: tuple[tuple[tuple[int, ...], float], ...]

	@classmethod
	def from_dict(cls, terms: dict[tuple[int, ...], float]) -> PolynomialCoefficient:
		return cls(tuple(sorted(terms.items())))

	def value(self, points: np.ndarray) -> np.ndarray:
		total = np.zeros(points.shape[:-1])
		for exponents, coefficient in self.terms:
			total = total + coefficient * np.prod(points ** np.array(exponents), axis=-1)
		return total

	def partial(self, axis: int) -> PolynomialCoefficient:
		terms: dict[tuple[int, ...], float] = {}
		for exponents, coefficient in self.terms:
			if exponents[axis] == 0:
				continue
			lowered = tuple(e - 1 if index == axis else e for index, e in enumerate(exponents))
			terms[lowered] = terms.get(lowered, 0.0) + coefficient * exponents[axis]
		return PolynomialCoefficient.from_dict(terms)

	def derivative(self, points: np.ndarray, axis: int) -> np.ndarray:
		return self.partial(axis).value(points)


@dataclass(frozen=True)
class TrigCoefficient:
	"""amplitude * sin(k . x + phase)"""

	amplitude: float
	wavevector: tuple[float, ...]
	phase: float = 0.0

	def value(self, points: np.ndarray) -> np.ndarray:
		return self.amplitude * np.sin(points @ np.array(self.wavevector) + self.phase)

	def derivative(self, points: np.ndarray, axis: int) -> np.ndarray:
		return self.amplitude * self.wavevector[axis] * np.cos(points @ np.array(self.wavevector) + self.phase)


@dataclass(frozen=True)
class SumCoefficient:
	terms: tuple[Coefficient, ...]

	def value(self, points: np.ndarray) -> np.ndarray:
		return sum((term.value(points) for term in self.terms), np.zeros(points.shape[:-1]))

	def derivative(self, points: np.ndarray, axis: int) -> np.ndarray:
		return sum((term.derivative(points, axis) for term in self.terms), np.zeros(points.shape[:-1]))


@dataclass(frozen=True)
class SmoothConnection:
	"""
	Connection form A_j(x) = sum_a f_ja(x) B_a with closed form coefficients f_ja
	and the anti-Hermitian algebra basis B_a of the group.
	"""

	name: str
	group: GroupId
	ndims: int
	components: tuple[tuple[Coefficient, ...], ...]

	def __post_init__(self) -> None:
		if self.group is GroupId.Z2:
			raise UsageError("Smooth connections need a continuous gauge group")
		if len(self.components) != self.ndims:
			raise UsageError(f"Connection {self.name} has {len(self.components)} components for {self.ndims} dimensions")
		for component in self.components:
			if len(component) != self.group.generator_count:
				raise UsageError(f"Every component of a {self.group.value} connection needs {self.group.generator_count} coefficients")

	def _points(self, points: np.ndarray) -> np.ndarray:
		points = np.asarray(points, dtype=float)
		if points.shape[-1] != self.ndims:
			raise UsageError(f"Connection {self.name} is defined in {self.ndims} dimensions, got points of dimension {points.shape[-1]}")
		return points

	def potential(self, points: np.ndarray) -> np.ndarray:
		"""A_j at every point, shape (..., ndims, N, N)."""
		points = self._points(points)
		coefficients = np.stack([np.stack([f.value(points) for f in component], axis=-1) for component in self.components], axis=-2)
		return np.tensordot(coefficients, algebra_basis(self.group), axes=1)

	def derivative(self, points: np.ndarray) -> np.ndarray:
		"""d_j A_k at every point, shape (..., ndims, ndims, N, N) indexed [j, k]."""
		points = self._points(points)
		coefficients = np.stack(
			[
				np.stack([np.stack([f.derivative(points, j) for f in component], axis=-1) for component in self.components], axis=-2)
				for j in range(self.ndims)
			],
			axis=-3,
		)
		return np.tensordot(coefficients, algebra_basis(self.group), axes=1)

	def gauge_shifted(self, gauge_function: PolynomialCoefficient) -> SmoothConnection:
		"""Abelian gauge transform A_j -> A_j + i d_j lambda."""
		if self.group is not GroupId.U1:
			raise UsageError("Closed form gauge shifts are available for U1 connections only")
		components = tuple(
			(SumCoefficient((component[0], gauge_function.partial(axis))),) for axis, component in enumerate(self.components)
		)
		return SmoothConnection(f"{self.name}+gauge", self.group, self.ndims, components)


class CurvatureEvaluator:
	def __init__(self, connection: SmoothConnection) -> None:
		self.connection = connection

	def field_strength(self, points: np.ndarray) -> np.ndarray:
		"""F_jk = d_j A_k - d_k A_j + [A_j, A_k], shape (..., ndims, ndims, N, N)."""
		potential = self.connection.potential(points)
		derivative = self.connection.derivative(points)
		a_j = potential[..., :, None, :, :]
		a_k = potential[..., None, :, :, :]
		return derivative - np.swapaxes(derivative, -3, -4) + a_j @ a_k - a_k @ a_j

	def action_density(self, points: np.ndarray) -> np.ndarray:
		"""-sum over j, k of Tr F_jk^2."""
		strength = self.field_strength(points)
		return -np.einsum("...jkab,...jkba->...", strength, strength).real


def catalog_connection(name: str, ndims: int = 2) -> SmoothConnection:
	"""
	Built in connections: ``flat`` (SU2, A = 0), ``abelian-constant`` (U1,
	A_1 = 2 i x_0, constant curvature), ``su2-trig``, ``su2-polynomial`` and ``su3-trig``.
	"""
	if not 2 <= ndims <= 4:
		raise UsageError(f"Connection dimension must be between 2 and 4, got {ndims}")
	axes = range(ndims)

	def unit(axis: int) -> tuple[int, ...]:
		return tuple(1 if index == axis else 0 for index in axes)

	if name == "flat":
		zero = PolynomialCoefficient(())
		return SmoothConnection(name, GroupId.SU2, ndims, tuple((zero,) * 3 for _ in axes))
	if name == "abelian-constant":
		components = [(PolynomialCoefficient(()),) for _ in axes]
		components[1] = (PolynomialCoefficient.from_dict({unit(0): 2.0}),)
		return SmoothConnection(name, GroupId.U1, ndims, tuple(components))
	if name in ("su2-trig", "su3-trig"):
		group = GroupId.SU2 if name == "su2-trig" else GroupId.SU3
		amplitude = 0.4 if group is GroupId.SU2 else 0.3
		trig_components = tuple(
			tuple(
				TrigCoefficient(
					amplitude=amplitude,
					wavevector=tuple(math.pi * (1 + (j + a) % 2) if index == (j + a) % ndims else 0.0 for index in axes),
					phase=0.3 * (a + 1) + 0.2 * j,
				)
				for a in range(group.generator_count)
			)
			for j in axes
		)
		return SmoothConnection(name, group, ndims, trig_components)
	if name == "su2-polynomial":
		polynomial_components = tuple(
			tuple(
				PolynomialCoefficient.from_dict(
					{
						tuple(0 for _ in axes): 0.1 * (a + 1),
						unit((j + a + 1) % ndims): 0.5 - 0.1 * j,
						tuple(2 if index == (j + a) % ndims else 0 for index in axes): 0.3,
					}
				)
				for a in range(3)
			)
			for j in axes
		)
		return SmoothConnection(name, GroupId.SU2, ndims, polynomial_components)
	raise UsageError(f"Unknown connection {name!r}, choose one of: {', '.join(CONNECTION_NAMES)}")


CONNECTION_NAMES = ("flat", "abelian-constant", "su2-trig", "su2-polynomial", "su3-trig")


@dataclass
class BchCheck:
	lattice_sum: float
	continuum_integral: float
	ratio: float
	max_plaquette_deviation: float
	epsilon: float
	plaquettes: int
	details: dict[str, Any] = field(default_factory=dict)

	def as_dict(self) -> dict[str, Any]:
		return {
			"epsilon": self.epsilon,
			"lattice_sum": self.lattice_sum,
			"continuum_integral": self.continuum_integral,
			"ratio": self.ratio,
			"max_plaquette_deviation": self.max_plaquette_deviation,
			"plaquettes": self.plaquettes,
			**self.details,
		}


def _grid_cells(box: Sequence[float], epsilon: float) -> list[int]:
	cells = []
	for extent in box:
		count = round(extent / epsilon)
		if count < 1 or abs(count * epsilon - extent) > 1e-9 * max(1.0, extent):
			raise UsageError(f"Spacing {epsilon} does not divide box extent {extent}")
		cells.append(int(count))
	return cells


def bch_action_check(conn: SmoothConnection, epsilon: float, box: Sequence[float]) -> BchCheck:
	"""
	Lattice action of the links U(x, x + eps e_j) = exp(eps A_j(x)) on a box
	with corner at the origin, compared with (eps^(4-n) / 4) S_YM(A), the
	continuum action integrated by the midpoint rule on the same grid.
	"""
	if len(box) != conn.ndims:
		raise UsageError(f"Box of dimension {len(box)} does not match connection {conn.name} of dimension {conn.ndims}")
	if not epsilon > 0:
		raise UsageError(f"Lattice spacing must be positive, got {epsilon}")
	cells = _grid_cells(box, epsilon)
	ndims = conn.ndims
	order = conn.group.matrix_order
	points = np.stack(np.meshgrid(*[np.arange(count + 1) * epsilon for count in cells], indexing="ij"), axis=-1)
	potential = conn.potential(points)
	links = [exp_algebra(conn.group, epsilon * potential[..., j, :, :]) for j in range(ndims)]
	curvature = CurvatureEvaluator(conn)

	def window(shift: int | None = None) -> tuple[slice, ...]:
		return tuple(slice(1, count + 1) if axis == shift else slice(0, count) for axis, count in enumerate(cells))

	plaquette_terms = []
	deviation = 0.0
	plaquette_count = 0
	for j in range(ndims):
		for k in range(j + 1, ndims):
			product = links[j][window()] @ links[k][window(j)] @ dagger(links[j][window(k)]) @ dagger(links[k][window()])
			lattice_terms = order - np.trace(product, axis1=-2, axis2=-1).real
			centres = points[window()] + epsilon / 2 * (np.eye(ndims)[j] + np.eye(ndims)[k])
			strength = curvature.field_strength(centres)[..., j, k, :, :]
			expected = -(epsilon**4) / 2 * np.einsum("...ab,...ba->...", strength, strength).real
			difference = np.abs(lattice_terms - expected)
			relative = np.where(np.abs(expected) > 0, difference / np.where(np.abs(expected) > 0, np.abs(expected), 1.0), difference)
			deviation = max(deviation, float(relative.max()))
			plaquette_terms.append(float(lattice_terms.sum()))
			plaquette_count += lattice_terms.size
	lattice_sum = math.fsum(plaquette_terms)

	cell_centres = points[window()] + epsilon / 2
	yang_mills = float(curvature.action_density(cell_centres).sum()) * epsilon**ndims
	continuum_integral = epsilon ** (4 - ndims) / 4 * yang_mills
	if continuum_integral == 0:
		ratio = 1.0 if lattice_sum == 0 else math.inf
	else:
		ratio = lattice_sum / continuum_integral
	logger.info("BCH check %s eps=%s: lattice %.10g continuum %.10g ratio %.10g", conn.name, epsilon, lattice_sum, continuum_integral, ratio)
	return BchCheck(
		lattice_sum=lattice_sum,
		continuum_integral=continuum_integral,
		ratio=ratio,
		max_plaquette_deviation=deviation,
		epsilon=epsilon,
		plaquettes=plaquette_count,
		details={"connection": conn.name, "group": conn.group.value, "box": [float(extent) for extent in box]},
	)


def abelian_constant_lattice_sum(curvature: float, epsilon: float, box: Sequence[float]) -> float:
	"""Closed form lattice action of the constant curvature U1 connection: one plaquette phase b eps^2 per cell."""
	cells = _grid_cells(box, epsilon)
	return float(np.prod(cells)) * (1 - math.cos(curvature * epsilon**2))


def convergence_orders(checks: Sequence[BchCheck]) -> list[float]:
	"""Observed orders log(|r_i - 1| / |r_i+1 - 1|) / log(eps_i / eps_i+1) of consecutive checks."""
	orders = []
	for coarse, fine in zip(checks, checks[1:]):
		coarse_error, fine_error = abs(coarse.ratio - 1), abs(fine.ratio - 1)
		if coarse_error == 0 or fine_error == 0:
			orders.append(math.inf)
			continue
		orders.append(math.log(coarse_error / fine_error) / math.log(coarse.epsilon / fine.epsilon))
	return orders
