# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

lattice geometry

Sites are numbered in row-major order with the last axis running fastest.
Links are numbered in the order of (site, direction) over the links that
exist, plaquettes in the order of (site, plane) with planes (mu, nu), mu < nu,
in lexicographic order. Under periodic boundaries every site carries ndims
links and one plaquette per plane, under open boundaries links and
plaquettes that would leave the lattice are absent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.types import UsageError

logger = get_logger("lgtcli")

MAX_SITES = 2**31 - 1

Site = tuple[int, ...]


class Boundary(str, Enum):
	PERIODIC = "periodic"
	OPEN = "open"

	@classmethod
	def parse(cls, value: str | Boundary) -> Boundary:
		if isinstance(value, Boundary):
			return value
		try:
			return cls(str(value).strip().lower())
		except ValueError:
			raise UsageError(f"Unknown boundary {value!r}, choose one of: periodic, open") from None

	@property
	def code(self) -> int:
		return 0 if self is Boundary.PERIODIC else 1

	@classmethod
	def from_code(cls, code: int) -> Boundary:
		if code not in (0, 1):
			raise UsageError(f"Unknown boundary code {code}")
		return cls.PERIODIC if code == 0 else cls.OPEN


@dataclass(frozen=True)
class LatticeShape:
	ndims: int
	extents: tuple[int, ...]
	boundary: Boundary = Boundary.PERIODIC

	def __post_init__(self) -> None:
		try:
			extents = tuple(int(extent) for extent in self.extents)
		except (TypeError, ValueError):
			raise UsageError(f"Invalid lattice extents {self.extents!r}") from None
		object.__setattr__(self, "extents", extents)
		object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
		if not 2 <= self.ndims <= 4:
			raise UsageError(f"Lattice dimension must be between 2 and 4, got {self.ndims}")
		if len(extents) != self.ndims:
			raise UsageError(f"Expected {self.ndims} extents, got {len(extents)}")
		if any(extent < 2 for extent in extents):
			raise UsageError(f"Every lattice extent must be at least 2, got {extents}")
		if int(np.prod(extents, dtype=object)) > MAX_SITES:
			raise UsageError(f"Lattice {extents} has too many sites")

	@classmethod
	def hypercube(cls, ndims: int, extent: int, boundary: Boundary | str = Boundary.PERIODIC) -> LatticeShape:
		return cls(ndims, (extent,) * ndims, Boundary.parse(boundary))

	@property
	def site_count(self) -> int:
		return int(np.prod(self.extents))

	@property
	def is_periodic(self) -> bool:
		return self.boundary is Boundary.PERIODIC

	@property
	def planes(self) -> list[tuple[int, int]]:
		return list(itertools.combinations(range(self.ndims), 2))

	def __str__(self) -> str:
		return f"{'x'.join(str(extent) for extent in self.extents)} {self.boundary.value}"


@dataclass(frozen=True)
class LinkIndex:
	site: Site
	direction: int


@dataclass(frozen=True)
class DirectedLink:
	link: LinkIndex
	reversed: bool = False


@dataclass(frozen=True)
class PlaquetteIndex:
	site: Site
	plane: tuple[int, int]


@dataclass(frozen=True)
class Step:
	axis: int
	sign: int = 1

	def __post_init__(self) -> None:
		if self.sign not in (1, -1):
			raise UsageError(f"Step sign must be +1 or -1, got {self.sign}")

	def __str__(self) -> str:
		return f"{'+' if self.sign > 0 else '-'}{self.axis}"


@dataclass(frozen=True)
class LoopSpec:
	start: Site
	steps: tuple[Step, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class LoopPaths:
	"""All translations of a loop that fit on the lattice."""

	starts: np.ndarray
	links: np.ndarray
	reversed: np.ndarray


class LatticeGeometry:
	"""
	Index tables of one lattice shape. Obtain instances through ``get_geometry``.
	"""

	def __init__(self, shape: LatticeShape) -> None:
		self.shape = shape
		ndims = shape.ndims
		extents = np.array(shape.extents)
		self.site_count = shape.site_count
		self.coords = np.indices(shape.extents).reshape(ndims, -1).T
		self.strides = np.array([int(np.prod(extents[axis + 1 :])) for axis in range(ndims)])

		self.forward = np.full((self.site_count, ndims), -1, dtype=np.int64)
		self.backward = np.full((self.site_count, ndims), -1, dtype=np.int64)
		for axis in range(ndims):
			self.forward[:, axis] = self._shift(self.coords, axis, 1)
			self.backward[:, axis] = self._shift(self.coords, axis, -1)

		link_exists = self.forward >= 0
		self.link_of = np.full((self.site_count, ndims), -1, dtype=np.int64)
		self.link_site, self.link_dir = np.nonzero(link_exists)
		self.link_count = len(self.link_site)
		self.link_of[self.link_site, self.link_dir] = np.arange(self.link_count)

		self._build_plaquettes()
		self._build_staples()
		logger.debug(
			"Geometry %s: %d sites, %d links, %d plaquettes", shape, self.site_count, self.link_count, self.plaquette_count
		)

	def _shift(self, coords: np.ndarray, axis: int, offset: int) -> np.ndarray:
		extent = self.shape.extents[axis]
		moved = coords[..., axis] + offset
		if self.shape.is_periodic:
			moved = moved % extent
			valid = np.ones(moved.shape, dtype=bool)
		else:
			valid = (moved >= 0) & (moved < extent)
		index = (coords * self.strides).sum(axis=-1) + (moved - coords[..., axis]) * self.strides[axis]
		return np.where(valid, index, -1)

	def shifted_sites(self, axis: int, offset: int) -> np.ndarray:
		"""Site reached from every site by ``offset`` steps along ``axis``, -1 if it leaves the lattice."""
		return self._shift(self.coords, axis, offset)

	def site_index(self, site: Site) -> int:
		if len(site) != self.shape.ndims or any(not 0 <= c < e for c, e in zip(site, self.shape.extents)):
			raise UsageError(f"Site {site} is not on lattice {self.shape}")
		return int(np.dot(site, self.strides))

	def site_coords(self, index: int) -> Site:
		return tuple(int(c) for c in self.coords[index])

	def link_id(self, link: LinkIndex) -> int:
		if not 0 <= link.direction < self.shape.ndims:
			raise UsageError(f"Invalid direction {link.direction} on {self.shape.ndims} dimensional lattice")
		link_id = int(self.link_of[self.site_index(link.site), link.direction])
		if link_id < 0:
			raise UsageError(f"Link {link} leaves the lattice {self.shape}")
		return link_id

	def link_index(self, link_id: int) -> LinkIndex:
		return LinkIndex(self.site_coords(int(self.link_site[link_id])), int(self.link_dir[link_id]))

	def _build_plaquettes(self) -> None:
		planes = self.shape.planes
		sites = np.arange(self.site_count)
		per_plane = []
		for plane_id, (mu, nu) in enumerate(planes):
			x_mu = self.forward[:, mu]
			x_nu = self.forward[:, nu]
			present = (x_mu >= 0) & (x_nu >= 0)
			base = sites[present]
			links = np.stack(
				[
					self.link_of[base, mu],
					self.link_of[x_mu[present], nu],
					self.link_of[x_nu[present], mu],
					self.link_of[base, nu],
				],
				axis=1,
			)
			per_plane.append((base, np.full(len(base), plane_id), links))
		plaquette_site = np.concatenate([entry[0] for entry in per_plane])
		plaquette_plane = np.concatenate([entry[1] for entry in per_plane])
		plaquette_links = np.concatenate([entry[2] for entry in per_plane])
		order = np.lexsort((plaquette_plane, plaquette_site))
		self.plaquette_site = plaquette_site[order]
		self.plaquette_plane = plaquette_plane[order]
		self.plaquette_links = plaquette_links[order]
		self.plaquette_count = len(order)
		self.plaquette_reversed = np.tile(np.array([False, False, True, True]), (self.plaquette_count, 1))
		self.plaquette_at = np.full((self.site_count, len(planes)), -1, dtype=np.int64)
		self.plaquette_at[self.plaquette_site, self.plaquette_plane] = np.arange(self.plaquette_count)

	def _build_staples(self) -> None:
		ndims = self.shape.ndims
		slots = 2 * (ndims - 1)
		self.staple_links = np.full((self.link_count, slots, 3), -1, dtype=np.int64)
		self.staple_reversed = np.zeros((self.link_count, slots, 3), dtype=bool)
		for mu in range(ndims):
			members = np.nonzero(self.link_dir == mu)[0]
			site = self.link_site[members]
			x_mu = self.forward[site, mu]
			slot = 0
			for nu in range(ndims):
				if nu == mu:
					continue
				# up: U_nu(x+mu) U_mu(x+nu)^dagger U_nu(x)^dagger
				x_nu = self.forward[site, nu]
				up = (x_nu >= 0) & (self.forward[x_mu, nu] >= 0)
				self.staple_links[members[up], slot] = np.stack(
					[self.link_of[x_mu[up], nu], self.link_of[x_nu[up], mu], self.link_of[site[up], nu]], axis=1
				)
				self.staple_reversed[members, slot] = (False, True, True)
				# down: U_nu(x+mu-nu)^dagger U_mu(x-nu)^dagger U_nu(x-nu)
				x_down = self.backward[site, nu]
				x_mu_down = self.backward[x_mu, nu]
				down = (x_down >= 0) & (x_mu_down >= 0)
				self.staple_links[members[down], slot + 1] = np.stack(
					[self.link_of[x_mu_down[down], nu], self.link_of[x_down[down], mu], self.link_of[x_down[down], nu]], axis=1
				)
				self.staple_reversed[members, slot + 1] = (True, True, False)
				slot += 2
		self.staple_valid = np.all(self.staple_links >= 0, axis=-1)

	@cached_property
	def checkerboard_classes(self) -> list[np.ndarray]:
		"""
		Partition of the links into classes of pairwise non interacting links.

		Two links interact when they share a plaquette. A link in direction mu is
		coloured by (mu, sum over nu != mu of k_nu mod m) with k_nu the parity of
		the coordinate. Odd periodic extents give the last coordinate of that
		axis its own colour 2 and m = 3.
		"""
		odd_periodic = self.shape.is_periodic and any(extent % 2 for extent in self.shape.extents)
		modulus = 3 if odd_periodic else 2
		classes: list[np.ndarray] = []
		parity = np.zeros((self.site_count, self.shape.ndims), dtype=np.int64)
		for axis, extent in enumerate(self.shape.extents):
			coordinate = self.coords[:, axis]
			k = coordinate % 2
			if self.shape.is_periodic and extent % 2:
				k = np.where(coordinate == extent - 1, 2, k)
			parity[:, axis] = k
		total = parity.sum(axis=1)
		link_colour = (total[self.link_site] - parity[self.link_site, self.link_dir]) % modulus
		for mu in range(self.shape.ndims):
			for colour in range(modulus):
				members = np.nonzero((self.link_dir == mu) & (link_colour == colour))[0]
				if len(members):
					classes.append(members)
		return classes

	def translated_loop(self, steps: tuple[Step, ...]) -> LoopPaths:
		"""
		Link ids and orientations of a closed loop started at every site where it fits.
		"""
		current = np.arange(self.site_count)
		valid = np.ones(self.site_count, dtype=bool)
		links = np.zeros((self.site_count, len(steps)), dtype=np.int64)
		reversed_flags = np.zeros((self.site_count, len(steps)), dtype=bool)
		for position, step in enumerate(steps):
			if not 0 <= step.axis < self.shape.ndims:
				raise UsageError(f"Invalid axis {step.axis} in loop")
			safe = np.where(valid, current, 0)
			if step.sign > 0:
				following = self.forward[safe, step.axis]
				link = self.link_of[safe, step.axis]
			else:
				following = self.backward[safe, step.axis]
				link = self.link_of[np.where(following >= 0, following, 0), step.axis]
				reversed_flags[:, position] = True
			valid &= (following >= 0) & (link >= 0)
			links[:, position] = np.where(valid, link, 0)
			current = np.where(valid, following, 0)
		closed = valid & (current == np.arange(self.site_count))
		if np.any(valid & ~closed):
			raise UsageError("Loop is not closed")
		starts = np.nonzero(closed)[0]
		return LoopPaths(starts=starts, links=links[starts], reversed=reversed_flags[starts])


@lru_cache(maxsize=16)
def get_geometry(shape: LatticeShape) -> LatticeGeometry:
	return LatticeGeometry(shape)


def enumerate_links(shape: LatticeShape) -> list[LinkIndex]:
	geometry = get_geometry(shape)
	return [geometry.link_index(link_id) for link_id in range(geometry.link_count)]


def enumerate_plaquettes(shape: LatticeShape) -> list[PlaquetteIndex]:
	geometry = get_geometry(shape)
	planes = shape.planes
	return [
		PlaquetteIndex(geometry.site_coords(int(site)), planes[int(plane)])
		for site, plane in zip(geometry.plaquette_site, geometry.plaquette_plane)
	]


def plaquette_id(shape: LatticeShape, p: PlaquetteIndex) -> int:
	geometry = get_geometry(shape)
	try:
		plane_id = shape.planes.index(tuple(p.plane))  # type: ignore[arg-type]
	except ValueError:
		raise UsageError(f"Invalid plane {p.plane}, planes are (mu, nu) with mu < nu") from None
	index = int(geometry.plaquette_at[geometry.site_index(p.site), plane_id])
	if index < 0:
		raise UsageError(f"Plaquette {p} leaves the lattice {shape}")
	return index


def plaquette_links(shape: LatticeShape, p: PlaquetteIndex) -> list[DirectedLink]:
	"""
	The four links of a plaquette in path order: U_mu(x), U_nu(x+mu), U_mu(x+nu)^dagger, U_nu(x)^dagger.
	"""
	geometry = get_geometry(shape)
	index = plaquette_id(shape, p)
	return [
		DirectedLink(geometry.link_index(int(link_id)), bool(reverse))
		for link_id, reverse in zip(geometry.plaquette_links[index], geometry.plaquette_reversed[index])
	]


def staples(shape: LatticeShape, l: LinkIndex) -> list[tuple[DirectedLink, DirectedLink, DirectedLink]]:  # noqa: E741
	"""
	Paths from the head of ``l`` back to its tail that close a plaquette with ``l``.
	"""
	geometry = get_geometry(shape)
	link_id = geometry.link_id(l)
	result = []
	for slot in np.nonzero(geometry.staple_valid[link_id])[0]:
		path = tuple(
			DirectedLink(geometry.link_index(int(member)), bool(reverse))
			for member, reverse in zip(geometry.staple_links[link_id, slot], geometry.staple_reversed[link_id, slot])
		)
		result.append(path)
	return result  # type: ignore[return-value]


def rectangle_steps(plane: tuple[int, int], r: int, t: int) -> tuple[Step, ...]:
	mu, nu = plane
	return (
		tuple(Step(mu, 1) for _ in range(r))
		+ tuple(Step(nu, 1) for _ in range(t))
		+ tuple(Step(mu, -1) for _ in range(r))
		+ tuple(Step(nu, -1) for _ in range(t))
	)


def check_loop_size(shape: LatticeShape, plane: tuple[int, int], r: int, t: int) -> None:
	mu, nu = plane
	if mu == nu or not (0 <= mu < shape.ndims and 0 <= nu < shape.ndims):
		raise UsageError(f"Invalid plane {plane} on {shape.ndims} dimensional lattice")
	if r < 1 or t < 1:
		raise UsageError(f"Loop extents must be positive, got {r}x{t}")
	if r > shape.extents[mu] - 1 or t > shape.extents[nu] - 1:
		raise UsageError(f"A {r}x{t} loop does not fit into plane {plane} of lattice {shape}")


def rectangular_loop(shape: LatticeShape, origin: Site, plane: tuple[int, int], r: int, t: int) -> LoopSpec:
	check_loop_size(shape, plane, r, t)
	geometry = get_geometry(shape)
	geometry.site_index(origin)
	mu, nu = plane
	if not shape.is_periodic and (origin[mu] + r > shape.extents[mu] - 1 or origin[nu] + t > shape.extents[nu] - 1):
		raise UsageError(f"A {r}x{t} loop at {origin} leaves the open lattice {shape}")
	return LoopSpec(start=tuple(origin), steps=rectangle_steps(plane, r, t))


def loop_links(shape: LatticeShape, spec: LoopSpec) -> list[DirectedLink]:
	"""
	Walk a loop and return its links, raises UsageError if the loop leaves the lattice or does not close.
	"""
	geometry = get_geometry(shape)
	site = geometry.site_index(spec.start)
	start = site
	path = []
	for step in spec.steps:
		if not 0 <= step.axis < shape.ndims:
			raise UsageError(f"Invalid axis {step.axis} in loop")
		if step.sign > 0:
			following = int(geometry.forward[site, step.axis])
			link_id = int(geometry.link_of[site, step.axis]) if following >= 0 else -1
		else:
			following = int(geometry.backward[site, step.axis])
			link_id = int(geometry.link_of[following, step.axis]) if following >= 0 else -1
		if following < 0 or link_id < 0:
			raise UsageError(f"Loop leaves the lattice at site {geometry.site_coords(site)}")
		path.append(DirectedLink(geometry.link_index(link_id), step.sign < 0))
		site = following
	if site != start:
		raise UsageError("Loop is not closed")
	return path


@lru_cache(maxsize=256)
def loop_paths(shape: LatticeShape, steps: tuple[Step, ...]) -> LoopPaths:
	"""Cached ``LatticeGeometry.translated_loop``."""
	return get_geometry(shape).translated_loop(steps)
