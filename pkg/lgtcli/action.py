# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

gauge configurations and the Wilson action
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.group_algebra import (
	GroupElement,
	GroupId,
	check_group_element,
	dagger,
	haar_matrices,
	identity_matrices,
	re_trace_matrices,
)
from lgtcli.lattice_geometry import (
	DirectedLink,
	LatticeGeometry,
	LatticeShape,
	LinkIndex,
	PlaquetteIndex,
	Site,
	get_geometry,
	plaquette_id,
)
from lgtcli.rng import RandomStream
from lgtcli.types import UsageError

logger = get_logger("lgtcli")


@dataclass
class Configuration:
	shape: LatticeShape
	group: GroupId
	links: np.ndarray

	def __post_init__(self) -> None:
		order = self.group.matrix_order
		expected = (self.geometry.link_count, order, order)
		self.links = np.asarray(self.links, dtype=np.complex128)
		if self.links.shape != expected:
			raise UsageError(f"Link array of shape {self.links.shape} does not match {self.shape} {self.group.value} {expected}")

	@property
	def geometry(self) -> LatticeGeometry:
		return get_geometry(self.shape)

	def copy(self) -> Configuration:
		return Configuration(self.shape, self.group, self.links.copy())

	def link(self, index: LinkIndex) -> GroupElement:
		return GroupElement(self.group, self.links[self.geometry.link_id(index)])

	def read(self, directed: DirectedLink) -> GroupElement:
		"""Link matrix along a directed link, the inverse when traversed backwards."""
		matrix = self.links[self.geometry.link_id(directed.link)]
		return GroupElement(self.group, matrix.conj().T if directed.reversed else matrix)

	def set_link(self, index: LinkIndex, element: GroupElement) -> None:
		if element.group is not self.group:
			raise UsageError(f"Cannot store a {element.group.value} element in a {self.group.value} configuration")
		self.links[self.geometry.link_id(index)] = check_group_element(element).entries

	def directed_matrices(self, link_ids: np.ndarray, reversed_flags: np.ndarray) -> np.ndarray:
		matrices = self.links[link_ids]
		return np.where(reversed_flags[..., None, None], dagger(matrices), matrices)


@dataclass(frozen=True)
class ActionValue:
	value: float

	def __float__(self) -> float:
		return self.value


def cold_start(shape: LatticeShape, group: GroupId) -> Configuration:
	return Configuration(shape, group, identity_matrices(group, get_geometry(shape).link_count))


def hot_start(shape: LatticeShape, group: GroupId, rng: RandomStream) -> tuple[Configuration, RandomStream]:
	"""Independent Haar distributed links."""
	matrices, rng = haar_matrices(rng, group, get_geometry(shape).link_count)
	return Configuration(shape, group, matrices), rng


def path_products(cfg: Configuration, links: np.ndarray, reversed_flags: np.ndarray) -> np.ndarray:
	"""Ordered products along paths, the last axis of ``links`` runs along the path."""
	product = cfg.directed_matrices(links[..., 0], reversed_flags[..., 0])
	for position in range(1, links.shape[-1]):
		product = product @ cfg.directed_matrices(links[..., position], reversed_flags[..., position])
	return product


def plaquette_matrices(cfg: Configuration) -> np.ndarray:
	"""Ordered plaquette products of all plaquettes, shape (P, N, N)."""
	geometry = cfg.geometry
	return path_products(cfg, geometry.plaquette_links, geometry.plaquette_reversed)


def plaquette_traces(cfg: Configuration) -> np.ndarray:
	return re_trace_matrices(plaquette_matrices(cfg))


def plaquette_product(cfg: Configuration, p: PlaquetteIndex) -> GroupElement:
	geometry = cfg.geometry
	index = plaquette_id(cfg.shape, p)
	product = path_products(cfg, geometry.plaquette_links[index][None], geometry.plaquette_reversed[index][None])
	return GroupElement(cfg.group, product[0])


def wilson_action(cfg: Configuration) -> ActionValue:
	"""S = sum over plaquettes of (N - Re Tr U_p), without the coupling."""
	traces = plaquette_traces(cfg)
	return ActionValue(float(np.sum(cfg.group.matrix_order - traces)))


def staple_sums(cfg: Configuration, link_ids: np.ndarray) -> np.ndarray:
	"""
	Sum of the staple paths of each link, ordered from the head of the link back to its tail.
	Re Tr(U_l A_l) is the sum of Re Tr U_p over the plaquettes containing l.
	"""
	geometry = cfg.geometry
	links = geometry.staple_links[link_ids]
	valid = geometry.staple_valid[link_ids]
	products = path_products(cfg, np.where(links >= 0, links, 0), geometry.staple_reversed[link_ids])
	return np.where(valid[..., None, None], products, 0).sum(axis=1)


def staple_sum(cfg: Configuration, l: LinkIndex) -> np.ndarray:  # noqa: E741
	return staple_sums(cfg, np.array([cfg.geometry.link_id(l)]))[0]


def local_action_delta(cfg: Configuration, l: LinkIndex, new: GroupElement) -> float:  # noqa: E741
	"""
	Change of the Wilson action when link ``l`` is replaced by ``new``, without the coupling.
	"""
	link_id = cfg.geometry.link_id(l)
	staple = staple_sums(cfg, np.array([link_id]))[0]
	return float(-np.trace((new.entries - cfg.links[link_id]) @ staple).real)


def random_gauge(shape: LatticeShape, group: GroupId, rng: RandomStream) -> tuple[np.ndarray, RandomStream]:
	"""One Haar distributed gauge rotation per site, shape (V, N, N)."""
	return haar_matrices(rng, group, shape.site_count)


def gauge_transform(cfg: Configuration, g: np.ndarray | Mapping[Site, GroupElement]) -> Configuration:
	"""
	U'(x, mu) = g(x) U(x, mu) g(x + mu)^dagger. Returns a new configuration.

	A mapping may name a subset of the sites, the remaining sites are rotated
	by the identity. An array must hold one rotation per site.
	"""
	geometry = cfg.geometry
	if isinstance(g, Mapping):
		rotations = identity_matrices(cfg.group, geometry.site_count)
		for site, element in g.items():
			if element.group is not cfg.group:
				raise UsageError(f"Gauge rotation of group {element.group.value} on a {cfg.group.value} configuration")
			rotations[geometry.site_index(site)] = element.entries
	else:
		rotations = np.asarray(g, dtype=np.complex128)
		order = cfg.group.matrix_order
		if rotations.shape != (geometry.site_count, order, order):
			raise UsageError(f"Expected gauge rotations of shape {(geometry.site_count, order, order)}, got {rotations.shape}")
	heads = geometry.forward[geometry.link_site, geometry.link_dir]
	links = rotations[geometry.link_site] @ cfg.links @ dagger(rotations[heads])
	return Configuration(cfg.shape, cfg.group, links)
