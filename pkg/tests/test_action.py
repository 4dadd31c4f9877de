"""
test_action
"""

import numpy as np
import pytest

from lgtcli.action import (
	Configuration,
	cold_start,
	gauge_transform,
	hot_start,
	local_action_delta,
	plaquette_product,
	plaquette_traces,
	random_gauge,
	staple_sum,
	wilson_action,
)
from lgtcli.group_algebra import GroupElement, GroupId, haar_sample, re_trace
from lgtcli.lattice_geometry import DirectedLink, LatticeShape, LinkIndex, PlaquetteIndex, get_geometry
from lgtcli.rng import RandomStream
from lgtcli.types import UsageError

SHAPES = (LatticeShape.hypercube(2, 3), LatticeShape.hypercube(3, 2), LatticeShape.hypercube(2, 3, "open"), LatticeShape(4, (2, 2, 2, 3)))


@pytest.mark.parametrize("group", tuple(GroupId))
def test_cold_start(group: GroupId) -> None:
	cfg = cold_start(LatticeShape.hypercube(3, 3), group)
	assert np.allclose(plaquette_traces(cfg), group.matrix_order)
	assert float(wilson_action(cfg)) == 0.0


@pytest.mark.parametrize("group", tuple(GroupId))
@pytest.mark.parametrize("shape", SHAPES)
def test_gauge_invariance(group: GroupId, shape: LatticeShape) -> None:
	cfg, stream = hot_start(shape, group, RandomStream.from_seed(10))
	rotations, _ = random_gauge(shape, group, stream)
	transformed = gauge_transform(cfg, rotations)
	assert np.allclose(plaquette_traces(transformed), plaquette_traces(cfg), atol=1e-10)
	assert float(wilson_action(transformed)) == pytest.approx(float(wilson_action(cfg)), abs=1e-9)
	if not group.is_abelian:
		assert not np.allclose(transformed.links, cfg.links)


def test_gauge_transform_single_site() -> None:
	shape = LatticeShape.hypercube(2, 3)
	cfg, stream = hot_start(shape, GroupId.SU2, RandomStream.from_seed(3))
	rotation, _ = haar_sample(stream, GroupId.SU2)
	transformed = gauge_transform(cfg, {(1, 1): rotation})
	changed = np.nonzero(~np.all(np.isclose(transformed.links, cfg.links), axis=(1, 2)))[0]
	# the links touching the site (1, 1)
	assert len(changed) == 4
	assert float(wilson_action(transformed)) == pytest.approx(float(wilson_action(cfg)))


def test_gauge_transform_partial_mapping_matches_identity_fill() -> None:
	shape = LatticeShape.hypercube(2, 3)
	cfg, stream = hot_start(shape, GroupId.U1, RandomStream.from_seed(4))
	rotation, _ = haar_sample(stream, GroupId.U1)
	rotations = np.tile(np.eye(1, dtype=np.complex128), (shape.site_count, 1, 1))
	rotations[cfg.geometry.site_index((2, 0))] = rotation.entries
	assert np.allclose(gauge_transform(cfg, {(2, 0): rotation}).links, gauge_transform(cfg, rotations).links)
	with pytest.raises(UsageError, match="shape"):
		gauge_transform(cfg, rotations[:-1])


@pytest.mark.parametrize("group", (GroupId.Z2, GroupId.U1, GroupId.SU2, GroupId.SU3))
@pytest.mark.parametrize("shape", SHAPES)
def test_local_action_delta_matches_full_action(group: GroupId, shape: LatticeShape) -> None:
	cfg, stream = hot_start(shape, group, RandomStream.from_seed(20))
	link = LinkIndex((0,) * shape.ndims, 0)
	new, _ = haar_sample(stream, group)
	before = float(wilson_action(cfg))
	delta = local_action_delta(cfg, link, new)
	cfg.set_link(link, new)
	assert float(wilson_action(cfg)) - before == pytest.approx(delta, abs=1e-9)


def test_staple_sum_closes_plaquettes() -> None:
	shape = LatticeShape.hypercube(3, 3)
	cfg, _ = hot_start(shape, GroupId.SU3, RandomStream.from_seed(30))
	geometry = get_geometry(shape)
	link = LinkIndex((1, 2, 0), 2)
	link_id = geometry.link_id(link)
	containing = np.nonzero(np.any(geometry.plaquette_links == link_id, axis=1))[0]
	expected = plaquette_traces(cfg)[containing].sum()
	assert np.trace(cfg.links[link_id] @ staple_sum(cfg, link)).real == pytest.approx(expected)


def test_plaquette_product_trace() -> None:
	shape = LatticeShape.hypercube(2, 3)
	cfg, _ = hot_start(shape, GroupId.U1, RandomStream.from_seed(40))
	p = PlaquetteIndex((2, 1), (0, 1))
	index = get_geometry(shape).plaquette_at[get_geometry(shape).site_index((2, 1)), 0]
	assert re_trace(plaquette_product(cfg, p)) == pytest.approx(plaquette_traces(cfg)[index])


def test_configuration_shape_checked() -> None:
	with pytest.raises(UsageError, match="does not match"):
		Configuration(LatticeShape.hypercube(2, 2), GroupId.SU2, np.zeros((8, 3, 3)))


def test_set_link_group_checked() -> None:
	cfg = cold_start(LatticeShape.hypercube(2, 2), GroupId.SU2)
	with pytest.raises(UsageError, match="Cannot store"):
		cfg.set_link(LinkIndex((0, 0), 0), GroupElement.identity(GroupId.U1))


def test_read_reversed_link() -> None:
	cfg, _ = hot_start(LatticeShape.hypercube(2, 2), GroupId.SU2, RandomStream.from_seed(50))
	forward = cfg.read(DirectedLink(LinkIndex((0, 1), 1)))
	backward = cfg.read(DirectedLink(LinkIndex((0, 1), 1), True))
	assert np.allclose(forward.entries @ backward.entries, np.eye(2))
