"""
test_checkpoint
"""

import struct
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from lgtcli.action import hot_start
from lgtcli.checkpoint import HEADER, MAGIC, Checkpoint, load_checkpoint, save_checkpoint
from lgtcli.group_algebra import GroupId
from lgtcli.lattice_geometry import LatticeShape
from lgtcli.rng import RandomStream
from lgtcli.types import UsageError


def make_checkpoint(group: GroupId, shape: LatticeShape) -> Checkpoint:
	cfg, stream = hot_start(shape, group, RandomStream.from_seed(17))
	return Checkpoint(configuration=cfg, beta=2.25, sweep=300, stream=RandomStream(key=stream.key, counter=(1 << 70) + 5))


@pytest.mark.parametrize("group", tuple(GroupId))
@pytest.mark.parametrize("shape", (LatticeShape.hypercube(2, 3), LatticeShape(3, (2, 3, 4), "open")))
def test_checkpoint_file(tmp_path: Path, group: GroupId, shape: LatticeShape) -> None:
	checkpoint = make_checkpoint(group, shape)
	path = tmp_path / "checkpoint.lgtc"
	save_checkpoint(path, checkpoint)
	assert not list(tmp_path.glob(".*.tmp"))
	loaded = load_checkpoint(path)
	assert loaded.configuration.shape == shape
	assert loaded.configuration.group is group
	assert np.array_equal(loaded.configuration.links, checkpoint.configuration.links)
	assert loaded.beta == 2.25
	assert loaded.sweep == 300
	assert loaded.stream == checkpoint.stream


def test_checkpoint_layout() -> None:
	data = make_checkpoint(GroupId.Z2, LatticeShape.hypercube(2, 2)).encode()
	magic, version, _group, ndims, _boundary, _pad = HEADER.unpack_from(data)
	assert magic == MAGIC
	assert version == 1
	assert ndims == 2
	assert struct.unpack_from("<2I", data, HEADER.size) == (2, 2)
	assert len(data) == HEADER.size + 8 + 8 + 8 + 32 + 8 * 16


@pytest.mark.parametrize(
	"mangle, message",
	(
		(lambda data: data[:3], "truncated"),
		(lambda data: data[:20], "truncated"),
		(lambda data: b"XXXX" + data[4:], "magic"),
		(lambda data: data[:4] + struct.pack("<I", 9) + data[8:], "version"),
		(lambda data: data[:-16], "expected"),
		(lambda data: data[:-3], "whole number"),
	),
)
def test_corrupt_checkpoint(tmp_path: Path, mangle: Callable[[bytes], bytes], message: str) -> None:
	path = tmp_path / "checkpoint.lgtc"
	path.write_bytes(mangle(make_checkpoint(GroupId.SU2, LatticeShape.hypercube(2, 2)).encode()))
	with pytest.raises(UsageError, match=message):
		load_checkpoint(path)


def test_missing_checkpoint(tmp_path: Path) -> None:
	with pytest.raises(UsageError, match="Cannot read"):
		load_checkpoint(tmp_path / "missing.lgtc")
