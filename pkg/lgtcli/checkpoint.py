# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

binary checkpoints

Little endian layout: magic "LGTC", u32 version, u8 group, u8 ndims,
u8 boundary, u8 pad, u32 extents[ndims], f64 beta, u64 sweep,
u64 x 4 random stream words (key0, key1, counter low, counter high),
followed by the link matrices in link order as complex128 row-major.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.action import Configuration
from lgtcli.group_algebra import GroupId
from lgtcli.lattice_geometry import Boundary, LatticeShape, get_geometry
from lgtcli.rng import RandomStream
from lgtcli.types import UsageError

logger = get_logger("lgtcli")

MAGIC = b"LGTC"
VERSION = 1
HEADER = struct.Struct("<4sIBBBB")
TRAILER = struct.Struct("<dQ4Q")
PAYLOAD_DTYPE = np.dtype("<c16")


@dataclass
class Checkpoint:
	configuration: Configuration
	beta: float
	sweep: int
	stream: RandomStream

	def encode(self) -> bytes:
		cfg = self.configuration
		shape = cfg.shape
		header = HEADER.pack(MAGIC, VERSION, cfg.group.code, shape.ndims, shape.boundary.code, 0)
		extents = struct.pack(f"<{shape.ndims}I", *shape.extents)
		trailer = TRAILER.pack(self.beta, self.sweep, *self.stream.as_words())
		return header + extents + trailer + np.ascontiguousarray(cfg.links, dtype=PAYLOAD_DTYPE).tobytes()

	@classmethod
	def decode(cls, data: bytes) -> Checkpoint:
		if len(data) < HEADER.size:
			raise UsageError("Checkpoint is truncated")
		magic, version, group_code, ndims, boundary_code, _pad = HEADER.unpack_from(data)
		if magic != MAGIC:
			raise UsageError(f"Not a checkpoint file, magic {magic!r}")
		if version != VERSION:
			raise UsageError(f"Unsupported checkpoint version {version}")
		offset = HEADER.size
		extents_format = f"<{ndims}I"
		if len(data) < offset + struct.calcsize(extents_format) + TRAILER.size:
			raise UsageError("Checkpoint is truncated")
		extents = struct.unpack_from(extents_format, data, offset)
		offset += struct.calcsize(extents_format)
		beta, sweep, *words = TRAILER.unpack_from(data, offset)
		offset += TRAILER.size
		group = GroupId.from_code(group_code)
		shape = LatticeShape(ndims, tuple(extents), Boundary.from_code(boundary_code))
		order = group.matrix_order
		if (len(data) - offset) % PAYLOAD_DTYPE.itemsize:
			raise UsageError("Checkpoint payload is not a whole number of complex entries")
		payload = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=offset)
		link_count = get_geometry(shape).link_count
		if payload.size != link_count * order * order:
			raise UsageError(f"Checkpoint payload holds {payload.size} entries, expected {link_count * order * order}")
		links = payload.reshape(link_count, order, order).astype(np.complex128)
		return cls(
			configuration=Configuration(shape, group, links),
			beta=beta,
			sweep=sweep,
			stream=RandomStream.from_words(*words),
		)


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
	"""Write atomically, a partially written file never replaces a valid checkpoint."""
	path = Path(path)
	temporary = path.with_name(f".{path.name}.tmp")
	temporary.write_bytes(checkpoint.encode())
	os.replace(temporary, path)
	logger.info("Checkpoint at sweep %d written to %s", checkpoint.sweep, path)


def load_checkpoint(path: Path) -> Checkpoint:
	path = Path(path)
	try:
		data = path.read_bytes()
	except OSError as err:
		raise UsageError(f"Cannot read checkpoint {path}: {err}") from err
	checkpoint = Checkpoint.decode(data)
	logger.info("Loaded checkpoint %s at sweep %d", path, checkpoint.sweep)
	return checkpoint
