# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

counter based random streams

Every random number used by the engine is addressed by a key derived from
the master seed and a tuple of integer tags (sweep index, update stage,
checkerboard class, ...). Draws therefore do not depend on the order in
which threads or processes consume them.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
MASK128 = (1 << 128) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
SECOND_KEY_SALT = 0xD1B54A32D192ED03


def splitmix64(value: int) -> int:
	z = (value + GOLDEN_GAMMA) & MASK64
	z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
	z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
	return z ^ (z >> 31)


def mix_seed(seed: int, *tags: int) -> int:
	"""
	Hash a seed and a sequence of tags to a 64 bit value.
	Used to derive the per point seeds of a scan and the keys of random streams.
	"""
	state = splitmix64(seed & MASK64)
	for tag in tags:
		state = splitmix64(state ^ (tag & MASK64))
	return state


@dataclass(frozen=True)
class RandomStream:
	key: tuple[int, int]
	counter: int = 0

	@classmethod
	def from_seed(cls, seed: int, *tags: int) -> RandomStream:
		return cls(key=(mix_seed(seed, *tags), mix_seed(seed ^ SECOND_KEY_SALT, *tags)))

	def derive(self, *tags: int) -> RandomStream:
		"""Independent stream for a sub task, counter reset to zero."""
		return RandomStream(key=(mix_seed(self.key[0], *tags), mix_seed(self.key[1], *tags)))

	def generator(self) -> np.random.Generator:
		counter = np.array([self.counter & MASK64, (self.counter >> 64) & MASK64, 0, 0], dtype=np.uint64)
		bit_generator = np.random.Philox(key=np.array(self.key, dtype=np.uint64), counter=counter)
		return np.random.Generator(bit_generator)

	def advanced(self, generator: np.random.Generator) -> RandomStream:
		words = generator.bit_generator.state["state"]["counter"]
		counter = (int(words[0]) | (int(words[1]) << 64)) & MASK128
		return RandomStream(key=self.key, counter=counter)

	def uniform(self, shape: int | tuple[int, ...]) -> tuple[np.ndarray, RandomStream]:
		generator = self.generator()
		values = generator.random(shape)
		return values, self.advanced(generator)

	def normal(self, shape: int | tuple[int, ...]) -> tuple[np.ndarray, RandomStream]:
		generator = self.generator()
		values = generator.standard_normal(shape)
		return values, self.advanced(generator)

	def as_words(self) -> tuple[int, int, int, int]:
		return (self.key[0], self.key[1], self.counter & MASK64, (self.counter >> 64) & MASK64)

	@classmethod
	def from_words(cls, key0: int, key1: int, counter_low: int, counter_high: int) -> RandomStream:
		return cls(key=(key0, key1), counter=counter_low | (counter_high << 64))


class DrawTable:
	"""
	Lazily generated blocks of random numbers for one checkerboard class.

	Row ``r`` of every block belongs to the link at position ``r`` of the class,
	so a link sees the same numbers however the class is split among workers.
	Blocks are addressed by a tag and a round number, rounds are used by
	rejection samplers that need fresh candidates.
	"""

	def __init__(self, stream: RandomStream, rows: int) -> None:
		self.stream = stream
		self.rows = rows
		self._blocks: dict[tuple[str, int, int, tuple[int, ...]], np.ndarray] = {}
		self._lock = threading.Lock()

	def uniform(self, tag: int, round_: int = 0, per_row: tuple[int, ...] = ()) -> np.ndarray:
		return self._block("uniform", tag, round_, per_row)

	def normal(self, tag: int, round_: int = 0, per_row: tuple[int, ...] = ()) -> np.ndarray:
		return self._block("normal", tag, round_, per_row)

	def _block(self, kind: str, tag: int, round_: int, per_row: tuple[int, ...]) -> np.ndarray:
		block_key = (kind, tag, round_, per_row)
		with self._lock:
			block = self._blocks.get(block_key)
			if block is None:
				generator = self.stream.derive(tag, round_, 0 if kind == "uniform" else 1).generator()
				shape = (self.rows, *per_row)
				block = generator.random(shape) if kind == "uniform" else generator.standard_normal(shape)
				self._blocks[block_key] = block
			return block
