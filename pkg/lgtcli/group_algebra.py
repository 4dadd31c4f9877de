# -*- coding: utf-8 -*-
"""
lgt-cli - lattice gauge theory command line interface

compact gauge groups

Group elements are stored as complex matrices in the defining
representation: 1x1 for Z2 and U1, 2x2 for SU2, 3x3 for SU3.
The element level functions validate their results, the ``*_matrices``
functions operate on stacks of shape (k, N, N) and are used by the samplers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from opsicommon.logging import get_logger  # type: ignore[import]

from lgtcli.rng import RandomStream
from lgtcli.types import GroupInvariantError, NumericalDriftError, UsageError

logger = get_logger("lgtcli")

GROUP_TOLERANCE = 1e-12
DRIFT_LIMIT = 0.1


class GroupId(str, Enum):
	Z2 = "Z2"
	U1 = "U1"
	SU2 = "SU2"
	SU3 = "SU3"

	@classmethod
	def parse(cls, value: str | GroupId) -> GroupId:
		if isinstance(value, GroupId):
			return value
		for group in cls:
			if group.value.lower() == str(value).strip().lower():
				return group
		raise UsageError(f"Unknown gauge group {value!r}, choose one of: {', '.join(g.value for g in cls)}")

	@property
	def matrix_order(self) -> int:
		return {"Z2": 1, "U1": 1, "SU2": 2, "SU3": 3}[self.value]

	@property
	def generator_count(self) -> int:
		return {"Z2": 0, "U1": 1, "SU2": 3, "SU3": 8}[self.value]

	@property
	def is_abelian(self) -> bool:
		return self in (GroupId.Z2, GroupId.U1)

	@property
	def code(self) -> int:
		return list(GroupId).index(self)

	@classmethod
	def from_code(cls, code: int) -> GroupId:
		try:
			return list(cls)[code]
		except IndexError:
			raise UsageError(f"Unknown gauge group code {code}") from None


_PAULI = np.array(
	[
		[[0, 1], [1, 0]],
		[[0, -1j], [1j, 0]],
		[[1, 0], [0, -1]],
	],
	dtype=np.complex128,
)

_GELL_MANN = np.zeros((8, 3, 3), dtype=np.complex128)
_GELL_MANN[0, 0, 1] = _GELL_MANN[0, 1, 0] = 1
_GELL_MANN[1, 0, 1], _GELL_MANN[1, 1, 0] = -1j, 1j
_GELL_MANN[2, 0, 0], _GELL_MANN[2, 1, 1] = 1, -1
_GELL_MANN[3, 0, 2] = _GELL_MANN[3, 2, 0] = 1
_GELL_MANN[4, 0, 2], _GELL_MANN[4, 2, 0] = -1j, 1j
_GELL_MANN[5, 1, 2] = _GELL_MANN[5, 2, 1] = 1
_GELL_MANN[6, 1, 2], _GELL_MANN[6, 2, 1] = -1j, 1j
_GELL_MANN[7] = np.diag([1, 1, -2]) / np.sqrt(3)


def algebra_basis(group: GroupId) -> np.ndarray:
	"""
	Anti-Hermitian basis of the Lie algebra, shape (generator_count, N, N).
	U1 uses i, SU2 uses i times the Pauli matrices, SU3 i times the Gell-Mann matrices.
	"""
	if group is GroupId.U1:
		return np.array([[[1j]]], dtype=np.complex128)
	if group is GroupId.SU2:
		return 1j * _PAULI
	if group is GroupId.SU3:
		return 1j * _GELL_MANN
	return np.zeros((0, 1, 1), dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class GroupElement:
	group: GroupId
	entries: np.ndarray

	def __post_init__(self) -> None:
		entries = np.array(self.entries, dtype=np.complex128)
		order = self.group.matrix_order
		if entries.shape != (order, order):
			raise UsageError(f"{self.group.value} elements are {order}x{order} matrices, got shape {entries.shape}")
		entries.setflags(write=False)
		object.__setattr__(self, "entries", entries)

	@classmethod
	def identity(cls, group: GroupId) -> GroupElement:
		return cls(group, np.eye(group.matrix_order, dtype=np.complex128))

	def __matmul__(self, other: GroupElement) -> GroupElement:
		return multiply(self, other)

	def __repr__(self) -> str:
		return f"<GroupElement {self.group.value} {self.entries.tolist()}>"


@dataclass(frozen=True, eq=False)
class AlgebraElement:
	group: GroupId
	entries: np.ndarray

	def __post_init__(self) -> None:
		entries = np.array(self.entries, dtype=np.complex128)
		order = self.group.matrix_order
		if entries.shape != (order, order):
			raise UsageError(f"{self.group.value} algebra elements are {order}x{order} matrices, got shape {entries.shape}")
		entries.setflags(write=False)
		object.__setattr__(self, "entries", entries)

	@classmethod
	def from_coefficients(cls, group: GroupId, coefficients: np.ndarray | list[float]) -> AlgebraElement:
		coefficients = np.asarray(coefficients, dtype=float)
		if coefficients.shape != (group.generator_count,):
			raise UsageError(f"{group.value} algebra has {group.generator_count} generators, got {coefficients.shape}")
		basis = algebra_basis(group)
		if not group.generator_count:
			return cls(group, np.zeros((1, 1), dtype=np.complex128))
		return cls(group, np.tensordot(coefficients, basis, axes=1))


def dagger(matrices: np.ndarray) -> np.ndarray:
	return np.conj(np.swapaxes(matrices, -1, -2))


def re_trace_matrices(matrices: np.ndarray) -> np.ndarray:
	return np.trace(matrices, axis1=-2, axis2=-1).real


def identity_matrices(group: GroupId, count: int) -> np.ndarray:
	return np.broadcast_to(np.eye(group.matrix_order, dtype=np.complex128), (count, group.matrix_order, group.matrix_order)).copy()


def group_defect(group: GroupId, matrices: np.ndarray) -> float:
	"""
	Largest violation of the group conditions over a stack of matrices.
	"""
	matrices = np.asarray(matrices, dtype=np.complex128).reshape(-1, group.matrix_order, group.matrix_order)
	if not len(matrices):
		return 0.0
	if group is GroupId.Z2:
		return float(np.max(np.minimum(np.abs(matrices - 1), np.abs(matrices + 1))))
	eye = np.eye(group.matrix_order)
	defect = np.linalg.norm(dagger(matrices) @ matrices - eye, axis=(-2, -1))
	if group in (GroupId.SU2, GroupId.SU3):
		defect = np.maximum(defect, np.abs(np.linalg.det(matrices) - 1))
	return float(np.max(defect))


def check_group_element(element: GroupElement, tolerance: float = GROUP_TOLERANCE) -> GroupElement:
	if not np.all(np.isfinite(element.entries)):
		raise GroupInvariantError(f"Non finite {element.group.value} element")
	defect = group_defect(element.group, element.entries)
	if defect > tolerance:
		raise GroupInvariantError(f"{element.group.value} element violates group conditions by {defect:.3e}")
	return element


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
	if a.group is not b.group:
		raise UsageError(f"Cannot multiply {a.group.value} and {b.group.value} elements")
	return check_group_element(GroupElement(a.group, a.entries @ b.entries))


def inverse(a: GroupElement) -> GroupElement:
	return GroupElement(a.group, a.entries.conj().T)


def re_trace(a: GroupElement) -> float:
	return float(np.trace(a.entries).real)


def haar_from_draws(group: GroupId, draws: np.ndarray) -> np.ndarray:
	"""
	Haar distributed matrices from standard normal draws.

	``draws`` has shape (k, 2, N, N) for SU2/SU3 (real and imaginary parts of
	a Ginibre matrix) and shape (k,) of uniforms in [0, 1) for Z2 and U1.
	"""
	if group is GroupId.Z2:
		return np.where(draws < 0.5, 1.0, -1.0).astype(np.complex128).reshape(-1, 1, 1)
	if group is GroupId.U1:
		return np.exp(2j * np.pi * draws).reshape(-1, 1, 1)
	order = group.matrix_order
	ginibre = (draws[:, 0] + 1j * draws[:, 1]) / np.sqrt(2.0)
	q, r = np.linalg.qr(ginibre)
	diagonal = np.diagonal(r, axis1=-2, axis2=-1)
	q = q * (diagonal / np.abs(diagonal))[:, None, :]
	determinant = np.linalg.det(q)
	return q * (determinant ** (-1.0 / order))[:, None, None]


def haar_matrices(rng: RandomStream, group: GroupId, count: int) -> tuple[np.ndarray, RandomStream]:
	if group.is_abelian:
		draws, rng = rng.uniform(count)
	else:
		draws, rng = rng.normal((count, 2, group.matrix_order, group.matrix_order))
	return haar_from_draws(group, draws), rng


def haar_sample(rng: RandomStream, group: GroupId) -> tuple[GroupElement, RandomStream]:
	matrices, rng = haar_matrices(rng, group, 1)
	return check_group_element(GroupElement(group, matrices[0])), rng


def project_to_algebra(group: GroupId, matrices: np.ndarray) -> np.ndarray:
	"""Traceless anti-Hermitian part (anti-Hermitian part for U1)."""
	anti = (matrices - dagger(matrices)) / 2
	if group in (GroupId.SU2, GroupId.SU3):
		trace = np.trace(anti, axis1=-2, axis2=-1) / group.matrix_order
		anti = anti - trace[..., None, None] * np.eye(group.matrix_order)
	return anti


def exp_algebra(group: GroupId, matrices: np.ndarray) -> np.ndarray:
	"""
	Exponential of a stack of algebra elements. Inputs are projected onto the algebra first.
	"""
	matrices = np.asarray(matrices, dtype=np.complex128)
	if group is GroupId.Z2:
		return np.ones_like(matrices)
	matrices = project_to_algebra(group, matrices)
	if group is GroupId.U1:
		return np.exp(matrices)
	if group is GroupId.SU2:
		a3 = matrices[..., 0, 0].imag
		a1 = matrices[..., 0, 1].imag
		a2 = matrices[..., 0, 1].real
		angle = np.sqrt(a1 * a1 + a2 * a2 + a3 * a3)
		# sin(angle) / angle without the removable singularity
		return np.cos(angle)[..., None, None] * np.eye(2) + np.sinc(angle / np.pi)[..., None, None] * matrices
	hermitian = -1j * matrices
	hermitian = (hermitian + dagger(hermitian)) / 2
	eigenvalues, eigenvectors = np.linalg.eigh(hermitian)
	return (eigenvectors * np.exp(1j * eigenvalues)[..., None, :]) @ dagger(eigenvectors)


def exp_map(m: AlgebraElement) -> GroupElement:
	return check_group_element(GroupElement(m.group, exp_algebra(m.group, m.entries[None])[0]))


def near_identity_from_normals(group: GroupId, spread: float, normals: np.ndarray) -> np.ndarray:
	"""exp(spread * X) with X = sum_a c_a B_a, one row of coefficients per matrix."""
	algebra = np.tensordot(normals, algebra_basis(group), axes=([-1], [0]))
	return exp_algebra(group, spread * algebra)


def flips_from_uniforms(spread: float, uniforms: np.ndarray) -> np.ndarray:
	"""Z2 proposals: -1 with probability min(spread, 1)."""
	return np.where(uniforms < min(spread, 1.0), -1.0, 1.0).astype(np.complex128).reshape(-1, 1, 1)


def random_near_identity(rng: RandomStream, group: GroupId, spread: float) -> tuple[GroupElement, RandomStream]:
	"""
	Symmetric proposal around the identity: exp(spread * X) for a standard
	Gaussian algebra element X, a sign flip with probability min(spread, 1) for Z2.
	"""
	if spread <= 0:
		raise UsageError(f"Proposal spread must be positive, got {spread}")
	if group is GroupId.Z2:
		uniforms, rng = rng.uniform(1)
		return GroupElement(group, flips_from_uniforms(spread, uniforms)[0]), rng
	normals, rng = rng.normal((1, group.generator_count))
	return check_group_element(GroupElement(group, near_identity_from_normals(group, spread, normals)[0])), rng


def project_to_group(group: GroupId, matrices: np.ndarray) -> tuple[np.ndarray, float]:
	"""
	Nearest group elements of a stack of matrices and the largest Frobenius distance moved.
	"""
	matrices = np.asarray(matrices, dtype=np.complex128)
	if group is GroupId.Z2:
		projected = np.where(matrices.real < 0, -1.0, 1.0).astype(np.complex128)
	elif group is GroupId.U1:
		modulus = np.abs(matrices)
		projected = np.where(modulus > 0, matrices / np.where(modulus > 0, modulus, 1.0), 1.0 + 0j)
	else:
		u, _s, vh = np.linalg.svd(matrices)
		projected = u @ vh
		determinant = np.linalg.det(projected)
		projected = projected * (determinant ** (-1.0 / group.matrix_order))[..., None, None]
	if not len(matrices):
		return projected, 0.0
	distance = float(np.max(np.linalg.norm((matrices - projected).reshape(len(matrices), -1), axis=-1)))
	return projected, distance


def reunitarize_matrices(group: GroupId, matrices: np.ndarray) -> np.ndarray:
	projected, distance = project_to_group(group, matrices)
	if distance > DRIFT_LIMIT:
		raise NumericalDriftError(f"{group.value} links drifted by {distance:.3e} from the group manifold")
	logger.trace("Reunitarized %d %s matrices, largest correction %.3e", len(matrices), group.value, distance)
	return projected


def reunitarize(a: GroupElement) -> GroupElement:
	return check_group_element(GroupElement(a.group, reunitarize_matrices(a.group, a.entries[None])[0]))
