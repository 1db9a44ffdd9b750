"""Dense complex linear algebra for small multi-partite Hermitian operators.

Everything here works on explicit dense matrices tagged with an ordered tuple
of subsystem dimensions.  Tensor-order convention used throughout the package:
the left factor is the slow index, i.e. the composite basis index of
``A (x) B`` is ``a * dim_b + b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Tolerances shared across the package (sizes here stay <= a few hundred, so
# these sit comfortably above double-precision noise).
HERMITICITY_ATOL = 1e-10
PSD_ATOL = 1e-9
EQUALITY_ATOL = 1e-9
STATE_ATOL = 1e-10


class ValidationError(ValueError):
    """An operator or vector violates a structural invariant."""


class DimensionError(ValidationError):
    """Subsystem dimensions are inconsistent or out of range."""


class PositivityError(ValidationError):
    """An operator required to be positive semidefinite is not."""


def _as_complex_matrix(mat: np.ndarray | Sequence) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValidationError("matrix contains non-finite entries")
    return arr


def _check_dims(dims: Iterable[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise DimensionError(f"product of dims {dims} does not match size {size}")
    return dims


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix on a tensor product of subsystems.

    The stored matrix is the Hermitian average of the input; construction
    rejects inputs whose anti-Hermitian part exceeds ``HERMITICITY_ATOL``.
    """

    mat: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, mat: np.ndarray | Sequence, dims: Iterable[int]):
        arr = _as_complex_matrix(mat)
        skew = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
        if skew > HERMITICITY_ATOL:
            raise ValidationError(f"matrix is not Hermitian (residual {skew:.3e})")
        arr = (arr + arr.conj().T) / 2
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)
        object.__setattr__(self, "dims", _check_dims(dims, arr.shape[0]))

    @property
    def size(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def eigenvalues(self) -> np.ndarray:
        """Real eigenvalues in ascending order."""
        return np.linalg.eigvalsh(self.mat)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def is_psd(self, atol: float = PSD_ATOL) -> bool:
        return self.min_eigenvalue() >= -atol


@dataclass(frozen=True)
class Ket:
    """A state vector with tagged subsystem dimensions.

    ``normalized=True`` (the default) enforces unit norm within ``STATE_ATOL``.
    """

    amps: np.ndarray
    dims: tuple[int, ...]
    normalized: bool = field(default=True, compare=False)

    def __init__(self, amps: np.ndarray | Sequence, dims: Iterable[int], normalized: bool = True):
        arr = np.ascontiguousarray(np.asarray(amps, dtype=complex).reshape(-1))
        if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
            raise ValidationError("amplitudes contain non-finite entries")
        if normalized and abs(np.linalg.norm(arr) - 1.0) > STATE_ATOL:
            raise ValidationError(f"ket is not normalized (norm {np.linalg.norm(arr):.12f})")
        arr.setflags(write=False)
        object.__setattr__(self, "amps", arr)
        object.__setattr__(self, "dims", _check_dims(dims, arr.shape[0]))
        object.__setattr__(self, "normalized", bool(normalized))

    @property
    def size(self) -> int:
        return self.amps.shape[0]

    def projector(self) -> HermitianOperator:
        """Rank-1 operator |v><v| with the same subsystem dims."""
        return HermitianOperator(np.outer(self.amps, self.amps.conj()), self.dims)

    def overlap(self, other: "Ket") -> complex:
        """Inner product <self|other>."""
        if self.size != other.size:
            raise DimensionError("kets live on different spaces")
        return complex(np.vdot(self.amps, other.amps))


def kron(a, b):
    """Tensor product of two operators or two kets; dims concatenate."""
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        return HermitianOperator(np.kron(a.mat, b.mat), a.dims + b.dims)
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amps, b.amps), a.dims + b.dims,
                   normalized=a.normalized and b.normalized)
    raise TypeError("kron expects two HermitianOperator or two Ket operands")


def partial_trace(op: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Trace out every subsystem not in ``keep``; kept dims stay in original order."""
    keep = sorted(set(int(k) for k in keep))
    n = len(op.dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    traced = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwx"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for idx in traced:
        col[idx] = row[idx]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reshaped = op.mat.reshape(op.dims + op.dims)
    kept_dims = tuple(op.dims[i] for i in keep) or (1,)
    kept_size = int(np.prod(kept_dims))
    result = np.einsum("".join(row) + "".join(col) + "->" + out, reshaped)
    return HermitianOperator(result.reshape(kept_size, kept_size), kept_dims)


def basis_transpose(op: HermitianOperator) -> HermitianOperator:
    """Transpose in the fixed computational basis (involutive)."""
    return HermitianOperator(op.mat.T, op.dims)


def conjugate_ket(v: Ket) -> Ket:
    """Entrywise complex conjugate in the computational basis."""
    return Ket(v.amps.conj(), v.dims, normalized=v.normalized)


def eig_hermitian(op: HermitianOperator) -> tuple[np.ndarray, list[Ket]]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian operator."""
    vals, vecs = np.linalg.eigh(op.mat)
    kets = [Ket(vecs[:, i], op.dims) for i in range(op.size)]
    return vals, kets


def operator_norm(op: HermitianOperator, require_psd: bool = False) -> float:
    """Largest |eigenvalue|; equals the largest eigenvalue for positive operators."""
    vals = op.eigenvalues()
    if require_psd and vals[0] < -PSD_ATOL:
        raise PositivityError(f"operator has negative eigenvalue {vals[0]:.3e}")
    return float(np.max(np.abs(vals)))


def maximally_entangled_ket(d: int) -> Ket:
    """The ket (1/sqrt(d)) * sum_i |i,i> on two d-dimensional factors."""
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    amps = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return Ket(amps, (d, d))


def maximally_entangled_state(d: int, normalized: bool = True) -> HermitianOperator:
    """The projector onto the maximally entangled ket; unnormalized variant has trace d."""
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    v = np.eye(d, dtype=complex).reshape(-1)
    mat = np.outer(v, v.conj())
    if normalized:
        mat = mat / d
    return HermitianOperator(mat, (d, d))


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return self.valid

    def summary(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{v.kind}: {v.detail} (residual {v.residual:.3e})" for v in self.violations)


def validate_povm(effects: Sequence[HermitianOperator]) -> ValidationReport:
    """Check positivity of each effect and completeness of the family."""
    violations: list[Violation] = []
    if not effects:
        return ValidationReport(False, (Violation("empty", "no effects given", np.inf),))
    dims = effects[0].dims
    for i, eff in enumerate(effects):
        if eff.dims != dims:
            violations.append(Violation("dims", f"effect {i} dims {eff.dims} != {dims}", np.inf))
            continue
        lo = eff.min_eigenvalue()
        if lo < -PSD_ATOL:
            violations.append(Violation("positivity", f"effect {i} min eigenvalue {lo:.3e}", -lo))
    total = sum(eff.mat for eff in effects if eff.dims == dims)
    resid = float(np.max(np.abs(total - np.eye(effects[0].size))))
    if resid > EQUALITY_ATOL:
        violations.append(Violation("completeness", "effects do not sum to identity", resid))
    return ValidationReport(not violations, tuple(violations))


def validate_state(rho: HermitianOperator) -> ValidationReport:
    """Check positivity and unit trace of a density operator."""
    violations: list[Violation] = []
    lo = rho.min_eigenvalue()
    if lo < -STATE_ATOL:
        violations.append(Violation("positivity", f"min eigenvalue {lo:.3e}", -lo))
    tr = rho.trace()
    if abs(tr - 1.0) > STATE_ATOL:
        violations.append(Violation("trace", f"trace {tr:.12f} != 1", abs(tr - 1.0)))
    return ValidationReport(not violations, tuple(violations))


# JSON encoding shared by every module: matrices are
#   {"dims": [d1, d2, ...], "data": [[[re, im], ...], ...]}   (row-major)
# and vectors are
#   {"dims": [...], "amps": [[re, im], ...]}.

def _entries_to_json(arr: np.ndarray) -> list:
    # + 0.0 canonicalizes negative zeros so files round-trip byte-identically
    if arr.ndim == 1:
        return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in arr]
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in arr]


def _entries_from_json(data: list, ndim: int) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise ValidationError(f"malformed complex entries of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def operator_to_json(op: HermitianOperator) -> dict:
    return {"dims": list(op.dims), "data": _entries_to_json(op.mat)}


def operator_from_json(obj: dict) -> HermitianOperator:
    return HermitianOperator(_entries_from_json(obj["data"], 2), obj["dims"])


def ket_to_json(v: Ket) -> dict:
    return {"dims": list(v.dims), "amps": _entries_to_json(v.amps)}


def ket_from_json(obj: dict) -> Ket:
    return Ket(_entries_from_json(obj["amps"], 1), obj["dims"])


def dumps_canonical(obj: dict) -> str:
    """Deterministic JSON text used for files and digests."""
    return json.dumps(obj, indent=2, sort_keys=False)
