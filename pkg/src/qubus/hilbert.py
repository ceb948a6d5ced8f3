"""Dense operator algebra over composite Hilbert spaces.

Everything downstream (Hamiltonians, Lindblad propagation, entanglement
measures) is built from the small vocabulary defined here: a layout type
tagging tensor structure, dense complex ``Operator``/``DensityMatrix``
wrappers, tensor embedding, partial trace/transpose, the trace norm, and
canonical states.  All values are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import LayoutError, TruncationError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered subsystem dimensions of a composite Hilbert space.

    ``dims`` lists the factor dimensions in tensor order, e.g. ``(2, 2, 10)``
    for qubit (x) qubit (x) oscillator truncated to 10 Fock levels.
    """

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise LayoutError(f"subsystem dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return reduce(lambda a, b: a * b, self.dims, 1)

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def __mul__(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.dims + other.dims)


@dataclass(frozen=True)
class Operator:
    """A dense complex square matrix tagged with its subsystem layout."""

    layout: SubsystemLayout
    data: np.ndarray = field(repr=False)

    def __init__(self, layout: SubsystemLayout | Sequence[int], data: np.ndarray):
        if not isinstance(layout, SubsystemLayout):
            layout = SubsystemLayout(layout)
        arr = np.ascontiguousarray(data, dtype=np.complex128)
        d = layout.total_dim
        if arr.shape != (d, d):
            raise LayoutError(
                f"operator shape {arr.shape} does not match layout dimension {d}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def dag(self) -> "Operator":
        return Operator(self.layout, self.data.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T)) <= tol)

    def expectation(self, rho: "DensityMatrix | Operator") -> complex:
        mat = rho.op.data if isinstance(rho, DensityMatrix) else rho.data
        return complex(np.trace(self.data @ mat))

    # Light arithmetic sugar; heavy lifting stays on raw arrays downstream.
    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.data @ other.data)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.data + other.data)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.data - other.data)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.layout, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.data)

    def _check_same_layout(self, other: "Operator") -> None:
        if self.layout.dims != other.layout.dims:
            raise LayoutError(
                f"layout mismatch: {self.layout.dims} vs {other.layout.dims}"
            )


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state.

    Construction enforces Hermiticity to 1e-12 (max norm), unit trace to
    1e-10 and smallest eigenvalue >= -1e-8; violations raise ``ValueError``.
    """

    op: Operator

    def __init__(self, op: Operator | np.ndarray, layout=None):
        if not isinstance(op, Operator):
            op = Operator(layout, op)
        mat = op.data
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max deviation {herm:.3e}")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
        lo = float(np.linalg.eigvalsh(mat)[0])
        if lo < POSITIVITY_TOL:
            raise ValueError(f"negative eigenvalue {lo:.3e} below tolerance")
        object.__setattr__(self, "op", op)

    @property
    def layout(self) -> SubsystemLayout:
        return self.op.layout

    @property
    def data(self) -> np.ndarray:
        return self.op.data

    def expectation(self, obs: Operator) -> float:
        val = np.trace(obs.data @ self.data)
        return float(val.real)

    def purity(self) -> float:
        return float(np.trace(self.data @ self.data).real)


# ---------------------------------------------------------------------------
# Elementary operators and kets
# ---------------------------------------------------------------------------

def identity(layout: SubsystemLayout | Sequence[int]) -> Operator:
    if not isinstance(layout, SubsystemLayout):
        layout = SubsystemLayout(layout)
    return Operator(layout, np.eye(layout.total_dim))


def sigma_x() -> Operator:
    return Operator([2], np.array([[0, 1], [1, 0]], dtype=complex))


def sigma_y() -> Operator:
    return Operator([2], np.array([[0, -1j], [1j, 0]], dtype=complex))


def sigma_z() -> Operator:
    return Operator([2], np.array([[1, 0], [0, -1]], dtype=complex))


def sigma_minus() -> Operator:
    """Lowering operator |down><up| in the sigma_z eigenbasis."""
    return Operator([2], np.array([[0, 0], [1, 0]], dtype=complex))


def sigma_plus() -> Operator:
    return Operator([2], np.array([[0, 1], [0, 0]], dtype=complex))


def destroy(n_levels: int) -> Operator:
    """Bosonic lowering operator on a truncated Fock ladder."""
    a = np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1)
    return Operator([n_levels], a)


def create(n_levels: int) -> Operator:
    return destroy(n_levels).dag()


def number(n_levels: int) -> Operator:
    return Operator([n_levels], np.diag(np.arange(n_levels, dtype=float)))


def basis_ket(layout: SubsystemLayout | Sequence[int], index: int) -> np.ndarray:
    if not isinstance(layout, SubsystemLayout):
        layout = SubsystemLayout(layout)
    ket = np.zeros(layout.total_dim, dtype=np.complex128)
    ket[index] = 1.0
    return ket


def ket_to_dm(ket: np.ndarray, layout: SubsystemLayout | Sequence[int]) -> DensityMatrix:
    ket = np.asarray(ket, dtype=np.complex128)
    ket = ket / np.linalg.norm(ket)
    return DensityMatrix(Operator(layout, np.outer(ket, ket.conj())))


# ---------------------------------------------------------------------------
# Tensor algebra
# ---------------------------------------------------------------------------

def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product with concatenated layout."""
    return Operator(a.layout * b.layout, np.kron(a.data, b.data))


def kron_all(*ops: Operator) -> Operator:
    return reduce(kron, ops)


def embed(op: Operator, slot: int, layout: SubsystemLayout | Sequence[int]) -> Operator:
    """Place ``op`` on subsystem ``slot`` and identities everywhere else."""
    if not isinstance(layout, SubsystemLayout):
        layout = SubsystemLayout(layout)
    if not 0 <= slot < layout.n_subsystems:
        raise LayoutError(f"slot {slot} outside layout {layout.dims}")
    if op.dim != layout.dims[slot]:
        raise LayoutError(
            f"operator dimension {op.dim} does not fit slot {slot} "
            f"of layout {layout.dims}"
        )
    out = np.array([[1.0 + 0j]])
    for i, d in enumerate(layout.dims):
        factor = op.data if i == slot else np.eye(d)
        out = np.kron(out, factor)
    return Operator(layout, out)


def _as_matrix(x) -> tuple[np.ndarray, SubsystemLayout]:
    if isinstance(x, DensityMatrix):
        return x.data, x.layout
    if isinstance(x, Operator):
        return x.data, x.layout
    raise TypeError(f"expected Operator or DensityMatrix, got {type(x)}")


def partial_trace(rho, keep: Iterable[int]):
    """Reduced operator over the kept subsystems.

    ``keep`` is a set of subsystem indices; tensor order of the survivors is
    preserved.  Returns the same type it was given (a reduced density matrix
    for a ``DensityMatrix`` input).
    """
    keep = sorted(set(int(k) for k in keep))
    mat, layout = _as_matrix(rho)
    n = layout.n_subsystems
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} outside layout {layout.dims}")

    dims = layout.dims
    tensor = mat.reshape(dims + dims)
    # Trace out dropped subsystems from the highest axis down so earlier
    # axis numbers stay valid.
    dropped = [i for i in range(n) if i not in keep]
    n_left = n
    for i in sorted(dropped, reverse=True):
        tensor = np.trace(tensor, axis1=i, axis2=i + n_left)
        n_left -= 1
    new_layout = SubsystemLayout([dims[i] for i in keep])
    d = new_layout.total_dim
    out = Operator(new_layout, tensor.reshape(d, d))
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out)
    return out


def partial_transpose(rho, subsystems: int | Iterable[int]) -> Operator:
    """Transpose the listed subsystems' indices; trace is preserved exactly."""
    if isinstance(subsystems, (int, np.integer)):
        subsystems = [int(subsystems)]
    subsystems = sorted(set(int(s) for s in subsystems))
    mat, layout = _as_matrix(rho)
    n = layout.n_subsystems
    if not subsystems or subsystems[0] < 0 or subsystems[-1] >= n:
        raise ValueError(f"invalid subsystem indices {subsystems} for {layout.dims}")
    dims = layout.dims
    tensor = mat.reshape(dims + dims)
    axes = list(range(2 * n))
    for s in subsystems:
        axes[s], axes[s + n] = axes[s + n], axes[s]
    d = layout.total_dim
    return Operator(layout, tensor.transpose(axes).reshape(d, d))


def trace_norm(x: Operator | np.ndarray) -> float:
    """Sum of singular values, Tr sqrt(X^dag X)."""
    mat = x.data if isinstance(x, Operator) else np.asarray(x)
    return float(np.sum(np.linalg.svd(mat, compute_uv=False)))


# ---------------------------------------------------------------------------
# Canonical states and the truncation rule
# ---------------------------------------------------------------------------

def thermal_occupation_ratio(omega: float, temperature: float) -> float:
    """Boltzmann ratio q = exp(-omega/T) of successive Fock populations."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        return 0.0
    return math.exp(-omega / temperature)


def thermal_tail_mass(omega: float, temperature: float, n_levels: int) -> float:
    """Probability weight above the truncated ladder, q**N."""
    return thermal_occupation_ratio(omega, temperature) ** n_levels


def thermal_state(
    omega: float,
    temperature: float,
    n_levels: int,
    tail_tol: float = 1e-6,
) -> DensityMatrix:
    """Truncated oscillator thermal state, renormalized to unit trace.

    Raises ``TruncationError`` when the untruncated weight beyond the ladder
    exceeds ``tail_tol``; drivers that deliberately run capped truncations
    pass a relaxed tolerance and rely on the convergence gate instead.
    """
    if n_levels < 1:
        raise ValueError("need at least one Fock level")
    q = thermal_occupation_ratio(omega, temperature)
    tail = q ** n_levels
    if tail > tail_tol:
        raise TruncationError(
            f"thermal tail mass {tail:.3e} above {tail_tol:.1e} for "
            f"N={n_levels}, omega={omega}, T={temperature}"
        )
    weights = q ** np.arange(n_levels)
    weights /= weights.sum()
    return DensityMatrix(Operator([n_levels], np.diag(weights)))


def choose_fock_truncation(
    n_th: float,
    *,
    max_occupation: float | None = None,
    tail_target: float = 1e-8,
    floor: int = 2,
    cap: int | None = None,
) -> int:
    """Smallest truncation meeting the thermal-tail and head-room rules.

    The tail rule keeps the untruncated thermal weight above the ladder below
    ``tail_target``; the head-room rule keeps a factor-3 margin over the
    largest occupation the run is expected to reach.  ``cap``, when given,
    bounds the result by the solver budget (callers are expected to relax the
    thermal-state tolerance and lean on the convergence gate in that case).
    """
    n_th = max(0.0, float(n_th))
    need = floor
    if n_th > 0:
        q = n_th / (n_th + 1.0)
        need = max(need, math.ceil(math.log(tail_target) / math.log(q)))
    if max_occupation is not None and max_occupation > 0:
        need = max(need, math.ceil(3.0 * max_occupation) + 1)
    if cap is not None:
        need = min(need, cap)
    return need
