"""Lindblad propagation, steady states and regression correlators.

Two propagation engines back everything:

* ``expm-eig`` - exact (to linear-algebra error) eigendecomposition of the
  Liouvillian, used for time-independent generators.  The superoperator is
  assembled in the column-stacking convention
  ``L = -i(I (x) H - H^T (x) I) + sum_k [ conj(L_k) (x) L_k
  - 1/2 (I (x) L_k^dag L_k + (L_k^dag L_k)^T (x) I) ]``
  and then similarity-transformed to the real matrix it is in an orthonormal
  Hermitian-operator basis before the (much cheaper) real eigensolve.
* ``rk4`` - classic fixed-step 4th-order Runge-Kutta directly on the density
  matrix, batched over a leading axis, with the time-dependent Hamiltonian
  sampled at stage times.  Used for pulsed segments and as an independent
  cross-check of the eigendecomposition route.

Long measurement windows (the readout cutoff is ~2.5e5 oscillator periods)
make stepping uneconomical, which is why the eigendecomposition route is the
default whenever the generator is constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.linalg
import scipy.sparse

from . import hilbert as hs
from .errors import (
    IntegrationError,
    LayoutError,
    NonUniqueSteadyStateError,
    NumericalError,
    RegimeWarning,
)
from .hilbert import DensityMatrix, Operator, SubsystemLayout
from .models import LindbladSet, Model, SystemParams

EIG_DIM_MAX = 5000          # largest D^2 handled by the eigendecomposition route
RK4_STABILITY_MARGIN = 0.9  # fraction of the |z| <= 2.8 RK4 stability radius
EDGE_STEPS = 200            # minimum steps across a tanh pulse edge
RK4_PHASE_TOL = 0.02        # accumulated phase error budget (rad) per run
RK4_CONTENT_OMEGA = 1.5     # dominant dynamical frequency bound, omega_h units


def _vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return mat.reshape(-1, order="F")


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape((d, d), order="F")


@dataclass(frozen=True)
class Liouvillian:
    """Dense superoperator acting on column-stacked density matrices."""

    dim: int
    matrix: np.ndarray = field(repr=False)

    @property
    def superop_dim(self) -> int:
        return self.dim * self.dim


def liouvillian(h: Operator, ls: LindbladSet) -> Liouvillian:
    """Assemble the quantum-master-equation generator."""
    d = h.dim
    for op in ls:
        if op.dim != d:
            raise LayoutError("jump operator dimension differs from Hamiltonian")
    eye = np.eye(d)
    hm = h.data
    L = -1j * (np.kron(eye, hm) - np.kron(hm.T, eye))
    for op in ls:
        lm = op.data
        ldl = lm.conj().T @ lm
        L += np.kron(lm.conj(), lm)
        L -= 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return Liouvillian(d, L)


# ---------------------------------------------------------------------------
# Real representation in a Hermitian operator basis
# ---------------------------------------------------------------------------

_BASIS_CACHE: dict[int, scipy.sparse.csr_matrix] = {}


def _hermitian_basis_map(d: int) -> scipy.sparse.csr_matrix:
    """Unitary T with (T vec(rho))_k = Tr[B_k rho] for the orthonormal
    Hermitian basis {E_ii, (E_rc+E_cr)/sqrt2, i(E_rc-E_cr)/sqrt2 (r<c)}.

    Hermiticity-preserving superoperators are real matrices after conjugation
    by T, which roughly triples eigensolver throughput.
    """
    cached = _BASIS_CACHE.get(d)
    if cached is not None:
        return cached
    rows, cols, vals = [], [], []
    k = 0
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(d):
        rows.append(k)
        cols.append(i * d + i)  # Tr[E_ii rho] reads rho[i, i]
        vals.append(1.0)
        k += 1
    for r in range(d):
        for c in range(r + 1, d):
            # Tr[B rho] = sum_rc B[r, c] rho[c, r] -> vec index r*d + c
            rows += [k, k]
            cols += [r * d + c, c * d + r]
            vals += [inv_sqrt2, inv_sqrt2]
            k += 1
            rows += [k, k]
            cols += [r * d + c, c * d + r]
            vals += [1j * inv_sqrt2, -1j * inv_sqrt2]
            k += 1
    t = scipy.sparse.csr_matrix(
        (np.array(vals, dtype=np.complex128), (rows, cols)), shape=(d * d, d * d)
    )
    _BASIS_CACHE[d] = t
    return t


class EigPropagator:
    """Spectral decomposition of a time-independent Liouvillian.

    Exposes state advancement, observable traces along a time grid, and the
    exponential-mode decomposition of scalar records (used by the regression
    correlator, whose sample grids run to millions of points).
    """

    def __init__(self, liou: Liouvillian):
        self.dim = liou.dim
        d2 = liou.superop_dim
        t_map = _hermitian_basis_map(self.dim)
        real_gen = t_map @ liou.matrix @ t_map.conj().T.tocsc()
        real_gen = np.asarray(real_gen.todense()) if scipy.sparse.issparse(real_gen) else real_gen
        imag_leak = float(np.max(np.abs(real_gen.imag)))
        if imag_leak > 1e-10:
            raise NumericalError(
                f"generator is not Hermiticity-preserving (imag leak {imag_leak:.2e})"
            )
        gen = np.ascontiguousarray(real_gen.real)
        self._t_map = t_map
        w, v = np.linalg.eig(gen)
        self.eigenvalues = w
        self._v = v
        self._lu = scipy.linalg.lu_factor(v)
        # Spot-check diagonalization quality on a generic vector.
        probe = np.ones(d2) / math.sqrt(d2)
        c = scipy.linalg.lu_solve(self._lu, probe.astype(complex))
        resid = np.linalg.norm(self._v @ (w * c) - gen @ probe)
        scale = np.linalg.norm(gen @ probe) + 1e-30
        if resid / scale > 1e-6:
            raise NumericalError(
                "Liouvillian eigenbasis is too ill-conditioned for propagation "
                f"(relative residual {resid / scale:.2e}); use the rk4 method"
            )

    # -- coordinate helpers --------------------------------------------------
    def coords(self, mat: np.ndarray) -> np.ndarray:
        """Real coordinates of a Hermitian matrix."""
        return np.asarray((self._t_map @ _vec(mat)).real)

    def uncoords(self, r: np.ndarray) -> np.ndarray:
        v = self._t_map.conj().T @ r.astype(complex)
        return _unvec(np.asarray(v), self.dim)

    def mode_coefficients(self, mat0: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, self.coords(mat0).astype(complex))

    # -- propagation ---------------------------------------------------------
    def advance(self, mats: np.ndarray, dt: float) -> np.ndarray:
        """Advance one matrix or a (B, D, D) stack by dt."""
        single = mats.ndim == 2
        stack = mats[None] if single else mats
        b = stack.shape[0]
        r0 = np.stack([self.coords(stack[i]) for i in range(b)], axis=1)
        c = scipy.linalg.lu_solve(self._lu, r0.astype(complex))
        rt = (self._v @ (np.exp(self.eigenvalues * dt)[:, None] * c)).real
        out = np.stack([self.uncoords(rt[:, i]) for i in range(b)], axis=0)
        return out[0] if single else out

    def states_on_grid(self, mat0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """All states along a (modest) grid, shape (T, D, D)."""
        c = self.mode_coefficients(mat0)
        phases = np.exp(np.outer(self.eigenvalues, times))  # (K, T)
        rt = (self._v @ (c[:, None] * phases)).real
        return np.stack([self.uncoords(rt[:, i]) for i in range(times.size)])

    def observables_on_grid(
        self, mat0: np.ndarray, obs: Mapping[str, np.ndarray], times: np.ndarray
    ) -> dict[str, np.ndarray]:
        if not obs:
            return {}
        c = self.mode_coefficients(mat0)
        rows = np.stack([self.coords(o) for o in obs.values()])  # (n_obs, K)
        weights = (rows @ self._v) * c[None, :]
        phases = np.exp(np.outer(self.eigenvalues, times))
        vals = (weights @ phases).real
        return {name: vals[i] for i, name in enumerate(obs)}

    def scalar_modes(
        self, mat0: np.ndarray, obs_mat: np.ndarray, rel_tol: float = 1e-12
    ) -> tuple[np.ndarray, np.ndarray]:
        """(eigenvalues, amplitudes) of Tr[obs rho(t)] = sum_k A_k e^{l_k t}.

        Modes are pruned so the discarded amplitude mass is below ``rel_tol``
        of the total, which keeps million-point correlator grids cheap.
        """
        c = self.mode_coefficients(mat0)
        amp = (self.coords(obs_mat) @ self._v) * c
        mags = np.abs(amp)
        order = np.argsort(mags)[::-1]
        cum_tail = np.cumsum(mags[order][::-1])[::-1]
        total = cum_tail[0] if cum_tail.size else 0.0
        keep_n = int(np.searchsorted(-cum_tail, -rel_tol * total)) if total > 0 else 0
        keep = order[: max(keep_n, 1)]
        return self.eigenvalues[keep], amp[keep]


def modes_on_uniform_grid(
    lam: np.ndarray,
    amp: np.ndarray,
    dt: float,
    n_samples: int,
    t0: float = 0.0,
    chunk: int = 1 << 16,
) -> np.ndarray:
    """Evaluate Re sum_k A_k e^{l_k (t0 + j dt)} for j = 0..n-1.

    Uses a running-product recurrence instead of per-sample exponentials;
    stable because Re(l_k) <= 0 for dissipative generators.
    """
    out = np.empty(n_samples, dtype=float)
    base = np.exp(lam * dt)
    running = amp * np.exp(lam * t0)
    done = 0
    block = np.empty((lam.size, min(chunk, n_samples)), dtype=complex)
    while done < n_samples:
        m = min(chunk, n_samples - done)
        g = block[:, :m]
        g[:, 0] = running
        if m > 1:
            g[:, 1:] = base[:, None]
            np.multiply.accumulate(g, axis=1, out=g)
        out[done : done + m] = g.sum(axis=0).real
        running = g[:, m - 1] * base
        done += m
    return out


# ---------------------------------------------------------------------------
# RK4 stepping
# ---------------------------------------------------------------------------

def _spectral_spread(model: Model) -> float:
    h = model.h0.data
    if model.h1 is not None:
        # Bound the spread by the plateau amplitude of the drive.
        probe = np.linspace(-1e6, 1e6, 7)
        amp = float(np.max(np.abs([model.drive(t) for t in probe])))
        h = h + amp * model.h1.data
    ev = np.linalg.eigvalsh(h)
    return float(ev[-1] - ev[0])


def default_rk4_step(
    model: Model,
    span: float | None = None,
    edge_time: float | None = None,
    phase_tol: float = RK4_PHASE_TOL,
) -> float:
    """Fixed step bounded by stability, accumulated phase error, and edges.

    Stability confines z = i*spread(H)*h to the RK4 stability region
    (|z| < 2.8); accuracy bounds the phase error a dominant-frequency mode
    (RK4_CONTENT_OMEGA, in the oscillator-frequency units the whole package
    works in) accumulates over the run, (span/h) (w h)^5 / 120 <= phase_tol;
    tanh edges get at least EDGE_STEPS steps across their ~5 t0 width.
    """
    spread = max(_spectral_spread(model), 1e-12)
    h = RK4_STABILITY_MARGIN * 2.8 / spread
    if span is not None and span > 0:
        w = RK4_CONTENT_OMEGA
        h = min(h, (120.0 * phase_tol / (span * w ** 5)) ** 0.25)
    if edge_time is not None and edge_time > 0:
        h = min(h, 5.0 * edge_time / EDGE_STEPS)
    return h


class _Rk4Engine:
    def __init__(self, model: Model):
        self.h0 = model.h0.data
        ls = model.lindblads.matrices()
        self.jumps = [(lm, lm.conj().T) for lm in ls]
        ldl = sum((lm.conj().T @ lm for lm in ls), np.zeros_like(self.h0))
        self.heff0 = self.h0 - 0.5j * ldl
        self.h1 = model.h1.data if model.h1 is not None else None
        self.drive = model.drive

    def rhs(self, t: float, r: np.ndarray) -> np.ndarray:
        heff = self.heff0 if self.h1 is None else self.heff0 + self.drive(t) * self.h1
        out = -1j * (heff @ r - r @ heff.conj().T)
        for lm, ld in self.jumps:
            out += lm @ r @ ld
        return out

    def step(self, t: float, r: np.ndarray, h: float) -> np.ndarray:
        k1 = self.rhs(t, r)
        k2 = self.rhs(t + 0.5 * h, r + (0.5 * h) * k1)
        k3 = self.rhs(t + 0.5 * h, r + (0.5 * h) * k2)
        k4 = self.rhs(t + h, r + h * k3)
        return r + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def rk4_evolve_mats(
    model: Model,
    mats: np.ndarray,
    t_start: float,
    t_end: float,
    *,
    max_step: float | None = None,
    record_times: np.ndarray | None = None,
    record_fn: Callable[[int, float, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Step a (B, D, D) stack (or one matrix) from t_start to t_end.

    ``record_fn(index, t, mats)`` fires at each requested record time.
    Raises ``NumericalError`` on non-finite values.
    """
    single = mats.ndim == 2
    r = np.ascontiguousarray(mats[None] if single else mats, dtype=np.complex128).copy()
    engine = _Rk4Engine(model)
    if max_step is None:
        max_step = default_rk4_step(model, span=t_end - t_start)
    if record_times is None:
        record_times = np.array([t_end])
    waypoints = np.asarray(record_times, dtype=float)
    if waypoints.size and (waypoints[0] < t_start - 1e-12 or np.any(np.diff(waypoints) < 0)):
        raise ValueError("record times must be increasing and within the span")
    t = t_start
    idx = 0
    if waypoints.size and abs(waypoints[0] - t_start) < 1e-12:
        if record_fn is not None:
            record_fn(0, t_start, r[0] if single else r)
        idx = 1
    targets = list(waypoints[idx:]) + ([] if waypoints.size and waypoints[-1] >= t_end - 1e-12 else [t_end])
    for j, target in enumerate(targets):
        span = target - t
        if span < -1e-12:
            raise ValueError("record times must be increasing")
        if span > 1e-15:
            n_sub = max(1, math.ceil(span / max_step))
            h = span / n_sub
            for _ in range(n_sub):
                r = engine.step(t, r, h)
                t += h
            t = target
        if not np.isfinite(r.reshape(-1)[:: max(1, r.size // 64)]).all():
            raise NumericalError(f"non-finite state at t = {t:.6g}")
        if record_fn is not None and idx + j < waypoints.size:
            record_fn(idx + j, target, r[0] if single else r)
    if not np.isfinite(r).all():
        raise NumericalError("non-finite values after integration")
    return r[0] if single else r


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Time grid plus named scalar records (and optional state snapshots)."""

    times: np.ndarray
    records: dict[str, np.ndarray]
    states: list[np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Write `t,<observables...>` rows at 17 significant digits."""
        names = list(self.records)
        with open(path, "w") as f:
            f.write("t," + ",".join(names) + "\n")
            for i, t in enumerate(self.times):
                row = [f"{t:.16e}"] + [f"{self.records[n][i]:.16e}" for n in names]
                f.write(",".join(row) + "\n")


def standard_observables(layout: SubsystemLayout, n_qubits: int) -> dict[str, Operator]:
    """sigma_x/z per qubit, the cross-correlation, and the photon number."""
    obs: dict[str, Operator] = {}
    for j in range(n_qubits):
        obs[f"sigma_x_{j + 1}"] = hs.embed(hs.sigma_x(), j, layout)
        obs[f"sigma_z_{j + 1}"] = hs.embed(hs.sigma_z(), j, layout)
    if n_qubits == 2:
        obs["sigma_x_1_sigma_x_2"] = Operator(
            layout,
            hs.embed(hs.sigma_x(), 0, layout).data
            @ hs.embed(hs.sigma_x(), 1, layout).data,
        )
    n_op = hs.number(layout.dims[-1])
    obs["n_osc"] = hs.embed(n_op, layout.n_subsystems - 1, layout)
    return obs


TRACE_DRIFT_TOL = 1e-6
HERM_DRIFT_TOL = 1e-8
EIG_DRIFT_TOL = -1e-6


def _state_checks(mat: np.ndarray) -> tuple[float, float, float]:
    tr = float(np.trace(mat).real)
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    lo = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0])
    return tr, herm, lo


def evolve(
    rho0: DensityMatrix,
    model: Model,
    times: np.ndarray,
    method: str = "auto",
    observables: Mapping[str, Operator] | None = None,
    *,
    store_states: bool = False,
    max_step: float | None = None,
    check: bool = True,
    propagator: EigPropagator | None = None,
) -> Trajectory:
    """Propagate a density matrix and record observables on a time grid.

    ``method`` is ``expm-eig`` (Liouvillian eigendecomposition; requires a
    time-independent model), ``rk4``, or ``auto`` which picks the former for
    constant generators up to ``EIG_DIM_MAX`` superoperator dimension.
    When ``check`` is set the trace/Hermiticity/positivity drift of every
    recorded state is validated against the integration-quality budget and a
    violation raises ``IntegrationError``.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 1 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if rho0.layout.dims != model.layout.dims:
        raise LayoutError("initial state layout differs from model")
    d = model.layout.total_dim
    if method == "auto":
        method = (
            "expm-eig"
            if (not model.time_dependent and d * d <= EIG_DIM_MAX)
            else "rk4"
        )
    if method == "expm-eig" and model.time_dependent:
        raise ValueError("expm-eig requires a time-independent model")

    obs = dict(observables) if observables else {}
    obs_mats = {k: v.data for k, v in obs.items()}
    records: dict[str, list[float] | np.ndarray] = {}
    snapshots: list[np.ndarray] = []

    if method == "expm-eig":
        prop = propagator if propagator is not None else eig_propagator(model)
        if times[0] != 0.0:
            raise ValueError("expm-eig path expects a grid starting at t = 0")
        vals = prop.observables_on_grid(rho0.data, obs_mats, times)
        states = prop.states_on_grid(rho0.data, times)
        records.update(vals)
        snapshots = list(states)
    elif method == "rk4":
        rec_lists: dict[str, list[float]] = {k: [] for k in obs_mats}
        checks: list[np.ndarray] = []

        def on_record(i, t, mat):
            for name, om in obs_mats.items():
                rec_lists[name].append(float(np.einsum("ij,ji->", om, mat).real))
            checks.append(mat.copy())

        rho_mat = rho0.data.copy()
        t_start = times[0]
        rk4_evolve_mats(
            model,
            rho_mat,
            t_start,
            times[-1],
            max_step=max_step,
            record_times=times,
            record_fn=on_record,
        )
        records.update({k: np.asarray(v) for k, v in rec_lists.items()})
        snapshots = checks
    else:
        raise ValueError(f"unknown method {method!r}")

    traces = np.empty(times.size)
    herms = np.empty(times.size)
    lows = np.empty(times.size)
    for i, mat in enumerate(snapshots):
        traces[i], herms[i], lows[i] = _state_checks(mat)
    records["trace"] = traces
    records["herm_deviation"] = herms
    records["min_eigenvalue"] = lows
    if check:
        if np.max(np.abs(traces - 1.0)) > TRACE_DRIFT_TOL:
            raise IntegrationError(
                f"trace drift {np.max(np.abs(traces - 1.0)):.2e} beyond budget"
            )
        if np.max(herms) > HERM_DRIFT_TOL:
            raise IntegrationError(f"Hermiticity drift {np.max(herms):.2e}")
        if np.min(lows) < EIG_DRIFT_TOL:
            raise IntegrationError(f"negative eigenvalue {np.min(lows):.2e}")
    records = {k: np.asarray(v) for k, v in records.items()}
    return Trajectory(
        times=times,
        records=records,
        states=snapshots if store_states else None,
        meta={"method": method},
    )


def eig_propagator(model: Model) -> EigPropagator:
    if model.time_dependent:
        raise ValueError("eigendecomposition propagator needs a constant model")
    return EigPropagator(liouvillian(model.h0, model.lindblads))


# ---------------------------------------------------------------------------
# Steady states
# ---------------------------------------------------------------------------

def steady_state(
    model: Model, *, check_unique: bool = True, propagator_matrix: np.ndarray | None = None
) -> DensityMatrix:
    """Unique fixed point of the Liouvillian, via the trace-row replacement.

    The first row of L is replaced by the trace functional and the dense
    system solved; the null space is verified nondegenerate through the two
    smallest singular values before solving.
    """
    if model.time_dependent:
        raise ValueError("steady state of a driven(t) model is not defined here")
    liou = liouvillian(model.h0, model.lindblads)
    d = liou.dim
    lmat = liou.matrix if propagator_matrix is None else propagator_matrix
    if check_unique:
        sv = np.linalg.svd(lmat, compute_uv=False)
        if sv.size >= 2 and not (sv[-2] > 1e3 * sv[-1]):
            raise NonUniqueSteadyStateError(
                f"two smallest singular values {sv[-1]:.3e}, {sv[-2]:.3e} "
                "indicate a degenerate null space"
            )
    a = lmat.copy()
    trace_row = np.zeros(d * d, dtype=complex)
    trace_row[np.arange(d) * d + np.arange(d)] = 1.0
    a[0, :] = trace_row
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    x = np.linalg.solve(a, b)
    resid = float(np.linalg.norm(lmat @ x))
    if resid > 1e-10:
        raise NumericalError(f"steady-state residual {resid:.3e} above 1e-10")
    rho = _unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(Operator(model.layout, rho))


def steady_state_closed_form(p: SystemParams) -> dict[str, float]:
    """Weak-damping dispersive fixed point of the driven qubit + oscillator.

    Returns the populated matrix elements in the number-conserving frame's
    {|1,0>, |0,0>, |0,1>} subspace and the qubit polarization; the
    polarization equals the driven-frame <sigma_x>.  Outside the assumed
    regime (g << |Delta_R|, gammas << g) a warning is emitted but values are
    still computed.
    """
    if p.Delta_R == 0:
        raise ZeroDivisionError("closed form undefined at Delta_R = 0")
    if p.g != 0 and (abs(p.Delta_R) < 5 * p.g or max(p.gamma_q, p.gamma_h) > 0.2 * p.g):
        warnings.warn(
            "steady-state closed form used outside its weak-damping dispersive regime",
            RegimeWarning,
            stacklevel=2,
        )
    x = (p.g / p.Delta_R) ** 2
    if p.g == 0:
        return {
            "rho_11": 0.5,
            "rho_22": 0.5,
            "rho_33": 0.0,
            "rho_13": 0.0,
            "sigma_z_expectation": 0.0,
            "gamma_tilde": math.nan,
        }
    gamma_tilde = 16.0 * p.gamma_q * p.gamma_h / (5.0 * p.gamma_q + 4.0 * p.gamma_h)
    return {
        "rho_11": 0.5 - (p.gamma_q + 4.0 * p.gamma_h) / gamma_tilde * x,
        "rho_22": 0.5 + (4.0 * p.gamma_h - p.gamma_q) / gamma_tilde * x,
        "rho_33": 2.0 * p.gamma_q / gamma_tilde * x,
        "rho_13": p.g / (2.0 * p.Delta_R),
        "sigma_z_expectation": -2.0 * (p.gamma_q + 4.0 * p.gamma_h) / gamma_tilde * x,
        "gamma_tilde": gamma_tilde,
    }


# ---------------------------------------------------------------------------
# Two-time correlator by the regression theorem
# ---------------------------------------------------------------------------

def quadrature_operator(layout: SubsystemLayout) -> Operator:
    """x = a + a^dag on the oscillator (last) subsystem."""
    n_levels = layout.dims[-1]
    a = hs.destroy(n_levels)
    x = Operator([n_levels], a.data + a.data.conj().T)
    return hs.embed(x, layout.n_subsystems - 1, layout)


def regression_correlator(
    model: Model,
    rho0: DensityMatrix | None,
    grid: np.ndarray,
    *,
    initial: str = "transient",
    propagator: EigPropagator | None = None,
    method: str = "auto",
    max_step: float | None = None,
) -> np.ndarray:
    """Symmetrized quadrature correlator C(t) = <{x(t), x(0)}>/2.

    The modified matrix {x, rho(0)} is propagated under the same generator
    as the state and C(t) = Tr[x rho~(t)]/2 read out along ``grid``.
    ``initial='steady'`` replaces rho(0) by the model's fixed point (a
    comparison mode; the transient prescription is the default).
    """
    if model.time_dependent:
        raise ValueError("correlator requires a time-independent measurement window")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if initial == "steady":
        rho0 = steady_state(model, check_unique=False)
    elif initial != "transient":
        raise ValueError(f"unknown initial condition mode {initial!r}")
    if rho0 is None:
        raise ValueError("rho0 is required for the transient correlator")
    if rho0.layout.dims != model.layout.dims:
        raise LayoutError("initial state layout differs from model")
    x_mat = quadrature_operator(model.layout).data
    rho_mod = x_mat @ rho0.data + rho0.data @ x_mat

    d = model.layout.total_dim
    if method == "auto":
        method = "expm-eig" if d * d <= EIG_DIM_MAX else "rk4"
    if method == "expm-eig":
        prop = propagator if propagator is not None else eig_propagator(model)
        lam, amp = prop.scalar_modes(rho_mod, x_mat)
        steps = np.diff(grid)
        if np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            c = modes_on_uniform_grid(lam, 0.5 * amp, steps[0], grid.size, t0=grid[0])
        else:
            c = np.array(
                [0.5 * np.sum(amp * np.exp(lam * t)).real for t in grid]
            )
        return c
    if method == "rk4":
        vals = np.empty(grid.size)

        def on_record(i, t, mat):
            vals[i] = 0.5 * float(np.einsum("ij,ji->", x_mat, mat).real)

        rk4_evolve_mats(
            model,
            rho_mod,
            grid[0],
            grid[-1],
            max_step=max_step,
            record_times=grid,
            record_fn=on_record,
        )
        return vals
    raise ValueError(f"unknown method {method!r}")
