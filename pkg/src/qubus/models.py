"""Hamiltonians, jump operators, drive pulses and closed-form quantities.

All frequencies and rates are in units of the oscillator frequency
``omega_h`` (= 1 by convention).  Two frames appear throughout:

* the *driven frame* (rotating with the drive), where the dressed-qubit
  logical states are the sigma_x eigenstates and the coupling is
  ``-g sigma_z (a + a^dag)``;
* the *number-conserving frame*, reached by the per-qubit rotation
  ``dressed_frame_rotation()``, where logical states are sigma_z eigenstates
  and the rotating-wave coupling ``g (sigma_- a^dag + sigma_+ a)`` conserves
  total excitation number.

Every constructor states which frame it builds in.  Metrics and analytic
gate targets live in the number-conserving frame; time propagation runs in
the driven frame.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import hilbert as hs
from .errors import (
    LayoutError,
    RegimeWarning,
    SingularDetuningError,
    UnsupportedConfigurationError,
)
from .hilbert import Operator, SubsystemLayout

_CONSISTENCY_TOL = 1e-12


def bose_einstein(omega: float, temperature: float) -> float:
    """Mean thermal occupation (e^{omega/T} - 1)^{-1}; 0 at T = 0."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0.0:
        return 0.0
    return 1.0 / math.expm1(omega / temperature)


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and frequencies of the qubit(s)-oscillator system.

    Redundant pairs (``Delta``/``omega_d`` and ``Delta_R``/``Omega_R``) may
    be given either way; both are resolved at construction and must agree to
    1e-12 when over-specified.  Bath occupations derive from ``T`` when not
    given explicitly.  ``omega_q`` is bookkeeping for dressed-frame runs (at
    zero drive detuning it drops out of the rotating-frame model); it enters
    the bare-qubit model directly.

    Per-qubit overrides (``*_2`` fields, qubit 1 uses the base values) let
    two-qubit models be asymmetric; analytic gate targets require symmetry.
    """

    omega_h: float = 1.0
    omega_q: float = 50.0
    g: float = 0.0
    gamma_q: float = 0.0
    gamma_h: float = 0.0
    Omega_R: float | None = None
    Delta_R: float | None = None
    omega_d: float | None = None
    Delta: float | None = None
    T: float | None = None
    n_th_q: float | None = None
    n_th_h: float | None = None
    Omega_R_2: float | None = None
    g_2: float | None = None
    Delta_2: float | None = None

    def __post_init__(self):
        s = object.__setattr__
        if self.omega_h <= 0:
            raise ValueError("omega_h must be positive")
        for name in ("gamma_q", "gamma_h"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        # Rabi detuning Delta_R = Omega_R - omega_h.
        if self.Omega_R is None and self.Delta_R is None:
            s(self, "Omega_R", self.omega_h)
            s(self, "Delta_R", 0.0)
        elif self.Omega_R is None:
            s(self, "Omega_R", self.omega_h + self.Delta_R)
        elif self.Delta_R is None:
            s(self, "Delta_R", self.Omega_R - self.omega_h)
        elif abs(self.Delta_R - (self.Omega_R - self.omega_h)) > _CONSISTENCY_TOL:
            raise ValueError("Delta_R and Omega_R - omega_h disagree")
        # Drive detuning Delta = omega_d - omega_q.
        if self.omega_d is None and self.Delta is None:
            s(self, "Delta", 0.0)
            s(self, "omega_d", self.omega_q)
        elif self.omega_d is None:
            s(self, "omega_d", self.omega_q + self.Delta)
        elif self.Delta is None:
            s(self, "Delta", self.omega_d - self.omega_q)
        elif abs(self.Delta - (self.omega_d - self.omega_q)) > _CONSISTENCY_TOL:
            raise ValueError("Delta and omega_d - omega_q disagree")
        # Bath occupations, from T unless pinned.
        if self.n_th_h is None:
            s(self, "n_th_h", bose_einstein(self.omega_h, self.T) if self.T else 0.0)
        if self.n_th_q is None:
            s(self, "n_th_q", bose_einstein(self.omega_q, self.T) if self.T else 0.0)
        if self.n_th_h < 0 or self.n_th_q < 0:
            raise ValueError("bath occupations must be >= 0")

    # -- per-qubit views ---------------------------------------------------
    def amplitudes(self) -> tuple[float, float]:
        return (self.Omega_R, self.Omega_R if self.Omega_R_2 is None else self.Omega_R_2)

    def couplings(self) -> tuple[float, float]:
        return (self.g, self.g if self.g_2 is None else self.g_2)

    def detunings(self) -> tuple[float, float]:
        return (self.Delta, self.Delta if self.Delta_2 is None else self.Delta_2)

    def is_symmetric(self) -> bool:
        amps, gs, dets = self.amplitudes(), self.couplings(), self.detunings()
        return amps[0] == amps[1] and gs[0] == gs[1] and dets[0] == dets[1]

    def rabi_detunings(self) -> tuple[float, float]:
        a1, a2 = self.amplitudes()
        return (a1 - self.omega_h, a2 - self.omega_h)

    def replace(self, **changes) -> "SystemParams":
        """New params with fields replaced; derived pairs are re-resolved."""
        fields = {
            "omega_h": self.omega_h,
            "omega_q": self.omega_q,
            "g": self.g,
            "gamma_q": self.gamma_q,
            "gamma_h": self.gamma_h,
            "T": self.T,
            "n_th_q": self.n_th_q,
            "n_th_h": self.n_th_h,
            "Omega_R_2": self.Omega_R_2,
            "g_2": self.g_2,
            "Delta_2": self.Delta_2,
        }
        # Carry one member of each redundant pair so overrides win cleanly.
        fields["Delta_R"] = self.Delta_R
        fields["Delta"] = self.Delta
        fields.update(changes)
        if "Omega_R" in changes and "Delta_R" not in changes:
            fields.pop("Delta_R", None)
        if "omega_d" in changes and "Delta" not in changes:
            fields.pop("Delta", None)
        return SystemParams(**fields)


# ---------------------------------------------------------------------------
# Derived times and shifts
# ---------------------------------------------------------------------------

def dispersive_shift(p: SystemParams) -> float:
    """Signed oscillator frequency shift g**2/Delta_R per qubit state."""
    if p.Delta_R == 0:
        raise SingularDetuningError("dispersive shift undefined at Delta_R = 0")
    return p.g ** 2 / p.Delta_R


def interaction_time(p: SystemParams) -> float:
    """Half-swap interaction time pi*|Delta_R|/(4 g**2)."""
    if p.g == 0:
        raise SingularDetuningError("interaction time undefined at g = 0")
    return math.pi * abs(p.Delta_R) / (4.0 * p.g ** 2)


def spectral_cutoff_time(p: SystemParams, detuning: float | None = None) -> float:
    """Measurement window 40*pi*|Delta_R|/g**2 used for readout spectra.

    ``detuning`` overrides Delta_R for bare-qubit runs, where the analogous
    scale is omega_q - omega_h.
    """
    if p.g == 0:
        raise SingularDetuningError("cutoff time undefined at g = 0")
    d = p.Delta_R if detuning is None else detuning
    return 40.0 * math.pi * abs(d) / p.g ** 2


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def _qubit_osc_layout(n_qubits: int, n_levels: int) -> SubsystemLayout:
    return SubsystemLayout((2,) * n_qubits + (n_levels,))


def bare_hamiltonian(p: SystemParams, n_levels: int) -> Operator:
    """Undriven qubit exchanging quanta with the oscillator (lab frame).

    (omega_q/2) sigma_z + omega_h a^dag a + g sigma_x (a + a^dag) on the
    qubit (x) oscillator layout.
    """
    lay = _qubit_osc_layout(1, n_levels)
    sz = hs.embed(hs.sigma_z(), 0, lay).data
    sx = hs.embed(hs.sigma_x(), 0, lay).data
    a = hs.embed(hs.destroy(n_levels), 1, lay).data
    x = a + a.conj().T
    h = 0.5 * p.omega_q * sz + p.omega_h * (a.conj().T @ a) + p.g * (sx @ x)
    return Operator(lay, h)


def dressed_hamiltonian(
    p: SystemParams, n_levels: int, Omega_R_now: float | None = None
) -> Operator:
    """Driven qubit in the frame rotating with the drive.

    -(Delta/2) sigma_z + (Omega_R/2) sigma_x + omega_h a^dag a
    - g sigma_z (a + a^dag); time dependence enters only through the
    instantaneous amplitude ``Omega_R_now``.
    """
    amp = p.Omega_R if Omega_R_now is None else Omega_R_now
    lay = _qubit_osc_layout(1, n_levels)
    sz = hs.embed(hs.sigma_z(), 0, lay).data
    sx = hs.embed(hs.sigma_x(), 0, lay).data
    a = hs.embed(hs.destroy(n_levels), 1, lay).data
    x = a + a.conj().T
    h = (
        -0.5 * p.Delta * sz
        + 0.5 * amp * sx
        + p.omega_h * (a.conj().T @ a)
        - p.g * (sz @ x)
    )
    return Operator(lay, h)


def two_qubit_hamiltonian(
    p: SystemParams,
    n_levels: int,
    amplitudes: Sequence[float] | None = None,
) -> Operator:
    """Two driven qubits sharing the oscillator bus (driven frame)."""
    amps = tuple(amplitudes) if amplitudes is not None else p.amplitudes()
    if len(amps) != 2:
        raise ValueError("need one amplitude per qubit")
    lay = _qubit_osc_layout(2, n_levels)
    a = hs.embed(hs.destroy(n_levels), 2, lay).data
    x = a + a.conj().T
    h = p.omega_h * (a.conj().T @ a)
    for j, (amp, g_j, delta_j) in enumerate(zip(amps, p.couplings(), p.detunings())):
        sz = hs.embed(hs.sigma_z(), j, lay).data
        sx = hs.embed(hs.sigma_x(), j, lay).data
        h = h - 0.5 * delta_j * sz + 0.5 * amp * sx - g_j * (sz @ x)
    return Operator(lay, h)


def rwa_hamiltonian(p: SystemParams, n_levels: int, n_qubits: int = 1) -> Operator:
    """Number-conserving frame with the rotating-wave coupling.

    (Omega_R/2) sigma_z + omega_h a^dag a + g (sigma_- a^dag + sigma_+ a),
    summed over qubits; block diagonal in total excitation number.
    """
    lay = _qubit_osc_layout(n_qubits, n_levels)
    a = hs.embed(hs.destroy(n_levels), n_qubits, lay).data
    h = p.omega_h * (a.conj().T @ a)
    for j, (amp, g_j) in enumerate(
        zip(p.amplitudes()[:n_qubits], p.couplings()[:n_qubits])
    ):
        sz = hs.embed(hs.sigma_z(), j, lay).data
        sm = hs.embed(hs.sigma_minus(), j, lay).data
        h = h + 0.5 * amp * sz + g_j * (sm @ a.conj().T + sm.conj().T @ a)
    return Operator(lay, h)


def effective_hamiltonian(p: SystemParams, n_levels: int) -> Operator:
    """Dispersive-frame Hamiltonian with the oscillator-mediated exchange.

    Stark-shifted qubit splittings, a qubit-state-dependent oscillator
    frequency, and the exchange sum_j (g_j g_jbar / 2 Delta_R_j)
    (sigma_+^j sigma_-^jbar + h.c.), in the number-conserving frame on the
    two-qubit layout.  Warns outside the dispersive regime.
    """
    lay = _qubit_osc_layout(2, n_levels)
    gs = p.couplings()
    dets = p.rabi_detunings()
    amps = p.amplitudes()
    for g_j, d_j in zip(gs, dets):
        if g_j != 0 and abs(d_j) < 5 * abs(g_j):
            warnings.warn(
                f"dispersive expansion marginal: |Delta_R|={abs(d_j):.3g} "
                f"vs g={g_j:.3g}",
                RegimeWarning,
                stacklevel=2,
            )
    a = hs.embed(hs.destroy(n_levels), 2, lay).data
    nop = a.conj().T @ a
    h = p.omega_h * nop
    for j in range(2):
        if gs[j] != 0 and dets[j] == 0:
            raise SingularDetuningError("effective model undefined at Delta_R = 0")
        chi = gs[j] ** 2 / dets[j] if gs[j] != 0 else 0.0
        sz = hs.embed(hs.sigma_z(), j, lay).data
        h = h + (0.5 * amps[j] + 0.5 * chi) * sz + chi * (sz @ nop)
    sm1 = hs.embed(hs.sigma_minus(), 0, lay).data
    sm2 = hs.embed(hs.sigma_minus(), 1, lay).data
    sp1, sp2 = sm1.conj().T, sm2.conj().T
    for j, jbar in ((0, 1), (1, 0)):
        if gs[j] == 0 or gs[jbar] == 0:
            continue
        coeff = gs[j] * gs[jbar] / (2.0 * dets[j])
        low, high = (sm1, sp2) if j == 0 else (sm2, sp1)
        h = h + coeff * (high @ low + low.conj().T @ high.conj().T)
    return Operator(lay, h)


def dressed_frame_rotation() -> np.ndarray:
    """Single-qubit rotation from the driven frame to the number-conserving one.

    U maps sigma_x -> sigma_z and sigma_z -> -sigma_x, so the driven-frame
    model at zero drive detuning transforms exactly onto the rotating-wave
    form used by the analytic results: the logical |1> (sigma_x = +1) state
    becomes the first basis vector.
    """
    return np.array([[1, 1], [-1, 1]], dtype=complex) / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Lindblad operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LindbladSet:
    """Jump operators with rates pre-multiplied as sqrt((n_th+1) gamma) etc."""

    operators: tuple[Operator, ...]
    labels: tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.operators)

    def __len__(self):
        return len(self.operators)

    def matrices(self) -> list[np.ndarray]:
        return [op.data for op in self.operators]


def lindblad_set(
    p: SystemParams,
    n_levels: int,
    n_qubits: int = 1,
    dressed: bool = True,
) -> LindbladSet:
    """Damping and thermal-excitation jump operators on the full layout.

    Dressed runs force n_th_q = 0 (the bare transition sits far above the
    bath temperature); zero-rate operators are omitted.
    """
    lay = _qubit_osc_layout(n_qubits, n_levels)
    n_q = 0.0 if dressed else p.n_th_q
    ops: list[Operator] = []
    labels: list[str] = []
    for j in range(n_qubits):
        down = math.sqrt((n_q + 1.0) * p.gamma_q)
        up = math.sqrt(n_q * p.gamma_q)
        if down > 0:
            ops.append(down * hs.embed(hs.sigma_minus(), j, lay))
            labels.append(f"qubit{j + 1}_down")
        if up > 0:
            ops.append(up * hs.embed(hs.sigma_plus(), j, lay))
            labels.append(f"qubit{j + 1}_up")
    down_h = math.sqrt((p.n_th_h + 1.0) * p.gamma_h)
    up_h = math.sqrt(p.n_th_h * p.gamma_h)
    a_op = hs.embed(hs.destroy(n_levels), n_qubits, lay)
    if down_h > 0:
        ops.append(down_h * a_op)
        labels.append("osc_down")
    if up_h > 0:
        ops.append(up_h * a_op.dag())
        labels.append("osc_up")
    return LindbladSet(tuple(ops), tuple(labels))


# ---------------------------------------------------------------------------
# Drive pulse
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pulse:
    """Tanh-edged dressing pulse: plateau Omega_R0, rise time t0, length t_int."""

    Omega_R0: float
    t0: float
    t_int: float

    def __post_init__(self):
        if self.t0 < 0:
            raise ValueError("rise time must be >= 0")
        if self.t_int <= 0:
            raise ValueError("interaction time must be positive")


def pulse_amplitude(pulse: Pulse, t: float | np.ndarray):
    """Dressing amplitude at time t.

    Omega_R0/4 * (1 + tanh(2 t/t0)) * (1 - tanh(2 (t - t_int)/t0)); the
    t0 = 0 limit is the rectangular pulse, implemented as an exact branch
    (full amplitude on [0, t_int], zero outside).
    """
    t = np.asarray(t, dtype=float)
    if pulse.t0 == 0.0:
        out = np.where((t >= 0.0) & (t <= pulse.t_int), pulse.Omega_R0, 0.0)
    else:
        rise = 1.0 + np.tanh(2.0 * t / pulse.t0)
        fall = 1.0 - np.tanh(2.0 * (t - pulse.t_int) / pulse.t0)
        out = 0.25 * pulse.Omega_R0 * rise * fall
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Assembled propagation models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Model:
    """Hamiltonian (optionally H(t) = h0 + drive(t) * h1) plus jump operators."""

    h0: Operator
    lindblads: LindbladSet
    h1: Operator | None = None
    drive: Callable[[float], float] | None = None

    def __post_init__(self):
        if (self.h1 is None) != (self.drive is None):
            raise ValueError("h1 and drive must be given together")
        for op in self.lindblads:
            if op.layout.dims != self.layout.dims:
                raise LayoutError("jump operator layout differs from Hamiltonian")
        if self.h1 is not None and self.h1.layout.dims != self.layout.dims:
            raise LayoutError("drive operator layout differs from Hamiltonian")

    @property
    def layout(self) -> SubsystemLayout:
        return self.h0.layout

    @property
    def time_dependent(self) -> bool:
        return self.h1 is not None

    def hamiltonian(self, t: float = 0.0) -> np.ndarray:
        if self.h1 is None:
            return self.h0.data
        return self.h0.data + self.drive(t) * self.h1.data


def readout_model(p: SystemParams, n_levels: int, kind: str = "dressed") -> Model:
    """Single qubit + oscillator model used by the readout experiments."""
    if kind == "dressed":
        h = dressed_hamiltonian(p, n_levels)
        ls = lindblad_set(p, n_levels, n_qubits=1, dressed=True)
    elif kind == "bare":
        h = bare_hamiltonian(p, n_levels)
        ls = lindblad_set(p, n_levels, n_qubits=1, dressed=False)
    else:
        raise ValueError(f"unknown readout model kind {kind!r}")
    return Model(h, ls)


def gate_model(p: SystemParams, n_levels: int, pulse: Pulse | None = None) -> Model:
    """Two dressed qubits on the bus; optionally with a shared dressing pulse."""
    ls = lindblad_set(p, n_levels, n_qubits=2, dressed=True)
    if pulse is None:
        return Model(two_qubit_hamiltonian(p, n_levels), ls)
    lay = _qubit_osc_layout(2, n_levels)
    static = two_qubit_hamiltonian(p, n_levels, amplitudes=(0.0, 0.0))
    drive_op = 0.5 * (
        hs.embed(hs.sigma_x(), 0, lay) + hs.embed(hs.sigma_x(), 1, lay)
    )
    return Model(static, ls, h1=drive_op, drive=lambda t: pulse_amplitude(pulse, t))
