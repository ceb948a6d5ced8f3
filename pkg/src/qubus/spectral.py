"""Noise power spectral densities and dispersive readout spectra.

The quadrature correlator C(t) from the regression theorem is turned into
S(w) = 2 Re int_0^{t_cut} e^{iwt} C(t) dt by FFT with a rectangular window:
the cutoff models the finite measurement time, so no taper is applied.  The
sample at t = 0 carries half weight (the one-sided transform half-counts the
origin, and the discrete Parseval sum then reproduces C(0) exactly); the
grid is zero-padded 4x purely to refine peak interpolation.  Frequency
resolution is the physical bin 2 pi / t_cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dy
from . import hilbert as hs
from . import models as md
from .errors import NoPeakError
from .hilbert import DensityMatrix
from .models import SystemParams

DEFAULT_PAD_FACTOR = 4
DEFAULT_SAMPLING_OMEGA = 4.0   # correlator content bound for the sampling rule
READOUT_TRUNCATION_CAP = 30    # keeps the Liouvillian eigensolve affordable


@dataclass
class Spectrum:
    """Frequency grid, S_x values, the cutoff used, and peak metadata."""

    omegas: np.ndarray
    values: np.ndarray
    t_cut: float
    peak: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def bin_width(self) -> float:
        """Physical frequency resolution set by the measurement window."""
        return 2.0 * math.pi / self.t_cut

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("omega,S_x\n")
            for w, s in zip(self.omegas, self.values):
                f.write(f"{w:.16e},{s:.16e}\n")


def spectral_density(
    c: np.ndarray,
    t_cut: float,
    *,
    times: np.ndarray | None = None,
    pad_factor: int = DEFAULT_PAD_FACTOR,
    window: tuple[float, float] | None = None,
) -> Spectrum:
    """One-sided cosine transform of a uniformly sampled real correlator.

    ``c`` holds C(j dt) for j = 0..M-1 with dt = t_cut/M.  ``times``, when
    supplied, is validated against that convention.  ``window`` restricts
    the returned grid to [w_lo, w_hi].
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("correlator must be a 1-d series with >= 2 samples")
    m = c.size
    dt = t_cut / m
    if times is not None:
        times = np.asarray(times, dtype=float)
        steps = np.diff(times)
        if times.size != m or abs(times[0]) > 1e-12 * t_cut or not np.allclose(
            steps, dt, rtol=1e-8, atol=1e-12 * t_cut
        ):
            raise ValueError("samples are not uniform on [0, t_cut)")
    weighted = c.copy()
    weighted[0] *= 0.5
    n_fft = pad_factor * m
    spec = 2.0 * dt * np.fft.rfft(weighted, n=n_fft).real
    omegas = 2.0 * math.pi * np.arange(spec.size) / (n_fft * dt)
    if window is not None:
        lo, hi = window
        sel = (omegas >= lo) & (omegas <= hi)
        omegas, spec = omegas[sel], spec[sel]
    return Spectrum(omegas=omegas, values=spec, t_cut=t_cut)


def find_peak(
    spectrum: Spectrum, window: tuple[float, float] | None = None
) -> dict[str, float]:
    """Locate the maximum in a window; quadratic-refined, with FWHM.

    The argmax is refined by a 3-point parabola and the full width at half
    maximum read off by linear interpolation of the half-height crossings
    (NaN when a crossing leaves the window).  A flat window raises
    ``NoPeakError``.
    """
    omegas, values = spectrum.omegas, spectrum.values
    if window is not None:
        sel = (omegas >= window[0]) & (omegas <= window[1])
        if not np.any(sel):
            raise NoPeakError(f"window {window} outside the frequency grid")
        omegas, values = omegas[sel], values[sel]
    if values.size < 1 or np.ptp(values) <= 1e-15 * max(1.0, float(np.max(np.abs(values)))):
        raise NoPeakError("spectrum is flat in the requested window")
    i = int(np.argmax(values))
    omega_peak = float(omegas[i])
    height = float(values[i])
    if 0 < i < values.size - 1:
        y0, y1, y2 = float(values[i - 1]), float(values[i]), float(values[i + 1])
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            delta = 0.5 * (y0 - y2) / denom
            step = float(omegas[i + 1] - omegas[i])
            omega_peak += delta * step
            height = y1 - 0.25 * (y0 - y2) * delta
    half = 0.5 * height
    left = right = math.nan
    for j in range(i, 0, -1):
        if values[j - 1] < half <= values[j]:
            frac = (half - values[j - 1]) / (values[j] - values[j - 1])
            left = float(omegas[j - 1] + frac * (omegas[j] - omegas[j - 1]))
            break
    for j in range(i, values.size - 1):
        if values[j + 1] < half <= values[j]:
            frac = (values[j] - half) / (values[j] - values[j + 1])
            right = float(omegas[j] + frac * (omegas[j + 1] - omegas[j]))
            break
    fwhm = right - left if math.isfinite(left) and math.isfinite(right) else math.nan
    return {"omega_peak": omega_peak, "height": height, "fwhm": fwhm}


# ---------------------------------------------------------------------------
# Readout experiment
# ---------------------------------------------------------------------------

def qubit_logical_ket(label: str, kind: str) -> np.ndarray:
    """Logical |0>/|1> of the chosen model as a 2-vector.

    Dressed logical states are the sigma_x eigenstates of the driven frame;
    bare logical states are the sigma_z eigenstates (|1> excited).
    """
    if label not in ("ground", "excited"):
        raise ValueError("qubit_init must be 'ground' or 'excited'")
    if kind == "dressed":
        sign = 1.0 if label == "excited" else -1.0
        return np.array([1.0, sign], dtype=complex) / math.sqrt(2.0)
    if kind == "bare":
        return np.array([1.0, 0.0] if label == "excited" else [0.0, 1.0], dtype=complex)
    raise ValueError(f"unknown model kind {kind!r}")


def readout_detuning(p: SystemParams, model_kind: str) -> float:
    """Detuning scale governing the readout: Delta_R, or omega_q - omega_h."""
    return p.Delta_R if model_kind == "dressed" else p.omega_q - p.omega_h


def readout_truncation(p: SystemParams, n_levels: int | None = None) -> int:
    if n_levels is not None:
        return n_levels
    return hs.choose_fock_truncation(
        p.n_th_h, tail_target=1e-8, floor=10, cap=READOUT_TRUNCATION_CAP
    )


def readout_experiment(
    p: SystemParams,
    qubit_init: str = "excited",
    model_kind: str = "dressed",
    *,
    n_levels: int | None = None,
    sampling_omega: float = DEFAULT_SAMPLING_OMEGA,
    pad_factor: int = DEFAULT_PAD_FACTOR,
    window_halfwidth: float | None = None,
    t_cut: float | None = None,
    propagator: dy.EigPropagator | None = None,
    correlator_method: str = "auto",
) -> Spectrum:
    """Quadrature noise spectrum of the oscillator coupled to one qubit.

    The oscillator starts in thermal equilibrium with its bath and the qubit
    in the chosen logical state; the regression correlator is sampled on
    [0, t_cut) with t_cut = 40 pi |detuning| / g^2 and transformed.  The
    returned spectrum is restricted to the readout window around omega_h
    (half-width 5 g^2/|detuning| by default) and annotated with the peak and
    the predicted dispersive shift +- g^2/detuning.
    """
    detuning = readout_detuning(p, model_kind)
    if detuning == 0 and t_cut is None:
        raise ZeroDivisionError("readout undefined at zero qubit-oscillator detuning")
    n = readout_truncation(p, n_levels)
    model = md.readout_model(p, n, model_kind)

    q_ket = qubit_logical_ket(qubit_init, model_kind)
    rho_q = np.outer(q_ket, q_ket.conj())
    if p.n_th_h > 0:
        temp = p.omega_h / math.log(1.0 / p.n_th_h + 1.0)
        tail = hs.thermal_tail_mass(p.omega_h, temp, n)
        rho_osc = hs.thermal_state(p.omega_h, temp, n, tail_tol=max(1e-6, 2.0 * tail))
    else:
        rho_osc = hs.thermal_state(p.omega_h, 0.0, n)
    rho0 = DensityMatrix(
        hs.Operator(model.layout, np.kron(rho_q, rho_osc.data))
    )

    if t_cut is None:
        t_cut = md.spectral_cutoff_time(p, detuning)
    dt = 2.0 * math.pi / (16.0 * sampling_omega)
    m_samples = int(math.ceil(t_cut / dt))
    grid = np.arange(m_samples) * (t_cut / m_samples)
    corr = dy.regression_correlator(
        model, rho0, grid, propagator=propagator, method=correlator_method
    )

    shift = p.g ** 2 / detuning if detuning != 0 else 0.0
    halfwidth = (
        window_halfwidth
        if window_halfwidth is not None
        else (5.0 * abs(shift) if shift != 0 else 50.0 * 2.0 * math.pi / t_cut)
    )
    window = (p.omega_h - halfwidth, p.omega_h + halfwidth)
    spec = spectral_density(corr, t_cut, pad_factor=pad_factor, window=window)
    spec.peak = find_peak(spec)
    spec.meta.update(
        {
            "model_kind": model_kind,
            "qubit_init": qubit_init,
            "n_levels": n,
            "n_th_h": p.n_th_h,
            "predicted_shift": shift,
            "predicted_peak": p.omega_h + (shift if qubit_init == "excited" else -shift),
            "detuning": detuning,
            "t_cut": t_cut,
            "samples": m_samples,
        }
    )
    return spec
