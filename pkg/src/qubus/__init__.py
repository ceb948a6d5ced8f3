"""Driven qubits on a damped oscillator bus: spectra, entanglement, gates."""

from .hilbert import (
    DensityMatrix,
    Operator,
    SubsystemLayout,
    kron,
    embed,
    partial_trace,
    partial_transpose,
    thermal_state,
    trace_norm,
)
from .models import (
    LindbladSet,
    Model,
    Pulse,
    SystemParams,
    bare_hamiltonian,
    bose_einstein,
    dispersive_shift,
    dressed_hamiltonian,
    effective_hamiltonian,
    interaction_time,
    lindblad_set,
    pulse_amplitude,
    rwa_hamiltonian,
    spectral_cutoff_time,
    two_qubit_hamiltonian,
)
from .dynamics import (
    Liouvillian,
    Trajectory,
    evolve,
    liouvillian,
    regression_correlator,
    steady_state,
    steady_state_closed_form,
)
from .spectral import Spectrum, find_peak, readout_experiment, spectral_density
from .metrics import (
    FidelityEnsemble,
    GateTarget,
    analytic_evolution,
    bell_circuit,
    entanglement_experiment,
    gate_fidelity,
    log_negativity,
    sqrt_iswap_target,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "Operator",
    "SubsystemLayout",
    "kron",
    "embed",
    "partial_trace",
    "partial_transpose",
    "thermal_state",
    "trace_norm",
    "LindbladSet",
    "Model",
    "Pulse",
    "SystemParams",
    "bare_hamiltonian",
    "bose_einstein",
    "dispersive_shift",
    "dressed_hamiltonian",
    "effective_hamiltonian",
    "interaction_time",
    "lindblad_set",
    "pulse_amplitude",
    "rwa_hamiltonian",
    "spectral_cutoff_time",
    "two_qubit_hamiltonian",
    "Liouvillian",
    "Trajectory",
    "evolve",
    "liouvillian",
    "regression_correlator",
    "steady_state",
    "steady_state_closed_form",
    "Spectrum",
    "find_peak",
    "readout_experiment",
    "spectral_density",
    "FidelityEnsemble",
    "GateTarget",
    "analytic_evolution",
    "bell_circuit",
    "entanglement_experiment",
    "gate_fidelity",
    "log_negativity",
    "sqrt_iswap_target",
    "__version__",
]
