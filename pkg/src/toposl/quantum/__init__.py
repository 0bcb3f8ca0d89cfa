"""Quantum systems whose populations move on a graph."""

from .boson import (
    boson_flows,
    boson_lattice_model,
    boson_velocity_bound,
    exchange_current_bound,
    fock_state,
    simulate_boson,
)
from .core import (
    Jump,
    QuantumFlowSnapshot,
    QuantumModel,
    QuantumRun,
    energy_fluctuation,
    lindblad_rhs,
    random_density,
    random_hermitian,
    random_pure,
    random_unitary,
    run_model,
    steady_state,
    system_entropy_rate,
    validate_density,
)
from .isolated import (
    WalkReport,
    basis_projectors,
    hopping_hamiltonian,
    isolated_projective,
    measured_walk_simulate,
)
from .open_system import (
    drive_flow_chain,
    jump_flow_bound,
    open_system_flows,
    open_system_model,
    random_open_system,
    simulate_open,
)
from .spin import (
    excitation_state,
    piecewise_constant_field,
    simulate_spin,
    spin_chain_model,
    spin_flows,
    spin_velocity_bound,
    transfer_time_bound,
)

__all__ = [
    "Jump", "QuantumFlowSnapshot", "QuantumModel", "QuantumRun", "WalkReport",
    "basis_projectors", "boson_flows", "boson_lattice_model", "boson_velocity_bound",
    "drive_flow_chain", "energy_fluctuation", "exchange_current_bound", "excitation_state",
    "fock_state", "hopping_hamiltonian", "isolated_projective", "jump_flow_bound",
    "lindblad_rhs", "measured_walk_simulate", "open_system_flows", "open_system_model",
    "piecewise_constant_field", "random_density", "random_hermitian", "random_open_system",
    "random_pure", "random_unitary", "run_model", "simulate_boson", "simulate_open",
    "simulate_spin", "spin_chain_model", "spin_flows", "spin_velocity_bound", "steady_state",
    "system_entropy_rate", "transfer_time_bound", "validate_density",
]
