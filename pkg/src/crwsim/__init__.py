"""crwsim: quantum state transfer in a coupled-resonator waveguide.

Library for simulating a 1D chain of coupled optical resonators with trapped
three-level atoms: exact open-system dynamics (Schrodinger, Lindblad, MCWF)
and the closed-form effective hierarchy (photon-mediated dipole couplings,
collective Lambda system, end-to-end Raman rate, decay budget), plus transfer
experiments and a STIRAP alternative.
"""

__version__ = "0.1.0"

from .operators import (  # noqa: F401
    SpaceDescriptor,
    QOperator,
    QState,
    DimensionMismatchError,
    basis_state,
    embed,
    expectation,
    identity,
    partial_trace,
    tensor,
)
from .chain import (  # noqa: F401
    ChainParams,
    LindbladSet,
    build_hamiltonian,
    build_hamiltonian_parts,
    build_lindblad,
    excitation_number,
    initial_transfer_state,
    validity_flags,
)
from .effective import (  # noqa: F401
    EffectiveModel,
    RegimeError,
    collective_energies,
    collective_energies_cosine_sum,
    collective_rabi,
    decay_rates,
    dipole_couplings,
    effective_evolution,
    effective_model,
    fidelity_estimate,
    mode_detunings,
    raman_rate,
    recovery_gate,
    stark_shifts,
    vd_eigs_oracle,
)
from .dynamics import (  # noqa: F401
    IntegrationError,
    TimeGrid,
    TrajectoryResult,
    evolve_lindblad,
    evolve_mcwf,
    evolve_schrodinger,
    evolve_schrodinger_td,
    standard_observables,
)
from .stirap import (  # noqa: F401
    PulseSchedule,
    collective_hamiltonian,
    dark_state,
    run_stirap,
    select_intermediate_mode,
)
from .config import (  # noqa: F401
    ConfigError,
    ExperimentConfig,
    PRESETS,
    load_config,
    load_config_data,
)
from .experiments import (  # noqa: F401
    ExperimentError,
    FidelityReport,
    model_frame_phase,
    reduce_to_end_qubit,
    run_compare,
    run_experiment,
    run_fidelity_scan,
    run_stirap_experiment,
    run_transfer,
    transfer_fidelity,
)
