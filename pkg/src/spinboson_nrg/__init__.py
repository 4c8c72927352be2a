"""Ground-state entanglement of an ohmically dissipative two-level system.

The qubit + bath problem is solved through its anisotropic Kondo model
equivalent with Wilson's numerical renormalization group: logarithmic
discretization of the band, iterative diagonalization in conserved
(charge, spin-projection) sectors, and iterative propagation of the local
operators that yield the spin expectation values and the entropy of
entanglement.
"""

__version__ = "0.1.0"

from .chain import WilsonChain, build_chain, energy_scale
from .engine import (
    ConvergenceReport,
    EngineError,
    IterationState,
    NRGConfig,
    Sector,
    SectorBlock,
    add_site,
    init_impurity_site,
    run,
    truncate,
)
from .observables import (
    AlphaMaxResult,
    ConvergenceError,
    OperatorBlocks,
    entanglement_entropy,
    expectation_values,
    find_alpha_max,
    ground_expectation_raw,
    init_operator_blocks,
    propagate,
)
from .oracle import (
    FockBasis,
    build_basis,
    compare_with_nrg,
    exact_ground,
    hellmann_feynman_check,
)
from .params import (
    DomainError,
    KondoParams,
    SpinBosonPoint,
    alpha_from_kondo,
    kondo_to_spinboson,
    map_to_kondo,
    noninteracting_reference,
    renormalized_tunneling,
)
from .sweep import (
    ObservableRecord,
    SweepSpec,
    preset,
    read_json_records,
    run_point,
    run_sweep,
    verify,
    write_output,
    write_output_path,
)

__all__ = [
    "AlphaMaxResult",
    "ConvergenceError",
    "ConvergenceReport",
    "DomainError",
    "EngineError",
    "FockBasis",
    "IterationState",
    "KondoParams",
    "NRGConfig",
    "ObservableRecord",
    "OperatorBlocks",
    "Sector",
    "SectorBlock",
    "SpinBosonPoint",
    "SweepSpec",
    "WilsonChain",
    "add_site",
    "alpha_from_kondo",
    "build_basis",
    "build_chain",
    "compare_with_nrg",
    "energy_scale",
    "entanglement_entropy",
    "exact_ground",
    "expectation_values",
    "find_alpha_max",
    "ground_expectation_raw",
    "hellmann_feynman_check",
    "init_impurity_site",
    "init_operator_blocks",
    "kondo_to_spinboson",
    "map_to_kondo",
    "noninteracting_reference",
    "preset",
    "propagate",
    "read_json_records",
    "renormalized_tunneling",
    "run",
    "run_point",
    "run_sweep",
    "truncate",
    "verify",
    "write_output",
    "write_output_path",
]
