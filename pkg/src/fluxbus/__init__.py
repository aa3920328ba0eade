"""fluxbus: fluxonium/bus non-local coupler toolkit.

Coupled-circuit spectra and static ZZ, spectral-notch pulse shaping, the
geometric-phase CZ gate with its error budget, binary-tree connectivity
layouts, and the calibration-analysis pipelines used to characterize the
device.
"""

from .circuit import (BusParams, CapacitanceNetwork, ChargeCouplings,
                      CompositeModel, DispersiveShifts, FluxoniumParams,
                      SpectrumResult, StaticZZReport, bus_charge_zpf,
                      charge_parity_check, composite_hamiltonian,
                      couplings_from_capacitance, dispersive_shifts,
                      dressed_spectrum, fluxonium_spectrum, static_zz,
                      zz_from_model)
from .dynamics import (CZ, CalibrationResult, DriveConfig, ErrorBudget,
                       FidelityReport, GateResult, NoiseModel,
                       OpenSystemResult, average_fidelity_36, calibrate_gate,
                       epsilon_q, error_budget, evolve_unitary, gate_simulate,
                       lindblad_evolve, master_equation_evolve,
                       relaxation_dephasing_error, relaxation_dephasing_factor,
                       semiclassical_gate, semiclassical_phase, state_fidelity,
                       tphi_from_t2)
from .errors import ConvergenceError, FitError, LabelingError, NumericalError
from .fixtures import Fixture, FixtureError, load_fixture
from .pulses import (ISEConfig, PulseEnvelope, SpectralConstraint,
                     alpha_trajectory, ise_iterate, linear_alpha,
                     notch_targets, seed_cosine, seed_flat_top, spectrum)
from .topology import (BeatTree, ConnectivityGraph, DistanceReport,
                       address_of, beat_graph, build_grid, build_tree,
                       distance_stats, graph_to_dot, graph_to_json, lca,
                       position_of, remove_nodes, route, tree_distance)

__version__ = "0.1.0"
