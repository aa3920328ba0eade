"""Gate error budget composed from the unitary and open-system runs.

The total error is the qubit incoherent error plus the bus-induced error
(one minus the traced open-system fidelity); the bus-induced part is further
split into the coherent residual-photon contribution, the closed-form
photon-loss dephasing, and the remaining photon dephasing.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ErrorBudget:
    """Error contributions as fractions (0.0054 = 0.54 %)."""

    qubit_decoherence: float
    residual_photon_coherent: float
    photon_loss_dephasing: float
    photon_dephasing: float
    bus_induced: float
    total: float

    def rows(self):
        return [
            ("qubit decoherence (epsilon_Q)", self.qubit_decoherence),
            ("bus: residual photons (coherent)", self.residual_photon_coherent),
            ("bus: photon-loss dephasing (closed form)", self.photon_loss_dephasing),
            ("bus: photon dephasing (remainder)", self.photon_dephasing),
            ("bus-induced subtotal", self.bus_induced),
            ("total", self.total),
        ]

    def as_dict(self):
        return {name: value for name, value in self.rows()}


def error_budget(eps_q, f_traced_unitary, f_traced_open,
                 photon_loss_dephasing):
    """Compose the budget; total = eps_Q + (1 - f_traced_open) exactly.

    All fidelities are traced two-qubit averages; the coherent part is the
    unitary deficit and the dephasing remainder is whatever the open-system
    run adds beyond the closed-form photon-loss term.
    """
    coherent = 1.0 - f_traced_unitary
    bus_induced = 1.0 - f_traced_open
    remainder = bus_induced - coherent - photon_loss_dephasing
    return ErrorBudget(
        qubit_decoherence=eps_q,
        residual_photon_coherent=coherent,
        photon_loss_dephasing=photon_loss_dephasing,
        photon_dephasing=remainder,
        bus_induced=bus_induced,
        total=eps_q + bus_induced,
    )
