"""State fidelities and the 36-initial-state gate fidelity average.

The state fidelity is the square-root form F = tr sqrt(rho^1/2 sigma rho^1/2);
for pure states it reduces to the amplitude overlap |<phi|psi>|.  Gate
fidelities average F over the 36 two-qubit products of the six single-qubit
states {|0>, |1>, (|0> +/- |1>)/sqrt2, (|0> +/- i|1>)/sqrt2}, both on the full
three-body state and after tracing out the bus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .gate import COMPUTATIONAL, GateResult

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
SIX_STATES = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([_INV_SQRT2, _INV_SQRT2], dtype=complex),
    np.array([_INV_SQRT2, -_INV_SQRT2], dtype=complex),
    np.array([_INV_SQRT2, 1j * _INV_SQRT2], dtype=complex),
    np.array([_INV_SQRT2, -1j * _INV_SQRT2], dtype=complex),
)

CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def state_fidelity(sigma, rho, tol=1e-8):
    """F(sigma, rho) = tr sqrt(rho^1/2 sigma rho^1/2).

    Accepts density matrices (validated PSD with unit trace) or state
    vectors, which are promoted to pure density matrices.
    """
    sigma = _as_density(sigma, tol)
    rho = _as_density(rho, tol)
    w, v = np.linalg.eigh(rho)
    if w.min() < -tol:
        raise ValueError(f"rho has negative eigenvalue {w.min():.2e}")
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_rho @ sigma @ sqrt_rho
    ev = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))))


def _as_density(state, tol):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    tr = np.trace(state).real
    if abs(tr - 1.0) > max(tol, 1e-6):
        raise ValueError(f"density matrix trace {tr:.8f} is not 1")
    return state


@dataclass
class FidelityReport:
    """Averaged gate fidelities over the 36 product initial states."""

    f_three_body: float
    f_traced: float
    per_state_three_body: np.ndarray
    per_state_traced: np.ndarray
    virtual_z: bool
    z_angles: tuple

    def summary(self):
        return {"f_three_body": self.f_three_body, "f_traced": self.f_traced,
                "virtual_z": self.virtual_z,
                "z_angles_rad": list(self.z_angles)}


def _product_amplitudes():
    """The 36 initial two-qubit amplitude vectors, ordered (gg, eg, ge, ee)."""
    combos = []
    for sa in SIX_STATES:
        for sb in SIX_STATES:
            c = np.array([sa[0] * sb[0], sa[1] * sb[0],
                          sa[0] * sb[1], sa[1] * sb[1]])
            combos.append(c)
    return np.array(combos)                    # (36, 4)


def _z_phases(theta_a, theta_b):
    """Virtual-Z phase per computational label, ordered (gg, eg, ge, ee)."""
    return np.exp(1j * np.array([0.0, theta_a, theta_b, theta_a + theta_b]))


def average_fidelity_36(result, model=None, virtual_z=True, ideal=CZ):
    """36-state average fidelities of a simulated gate against an ideal CZ.

    ``result`` is either a :class:`GateResult` (full-space evaluation: both
    the three-body fidelity and the bus-traced fidelity are computed) or a
    plain 4x4 computational-subspace operator (both numbers coincide).

    With ``virtual_z`` the single-qubit Z angles are chosen to maximize the
    average three-body fidelity before comparison; angles are seeded from the
    single-qubit phases and polished with a simplex search.
    """
    combos = _product_amplitudes()
    if isinstance(result, GateResult):
        if model is None:
            raise ValueError("model is required to evaluate a GateResult")
        return _fidelity_full(result, model, combos, virtual_z, ideal)
    u = np.asarray(result, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError("expected a GateResult or a 4x4 operator")
    return _fidelity_u4(u, combos, virtual_z, ideal)


def _avg_f_u4(u, combos, phases, ideal):
    f = np.empty(len(combos))
    for k, c in enumerate(combos):
        out = phases * (u @ c)
        target = ideal @ c
        f[k] = abs(np.vdot(target, out))
    return f


def _seed_angles(u):
    d = np.angle(np.diagonal(u))
    return (-(d[1] - d[0]), -(d[2] - d[0]))


def _optimize_z(avg_fun, seed):
    best = minimize(lambda z: -avg_fun(z[0], z[1]), x0=np.array(seed),
                    method="Nelder-Mead",
                    options={"xatol": 1e-6, "fatol": 1e-10})
    z = best.x
    if avg_fun(0.0, 0.0) > avg_fun(*z):
        z = np.zeros(2)
    return tuple(z)


def _fidelity_u4(u, combos, virtual_z, ideal):
    def avg(theta_a, theta_b):
        return float(np.mean(_avg_f_u4(u, combos, _z_phases(theta_a, theta_b),
                                       ideal)))

    angles = (0.0, 0.0)
    if virtual_z:
        angles = _optimize_z(avg, _seed_angles(u))
    per = _avg_f_u4(u, combos, _z_phases(*angles), ideal)
    return FidelityReport(float(np.mean(per)), float(np.mean(per)), per, per,
                          virtual_z, angles)


def _fidelity_full(result: GateResult, model, combos, virtual_z, ideal):
    finals = result.final_states                       # (dim, 4), static-free
    idx = [model.label_index((i, j, 0)) for (i, j) in COMPUTATIONAL]
    dim = finals.shape[0]

    # dressed-state phase rotation implementing the virtual Z on both qubits
    fa = np.minimum(model.flux_label[:, 0], 1)
    fb = np.minimum(model.flux_label[:, 1], 1)

    # bare-basis tensors for the bus partial trace
    n_a, n_b, n_bus = model.levels
    bare = np.zeros((n_a * n_b, n_bus, 4), dtype=complex)
    for col in range(4):
        bare[:, :, col] = model.bare_amplitudes(
            finals[:, col]).reshape(n_a * n_b, n_bus)
    ideal_qubit = np.zeros((n_a * n_b, 4), dtype=complex)
    for col, (i, j) in enumerate(COMPUTATIONAL):
        vec = np.zeros(dim, dtype=complex)
        vec[idx[col]] = 1.0
        ideal_qubit[:, col] = model.bare_amplitudes(vec).reshape(
            n_a * n_b, n_bus)[:, 0]

    def avg_three_body(theta_a, theta_b):
        rot = np.exp(1j * (theta_a * fa + theta_b * fb))
        sim = rot[:, None] * finals
        overlaps = np.empty(len(combos))
        for k, c in enumerate(combos):
            out = sim @ c
            target = np.zeros(dim, dtype=complex)
            target[idx] = ideal @ c
            overlaps[k] = abs(np.vdot(target, out))
        return overlaps

    angles = (0.0, 0.0)
    if virtual_z:
        seed = _seed_angles(result.u_eff)
        angles = _optimize_z(
            lambda a, b: float(np.mean(avg_three_body(a, b))), seed)

    per_three = avg_three_body(*angles)

    # traced fidelity: rho_q = Tr_bus |psi><psi| in the bare qubit space
    rot = np.exp(1j * (angles[0] * fa + angles[1] * fb))
    per_traced = np.empty(len(combos))
    for k, c in enumerate(combos):
        g = np.tensordot(bare, c, axes=([2], [0]))     # (n_a n_b, n_bus)
        # apply virtual Z in the bare qubit space
        g = _rotate_bare(g, angles, n_a, n_b)
        rho_q = g @ g.conj().T
        # the ideal traced state is pure to O(1e-6); normalize its vector
        target = ideal_qubit @ (ideal @ c)
        target = target / np.linalg.norm(target)
        per_traced[k] = math.sqrt(
            max(0.0, float(np.real(target.conj() @ rho_q @ target))))

    return FidelityReport(float(np.mean(per_three)),
                          float(np.mean(per_traced)),
                          per_three, per_traced, virtual_z, angles)


def _rotate_bare(g, angles, n_a, n_b):
    ka = np.minimum(np.arange(n_a), 1)
    kb = np.minimum(np.arange(n_b), 1)
    phase = np.exp(1j * (angles[0] * ka[:, None] + angles[1] * kb[None, :]))
    return (phase.reshape(-1)[:, None]) * g
