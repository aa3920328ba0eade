"""Open-system dynamics: bus collapse channels and qubit incoherent error.

The bus is damped by L1 = sqrt(Gamma_1) a and dephased by
L2 = sqrt(2 Gamma_phi) a^dag a with Gamma_1 = 1/T1 and
Gamma_phi = 1/T2 - 1/(2 T1).  Qubit decoherence enters the error budget
through the closed-form epsilon_Q, not through collapse operators.

The trajectory solver is a Monte Carlo wavefunction unraveling with a
memoized no-jump branch: since the no-jump generator is linear, the no-jump
evolution of any computational superposition is a linear combination of four
cached basis evolutions, so only trajectories that actually jump cost a new
propagation.  The sampled distribution is the standard MCWF one (jump times
resolved to the integration step) and is reproducible bit-for-bit for a
fixed seed, trajectory count, and trajectory order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import NumericalError
from .evolution import TWO_PI, DriveConfig, evolve_rotating
from .fidelity import CZ, FidelityReport, _optimize_z, _product_amplitudes, _seed_angles
from .gate import COMPUTATIONAL, GateResult


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence rates: bus in 1/us, qubit times in us."""

    bus_gamma1: float            # 1/T1 of the bus photon
    bus_gamma_phi: float         # 1/T2 - 1/(2 T1)
    t1_a: float = math.inf
    tphi_a: float = math.inf
    t1_b: float = math.inf
    tphi_b: float = math.inf

    def __post_init__(self):
        if self.bus_gamma1 < 0 or self.bus_gamma_phi < 0:
            raise ValueError("bus rates must be nonnegative (T2 <= 2 T1)")

    @classmethod
    def from_times(cls, bus_t1_us, bus_t2_us, t1_a=math.inf, tphi_a=math.inf,
                   t1_b=math.inf, tphi_b=math.inf):
        gamma1 = 1.0 / bus_t1_us
        gamma_phi = 1.0 / bus_t2_us - 0.5 * gamma1
        if gamma_phi < -1e-12:
            raise ValueError(f"bus T2 = {bus_t2_us} exceeds 2 T1 = {2 * bus_t1_us}")
        return cls(gamma1, max(gamma_phi, 0.0), t1_a, tphi_a, t1_b, tphi_b)


def tphi_from_t2(t2_us, t1_us):
    """Pure-dephasing time from 1/T_phi = 1/T2 - 1/(2 T1)."""
    rate = 1.0 / t2_us - 0.5 / t1_us
    if rate <= 0:
        return math.inf
    return 1.0 / rate


def epsilon_q(t_gate_ns, t1_a_us, tphi_a_us, t1_b_us, tphi_b_us):
    """Qubit incoherent gate error (2 t_g / 5) sum of the four rates."""
    for v in (t1_a_us, tphi_a_us, t1_b_us, tphi_b_us):
        if v <= 0:
            raise ValueError("coherence times must be positive")
    t_gate_us = t_gate_ns * 1e-3
    rates = 1.0 / t1_a_us + 1.0 / tphi_a_us + 1.0 / t1_b_us + 1.0 / tphi_b_us
    return 0.4 * t_gate_us * rates


# ---------------------------------------------------------------------------
# closed-form relaxation-induced dephasing
# ---------------------------------------------------------------------------

def relaxation_dephasing_factor(alpha_trajs, dt_ns, gamma1_per_us):
    """Off-diagonal damping factors from photon loss, per state pair.

    alpha_trajs is an (n_times, 4) array of bus coherent amplitudes for the
    computational states.  Returns a complex 4x4 matrix of factors
    exp[Gamma_1 integral (alpha_i alpha_j* - |alpha_i|^2/2 - |alpha_j|^2/2) dt];
    diagonal entries are exactly 1 and the real part of every exponent is
    <= 0 (damping only).
    """
    gamma1 = gamma1_per_us * 1e-3                      # 1/ns
    a = np.asarray(alpha_trajs)
    cross = np.trapezoid(np.einsum("ti,tj->tij", a, a.conj()), dx=dt_ns, axis=0)
    n_int = np.real(np.diagonal(cross))
    exponent = gamma1 * (cross - 0.5 * n_int[:, None] - 0.5 * n_int[None, :])
    return np.exp(exponent)


def relaxation_dephasing_error(gate_result: GateResult, gamma1_per_us,
                               virtual_z=True):
    """Average fidelity deficit from the closed-form photon-loss dephasing.

    Applies the damping factors to the computational-subspace density matrix
    of each of the 36 initial states from the unitary run and reports the
    drop of the average fidelity versus the undamped unitary values.
    """
    dt = gate_result.times[1] - gate_result.times[0]
    factors = relaxation_dephasing_factor(gate_result.alpha_traj, dt,
                                          gamma1_per_us)
    u = gate_result.u_eff
    combos = _product_amplitudes()

    def avg(theta_a, theta_b, damp):
        phases = np.exp(1j * np.array([0.0, theta_a, theta_b,
                                       theta_a + theta_b]))
        total = 0.0
        for c in combos:
            out = phases * (u @ c)
            rho = np.outer(out, out.conj())
            if damp:
                rho = rho * factors
            target = CZ @ c
            total += math.sqrt(max(0.0, float(
                np.real(target.conj() @ rho @ target))))
        return total / len(combos)

    angles = (0.0, 0.0)
    if virtual_z:
        angles = _optimize_z(lambda a, b: avg(a, b, damp=False),
                             _seed_angles(u))
    f_unitary = avg(*angles, damp=False)
    f_damped = avg(*angles, damp=True)
    return f_unitary - f_damped, factors


# ---------------------------------------------------------------------------
# Monte Carlo wavefunction trajectories
# ---------------------------------------------------------------------------

@dataclass
class OpenSystemResult:
    """Trajectory-averaged open-system gate outcome."""

    fidelity: FidelityReport
    n_traj: int
    seed: int
    jump_counts: dict            # channel -> total jumps over all trajectories
    jump_fraction: float         # trajectories with at least one jump
    rho_traced: np.ndarray       # (36, 4, 4) computational-block density matrices
    method: str


def _decay_matrix(model, noise: NoiseModel):
    """G = (Gamma_1 A^dag A + 2 Gamma_phi N^2) / 2 in 1/ns, dressed basis."""
    g1 = noise.bus_gamma1 * 1e-3
    gphi = noise.bus_gamma_phi * 1e-3
    a = model.lower_op
    n = model.number_op
    return 0.5 * (g1 * (a.T @ a) + 2.0 * gphi * (n @ n))


def _no_jump_run(model, drive, psi0, noise, step, t0=0.0):
    """Propagate the no-jump generator, storing states at every step."""
    decay = _decay_matrix(model, noise)
    traj, extras = evolve_rotating(model, drive, psi0, step=step,
                                   sample_dt=step, decay=decay,
                                   t_span=(t0, drive.envelope.duration),
                                   store_states=True)
    states = np.array(extras["history"])               # (n_times, dim, ns)
    times = traj.times
    return times, states


def lindblad_evolve(model, drive: DriveConfig, noise: NoiseModel,
                    method="trajectories", n_traj=200, seed=1234, step=0.05,
                    virtual_z=True, initial_states=None):
    """Open-system evolution of the gate under bus relaxation and dephasing.

    method="trajectories" (the production path) unravels the Lindblad
    equation into Monte Carlo wavefunctions over the 36 computational product
    states and returns the averaged traced fidelity report.
    method="master" integrates the dense master equation and is intended for
    small toy models (see :func:`master_equation_evolve`).
    """
    if method == "master":
        raise ValueError("use master_equation_evolve for dense toy runs")
    if method != "trajectories":
        raise ValueError(f"unknown method {method!r}")

    rng = np.random.default_rng(seed)
    dim = model.trunc_dim
    idx = [model.label_index((i, j, 0)) for (i, j) in COMPUTATIONAL]
    basis0 = np.zeros((dim, 4), dtype=complex)
    for col, k in enumerate(idx):
        basis0[k, col] = 1.0

    times, basis_states = _no_jump_run(model, drive, basis0, noise, step)
    n_steps = len(times)
    # cross Grams G_ij(t) for superposition no-jump norms
    grams = np.einsum("tis,tir->tsr", basis_states.conj(), basis_states)

    a_op = model.lower_op.astype(complex)
    n_op = model.number_op.astype(complex)
    g1 = noise.bus_gamma1 * 1e-3
    gphi = noise.bus_gamma_phi * 1e-3
    t_end = drive.envelope.duration

    combos = _product_amplitudes() if initial_states is None \
        else np.asarray(initial_states, dtype=complex)
    n_init = len(combos)

    decay = _decay_matrix(model, noise)

    def _apply_jump(psi):
        w1 = g1 * float(np.linalg.norm(a_op @ psi) ** 2)
        w2 = 2.0 * gphi * float(np.linalg.norm(n_op @ psi) ** 2)
        if rng.random() * (w1 + w2) < w1:
            psi = a_op @ psi
            jump_counts["photon_loss"] += 1
        else:
            psi = n_op @ psi
            jump_counts["dephasing"] += 1
        return psi / np.linalg.norm(psi)

    def finish_from(psi, t_start, depth=0):
        """Evolve a normalized state from t_start to T with jump sampling."""
        if depth > 6:
            raise NumericalError("jump recursion depth exceeded")
        r = rng.random()
        traj, extras = evolve_rotating(
            model, drive, psi, step=step, sample_dt=t_end, decay=decay,
            t_span=(t_start, t_end), norm_floor=r)
        if extras["stopped_at"] is None:
            out = traj.final_states
            return out / np.linalg.norm(out)
        # final_states holds the pre-jump state at the stop time
        state = _apply_jump(traj.final_states)
        return finish_from(state, extras["stopped_at"], depth + 1)

    n_a, n_b, _ = model.levels
    jump_counts = {"photon_loss": 0, "dephasing": 0}
    rho_traced = np.zeros((n_init, 4, 4), dtype=complex)
    traj_with_jumps = 0

    for k, c in enumerate(combos):
        norm2 = np.real(np.einsum("s,tsr,r->t", c.conj(), grams, c))
        final_nj = basis_states[-1] @ c
        final_nj_traced = _trace_comp(model, final_nj / np.linalg.norm(final_nj),
                                      idx)
        r_values = rng.random(n_traj)
        for r in r_values:
            if r < norm2[-1]:
                rho_traced[k] += final_nj_traced
                continue
            traj_with_jumps += 1
            j = int(np.searchsorted(-norm2, -r))       # first index norm2 <= r
            j = min(max(j, 1), n_steps - 1)
            psi = _apply_jump(basis_states[j] @ c)
            final = finish_from(psi, times[j])
            rho_traced[k] += _trace_comp(model, final, idx)
        rho_traced[k] /= n_traj

    fid = _traced_fidelity_36(rho_traced, combos, virtual_z)
    return OpenSystemResult(fidelity=fid, n_traj=n_traj, seed=seed,
                            jump_counts=jump_counts,
                            jump_fraction=traj_with_jumps / (n_traj * n_init),
                            rho_traced=rho_traced, method="trajectories")


def _trace_comp(model, psi, idx):
    """Computational 4x4 block of Tr_bus |psi><psi| (bare-basis trace).

    The computational block is evaluated against the dressed computational
    states restricted to their bus-vacuum bare sector, which captures the
    populations and coherences relevant to the gate fidelity.
    """
    n_a, n_b, n_bus = model.levels
    g = model.bare_amplitudes(psi).reshape(n_a * n_b, n_bus)
    basis = _comp_bare_basis(model, idx)
    # <comp_i | rho_q | comp_j> = (B g)(B g)^dag with B the basis projection
    proj = basis.conj() @ g                            # (4, n_bus)
    return proj @ proj.conj().T


_COMP_BASIS_CACHE = {}


def _comp_bare_basis(model, idx):
    key = id(model)
    cached = _COMP_BASIS_CACHE.get(key)
    if cached is None:
        n_a, n_b, n_bus = model.levels
        dim = model.trunc_dim
        rows = []
        for k in idx:
            vec = np.zeros(dim, dtype=complex)
            vec[k] = 1.0
            bare = model.bare_amplitudes(vec).reshape(n_a * n_b, n_bus)[:, 0]
            rows.append(bare / np.linalg.norm(bare))
        cached = np.array(rows)
        _COMP_BASIS_CACHE[key] = cached
    return cached


def _traced_fidelity_36(rho_traced, combos, virtual_z):
    def avg(theta_a, theta_b):
        phases = np.exp(1j * np.array([0.0, theta_a, theta_b,
                                       theta_a + theta_b]))
        rot = np.diag(phases)
        vals = np.empty(len(combos))
        for k, c in enumerate(combos):
            target = CZ @ c
            rho = rot @ rho_traced[k] @ rot.conj().T
            vals[k] = math.sqrt(max(0.0, float(
                np.real(target.conj() @ rho @ target))))
        return vals

    angles = (0.0, 0.0)
    if virtual_z:
        angles = _optimize_z(lambda a, b: float(np.mean(avg(a, b))),
                             (0.0, 0.0))
    per = avg(*angles)
    return FidelityReport(float("nan"), float(np.mean(per)),
                          np.full(len(combos), np.nan), per, virtual_z,
                          angles)


# ---------------------------------------------------------------------------
# dense master equation (toy oracle)
# ---------------------------------------------------------------------------

def master_equation_evolve(h_static, drive_fun, collapse_ops, rho0, t_end,
                           rtol=1e-9, atol=1e-11, t_eval=None):
    """Dense Lindblad integration for small systems.

    d rho/dt = -i 2 pi [H(t), rho] + sum_k (L rho L^dag - {L^dag L, rho}/2)
    with H(t) = h_static + drive_fun(t) in GHz and collapse operators in
    sqrt(1/ns) units.  Returns (times, rhos); trace is preserved to 1e-6.
    """
    dim = rho0.shape[0]
    ls = [np.asarray(op, dtype=complex) for op in collapse_ops]
    ldl = [op.conj().T @ op for op in ls]

    def rhs(t, y):
        rho = y.view(complex).reshape(dim, dim)
        h = h_static + drive_fun(t)
        out = -1j * TWO_PI * (h @ rho - rho @ h)
        for op, dd in zip(ls, ldl):
            out += op @ rho @ op.conj().T - 0.5 * (dd @ rho + rho @ dd)
        return out.ravel().view(float)

    sol = solve_ivp(rhs, (0.0, t_end), rho0.astype(complex).ravel().view(float),
                    method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if not sol.success:
        raise NumericalError(f"master equation failed: {sol.message}")
    rhos = sol.y.T.copy().view(complex).reshape(-1, dim, dim)
    drift = abs(np.trace(rhos[-1]).real - np.trace(rho0).real)
    if drift > 1e-6:
        raise NumericalError(f"master-equation trace drift {drift:.2e}")
    return sol.t, rhos
