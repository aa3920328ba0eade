"""Time-domain propagation of the driven composite model.

Two integrators share the drive conventions of :mod:`fluxbus.pulses`:

* ``frame="rotating"`` (default): frame rotating at the drive frequency per
  bus-label excitation.  After the rotating-wave approximation the
  Hamiltonian is  diag(E_k - f_d n_k) + Re(env) S + i Im(env) K  with (S, K)
  the symmetric/antisymmetric split of the dressed drive quadrature.  The
  propagator is a Strang splitting: exact diagonal phases around a Taylor
  exponential of the (small-norm) drive step, so the fast bare energies never
  limit the step size.
* ``frame="lab"``: reference integration of the full carrier
  Re[env(t) e^{i 2 pi f_d t}] (a^dag + a) in the dressed frame with an
  adaptive high-order scipy integrator.  Slow; used to validate the rotating
  fast path on small fixtures.

Both preserve the state norm to well below 1e-8 over a 120 ns gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import NumericalError
from ..pulses import PulseEnvelope

TWO_PI = 2.0 * np.pi
NORM_TOL = 1e-8


@dataclass
class DriveConfig:
    """Carrier frequency (GHz) plus the baseband envelope driving the bus."""

    f_drive: float
    envelope: PulseEnvelope
    target: str = "bus"
    gate_time: float = None

    def __post_init__(self):
        if self.gate_time is None:
            self.gate_time = self.envelope.duration
        if abs(self.gate_time - self.envelope.duration) > 1e-9:
            raise ValueError("envelope duration must equal the gate time")
        if self.target != "bus":
            raise ValueError("only bus driving is supported")


@dataclass
class UnitaryTrajectory:
    """Sampled observables along a unitary evolution of one or more states."""

    times: np.ndarray            # ns
    photon: np.ndarray           # (n_times, n_states) <a^dag a>
    alpha: np.ndarray            # (n_times, n_states) <a>
    final_states: np.ndarray     # (dim, n_states)
    norm_drift: float
    frame: str

    def photon_at(self, t):
        return np.array([np.interp(t, self.times, self.photon[:, s])
                         for s in range(self.photon.shape[1])]).T


def _drive_samples(envelope, t0, h, nsteps):
    """Envelope interpolated at step midpoints."""
    tm = t0 + (np.arange(nsteps) + 0.5) * h
    t = envelope.times
    re = np.interp(tm, t, envelope.samples.real, left=0.0, right=0.0)
    im = np.interp(tm, t, envelope.samples.imag, left=0.0, right=0.0)
    return re, im


def _taylor_apply(mat_apply, psi, scale, tol=1e-14, max_terms=60):
    """acc = exp(scale * M) psi via a truncated Taylor series."""
    acc = psi.copy()
    v = psi
    for p in range(1, max_terms):
        v = (scale / p) * mat_apply(v)
        acc += v
        if np.max(np.abs(v)) < tol:
            break
    return acc


def evolve_rotating(model, drive: DriveConfig, psi0, step=0.02, sample_dt=1.0,
                    decay=None, t_span=None, norm_floor=None,
                    store_states=False):
    """Split-step propagation in the drive rotating frame (RWA).

    psi0 may be a vector or a (dim, n_states) block.  With ``decay`` (a real
    PSD matrix G, units 1/ns) the evolution uses the no-jump generator
    -i 2 pi H - G; if ``norm_floor`` is given, integration stops early once
    the squared norm of (single-state) psi drops to it.

    Returns (UnitaryTrajectory, extras) where extras carries per-step squared
    norms and optionally the full state history.
    """
    env = drive.envelope
    t0, t1 = (0.0, env.duration) if t_span is None else t_span
    nsteps = max(1, int(round((t1 - t0) / step)))
    h = (t1 - t0) / nsteps

    psi = np.atleast_2d(np.asarray(psi0, dtype=complex).T).T.copy()
    single = psi.shape[1] == 1 and np.ndim(psi0) == 1

    e_rot = TWO_PI * (model.energies - drive.f_drive * model.bus_label)
    half = np.exp(-0.5j * h * e_rot)[:, None]
    s_op, k_op = model.rwa_drive
    s_c = np.ascontiguousarray(s_op).astype(complex)
    k_c = np.ascontiguousarray(k_op).astype(complex)
    g_c = None if decay is None else np.ascontiguousarray(decay).astype(complex)
    re, im = _drive_samples(env, t0, h, nsteps)

    stride = max(1, int(round(sample_dt / h)))
    times, photon, alpha, norms2 = [], [], [], []
    history = [] if store_states else None
    n_op, a_op = model.number_op, model.lower_op

    def sample(t, v):
        times.append(t)
        photon.append(np.real(np.einsum("is,is->s", np.conj(v), n_op @ v)))
        alpha.append(np.einsum("is,is->s", np.conj(v), a_op @ v))
        if store_states:
            history.append(v.copy())

    sample(t0, psi)
    norms2.append(np.sum(np.abs(psi) ** 2, axis=0))
    stopped_at = None
    for k in range(nsteps):
        psi *= half

        # envelope is already angular (rad/ns): exp(-i h W - h G)
        def apply(v, _r=re[k], _i=im[k]):
            out = _r * (s_c @ v) + (1j * _i) * (k_c @ v)
            if g_c is not None:
                out += -1j * (g_c @ v)      # -i h (-i G) = -h G
            return out

        psi = _taylor_apply(apply, psi, -1j * h)
        psi *= half
        t = t0 + (k + 1) * h
        norms2.append(np.sum(np.abs(psi) ** 2, axis=0))
        if (k + 1) % stride == 0 or k == nsteps - 1:
            sample(t, psi)
        if norm_floor is not None and norms2[-1][0] <= norm_floor:
            stopped_at = t
            break

    norms2 = np.array(norms2)
    if decay is None:
        drift = float(np.max(np.abs(np.sqrt(norms2[-1]) - 1.0)))
        if drift > NORM_TOL:
            raise NumericalError(
                f"norm drift {drift:.2e} exceeds {NORM_TOL:.0e}; "
                "reduce the integration step")
    else:
        drift = 0.0

    traj = UnitaryTrajectory(np.array(times), np.array(photon),
                             np.array(alpha),
                             psi[:, 0] if single else psi,
                             drift, "rotating")
    extras = {"norms2": norms2, "step": h, "stopped_at": stopped_at,
              "history": history}
    return traj, extras


def evolve_lab(model, drive: DriveConfig, psi0, sample_dt=1.0,
               rtol=1e-10, atol=1e-12):
    """Reference lab-frame integration with the explicit carrier.

    Dense adaptive integration of d psi/dt = -i 2 pi [diag(E) + Omega(t) D] psi
    with Omega(t) = Re[env(t) e^{i 2 pi f_d t}].  Cost grows with the largest
    retained bare energy; intended for small fixtures.
    """
    env = drive.envelope
    t_env = env.times
    re_env, im_env = env.samples.real, env.samples.imag
    e_diag = TWO_PI * model.energies
    d_op = model.drive_op
    w_d = TWO_PI * drive.f_drive

    def rhs(t, y):
        psi = y.view(complex)
        # Omega(t) = Re[env e^{i w_d t}], angular rad/ns on the quadrature D
        e_t = np.interp(t, t_env, re_env) * np.cos(w_d * t) \
            - np.interp(t, t_env, im_env) * np.sin(w_d * t)
        dpsi = -1j * (e_diag * psi + e_t * (d_op @ psi))
        return dpsi.view(float)

    psi0 = np.asarray(psi0, dtype=complex)
    t_eval = np.arange(0.0, env.duration + 1e-9, sample_dt)
    if t_eval[-1] < env.duration:
        t_eval = np.append(t_eval, env.duration)
    sol = solve_ivp(rhs, (0.0, env.duration), psi0.view(float), method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol, max_step=0.002)
    if not sol.success:
        raise NumericalError(f"lab-frame integration failed: {sol.message}")
    states = sol.y.T.copy().view(complex)
    drift = float(abs(np.linalg.norm(states[-1]) - 1.0))
    if drift > NORM_TOL:
        raise NumericalError(f"lab-frame norm drift {drift:.2e}")

    n_op, a_op = model.number_op, model.lower_op
    photon = np.real(np.einsum("ti,ij,tj->t", np.conj(states), n_op, states))
    alpha = np.einsum("ti,ij,tj->t", np.conj(states), a_op, states)
    traj = UnitaryTrajectory(sol.t, photon[:, None], alpha[:, None],
                             states[-1], drift, "lab")
    return traj, {"states": states}


def evolve_unitary(model, drive: DriveConfig, psi0, frame="rotating",
                   step=0.02, sample_dt=1.0, store_states=False):
    """Unitary evolution of psi0 under the configured drive.

    frame="rotating" uses the RWA split-step fast path; frame="lab" the
    explicit-carrier reference.  Final states of the two frames agree on
    bus-vacuum components up to the rotating-frame phase convention.
    """
    if frame == "rotating":
        traj, _ = evolve_rotating(model, drive, psi0, step=step,
                                  sample_dt=sample_dt,
                                  store_states=store_states)
        return traj
    if frame == "lab":
        traj, _ = evolve_lab(model, drive, psi0, sample_dt=sample_dt)
        return traj
    raise ValueError(f"unknown frame {frame!r}")
