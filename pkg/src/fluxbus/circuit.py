"""Circuit-level models: fluxonium, bus resonator, and the coupled system.

Conventions
-----------
* All Hamiltonians are stored in units of GHz (h = 1); conversions to Hz/MHz
  happen only at reporting boundaries.
* The fluxonium Hamiltonian is
      H = 4 E_C n^2 - E_J cos(phi) + E_L (phi - phi_ext)^2 / 2,
  diagonalized in the harmonic basis of the (E_C, E_L) oscillator centered at
  the external-flux minimum.  At phi_ext = pi (half flux quantum) the
  potential is symmetric and eigenstates have definite parity.
* In that basis the charge operator is n = i * M with M real antisymmetric,
  so every coupling product n_i n_j contributes a factor i^2 = -1 and the
  composite Hamiltonian is real symmetric for both supported coupling forms.
* Composite truncation: bare product states are ordered by bare energy and
  the lowest ``trunc_dim`` are kept; the Hamiltonian is diagonalized in that
  subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh

from .errors import ConvergenceError, LabelingError

# 4 e^2 / (h * 1 fF) in GHz: couplings from capacitance ratios expressed in fF
_FOUR_E_SQ_OVER_H_FF = 4.0 * (1.602176634e-19) ** 2 / (6.62607015e-34 * 1e-15) / 1e9

CONVERGENCE_TOL_GHZ = 1e-6  # 1 kHz


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxoniumParams:
    """Fluxonium circuit energies in GHz and external flux phase in radians."""

    e_j: float
    e_c: float
    e_l: float
    phi_ext: float = math.pi

    def __post_init__(self):
        if self.e_j <= 0 or self.e_c <= 0 or self.e_l <= 0:
            raise ValueError("fluxonium energies must be positive")
        if not math.isfinite(self.phi_ext):
            raise ValueError("phi_ext must be finite")


@dataclass(frozen=True)
class BusParams:
    """Bare bus resonator: frequency in GHz and retained Fock levels."""

    f_b: float
    dim: int = 30

    def __post_init__(self):
        if self.f_b <= 0:
            raise ValueError("bus frequency must be positive")
        if self.dim < 2:
            raise ValueError("bus needs at least two Fock levels")


@dataclass(frozen=True)
class ChargeCouplings:
    """Coupling strengths in GHz and the active coupling form.

    form='charge-charge' uses  J_c n_A n_b + J_c n_B n_b + J_AB n_A n_B with
    n_b = i * zpf * (a^dag - a); the zero-point factor defaults to 1 (absorbed
    into J) and can be supplied physically via :func:`bus_charge_zpf`.
    form='charge-quadrature' uses  i J_1 n_A (a^dag - a) + i J_2 n_B (a^dag - a).
    """

    j_c: float = 0.0
    j_ab: float = 0.0
    j1: float = 0.0
    j2: float = 0.0
    form: str = "charge-quadrature"

    def __post_init__(self):
        if self.form not in ("charge-charge", "charge-quadrature"):
            raise ValueError(f"unknown coupling form {self.form!r}")
        for v in (self.j_c, self.j_ab, self.j1, self.j2):
            if not math.isfinite(v):
                raise ValueError("coupling magnitudes must be finite")


@dataclass(frozen=True)
class CapacitanceNetwork:
    """Coupling, fluxonium, and bus capacitances in fF."""

    c_c: float
    c_f: float
    c_b: float

    def __post_init__(self):
        import warnings

        if min(self.c_c, self.c_f, self.c_b) <= 0:
            raise ValueError("capacitances must be positive")
        if self.c_f / self.c_c < 10 or self.c_b / self.c_c < 10:
            warnings.warn(
                "leading-order coupling formulas assume C_b, C_f >> C_c "
                f"(ratios {self.c_f / self.c_c:.1f}, {self.c_b / self.c_c:.1f})",
                stacklevel=2,
            )


# ---------------------------------------------------------------------------
# single-mode building blocks
# ---------------------------------------------------------------------------

def _annihilation(dim):
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1)


@dataclass
class FluxoniumSpectrum:
    """Energies relative to the ground state and charge matrix elements.

    ``charge_imag`` is the real antisymmetric M with <i|n|j> = i M_ij; the
    physical complex matrix is available as ``charge_matrix``.
    """

    energies: np.ndarray
    charge_imag: np.ndarray
    basis_dim: int

    @property
    def charge_matrix(self):
        return 1j * self.charge_imag

    def transition(self, i, j):
        """f_ij = E_j - E_i in GHz."""
        return self.energies[j] - self.energies[i]


def _fluxonium_diagonalize(params: FluxoniumParams, basis_dim: int):
    """Diagonalize in the harmonic basis; returns (energies, M, eigvecs, ops)."""
    a = _annihilation(basis_dim)
    x_zpf = (2.0 * params.e_c / params.e_l) ** 0.25
    n_zpf = (params.e_l / (32.0 * params.e_c)) ** 0.25
    x = x_zpf * (a + a.T)            # phi - phi_ext
    m_ho = n_zpf * (a.T - a)         # n = i * m_ho
    xv, xw = eigh(x)
    cos_phi = (xw * np.cos(xv + params.phi_ext)) @ xw.T
    h = -4.0 * params.e_c * (m_ho @ m_ho) - params.e_j * cos_phi \
        + 0.5 * params.e_l * (x @ x)
    evals, evecs = eigh(h)
    m = evecs.T @ m_ho @ evecs
    return evals - evals[0], m


def fluxonium_spectrum(params: FluxoniumParams, basis_dim: int = 140,
                       n_levels: int = 12, check_convergence: bool = True):
    """Fluxonium eigenenergies (GHz, relative to ground) and charge elements.

    Convergence is verified by doubling the harmonic basis; a drift of f_01
    beyond 1 kHz raises :class:`ConvergenceError` carrying both values.
    """
    if basis_dim < 60:
        raise ValueError("basis_dim must be at least 60")
    energies, m = _fluxonium_diagonalize(params, basis_dim)
    if check_convergence:
        refined, _ = _fluxonium_diagonalize(params, 2 * basis_dim)
        drift = abs(refined[1] - energies[1])
        if drift > CONVERGENCE_TOL_GHZ:
            raise ConvergenceError(
                f"f_01 drifts by {drift * 1e6:.3f} kHz when doubling the basis "
                f"({energies[1]:.9f} -> {refined[1]:.9f} GHz)",
                coarse=energies[1], refined=refined[1],
            )
    n_levels = max(n_levels, 8)
    return FluxoniumSpectrum(energies[:n_levels], m[:n_levels, :n_levels],
                             basis_dim)


@dataclass
class ParityReport:
    """Charge selection rule at the half-flux sweet spot."""

    n01: float
    n03: float
    n13: float
    ratio_13_03: float
    passed: bool


def charge_parity_check(params: FluxoniumParams, basis_dim: int = 140):
    """Verify the parity selection rule |<1|n|3>| << |<0|n|3>| at phi_ext = pi.

    At the sweet spot eigenstates alternate parity and the charge operator
    only connects states of opposite parity, so the 1-3 element vanishes
    while 0-3 and 0-1 stay finite.
    """
    if abs((params.phi_ext - math.pi) % (2 * math.pi)) > 1e-9:
        raise ValueError("parity check requires phi_ext = pi (half flux quantum)")
    spec = fluxonium_spectrum(params, basis_dim, check_convergence=False)
    n01 = abs(spec.charge_imag[0, 1])
    n03 = abs(spec.charge_imag[0, 3])
    n13 = abs(spec.charge_imag[1, 3])
    ratio = n13 / n03 if n03 > 0 else math.inf
    return ParityReport(n01=n01, n03=n03, n13=n13, ratio_13_03=ratio,
                        passed=(ratio < 1e-6 and n03 > 0 and n01 > 0))


def couplings_from_capacitance(net: CapacitanceNetwork):
    """Leading-order charge couplings from the capacitance network.

    J_c = 4 e^2 C_c / (C_b C_f) and J_AB = 4 e^2 C_c^2 / (C_b C_f^2), so the
    ratio J_AB / J_c = C_c / C_f exactly.  Values returned in GHz.
    """
    j_c = _FOUR_E_SQ_OVER_H_FF * net.c_c / (net.c_b * net.c_f)
    j_ab = j_c * net.c_c / net.c_f
    return ChargeCouplings(j_c=j_c, j_ab=j_ab, form="charge-charge")


def bus_charge_zpf(c_b_ff: float, f_b_ghz: float):
    """Zero-point Cooper-pair number of the bus mode, sqrt(h f C / 2) / 2e."""
    h = 6.62607015e-34
    e = 1.602176634e-19
    return math.sqrt(h * f_b_ghz * 1e9 * c_b_ff * 1e-15 / 2.0) / (2.0 * e)


# ---------------------------------------------------------------------------
# composite model
# ---------------------------------------------------------------------------

@dataclass
class SpectrumResult:
    """Dressed eigenpairs with bare-product labels.

    ``labels[k]`` is the (k_A, k_B, n_bus) tuple assigned to eigenstate k by
    greedy maximum-squared-overlap matching, or None when the best overlap is
    below 0.5.  ``overlaps[k]`` records the assignment confidence.
    """

    energies: np.ndarray
    labels: list
    overlaps: np.ndarray

    def index_of(self, label):
        for k, lab in enumerate(self.labels):
            if lab == label:
                return k
        raise LabelingError(f"no dressed state labeled {label}")


@dataclass
class DispersiveShifts:
    """Qubit-state-conditioned bus frequencies and the resulting shifts."""

    chi_a_mhz: float
    chi_b_mhz: float
    quartet: dict            # (i, j) -> f_bus|ij in GHz
    cross_kerr_mhz: float    # additivity residual (f_ee - f_gg) - chi_a - chi_b


@dataclass
class StaticZZReport:
    """Always-on ZZ rate and its single-path decomposition, in Hz."""

    zeta_hz: float
    zeta_jab_off_hz: float
    zeta_jc_off_hz: float
    cancellation: float      # |zeta(j_ab=0)| / |zeta(full)|


class CompositeModel:
    """Two fluxoniums coupled through a bus, truncated by bare energy.

    Construction diagonalizes the subspace Hamiltonian and labels the dressed
    states.  Operator blocks needed for time-domain work (drive quadrature,
    annihilation, photon number, RWA-split drive) are built lazily.
    """

    def __init__(self, qubit_a, qubit_b, bus, couplings, trunc_dim=800,
                 levels=(8, 8, 30), basis_dim=140, bus_zpf=1.0):
        n_a, n_b, n_bus = levels
        if trunc_dim > n_a * n_b * n_bus:
            raise ValueError(
                f"trunc_dim {trunc_dim} exceeds the {n_a * n_b * n_bus} "
                "retained product states")
        self.qubit_a, self.qubit_b, self.bus = qubit_a, qubit_b, bus
        self.couplings = couplings
        self.levels = levels
        self.trunc_dim = trunc_dim
        self.bus_zpf = bus_zpf

        spec_a = fluxonium_spectrum(qubit_a, basis_dim, n_levels=n_a,
                                    check_convergence=False)
        spec_b = fluxonium_spectrum(qubit_b, basis_dim, n_levels=n_b,
                                    check_convergence=False)
        self.mode_a, self.mode_b = spec_a, spec_b

        e_a, m_a = spec_a.energies[:n_a], spec_a.charge_imag[:n_a, :n_a]
        e_b, m_b = spec_b.energies[:n_b], spec_b.charge_imag[:n_b, :n_b]
        a_op = _annihilation(n_bus)
        quad_y = a_op.T - a_op       # (a^dag - a), real antisymmetric

        ka, kb, nb = np.meshgrid(np.arange(n_a), np.arange(n_b),
                                 np.arange(n_bus), indexing="ij")
        bare = (e_a[ka] + e_b[kb] + bus.f_b * nb).ravel()
        keep = np.argsort(bare, kind="stable")[:trunc_dim]
        self.idx_a, self.idx_b, self.idx_bus = np.unravel_index(
            keep, (n_a, n_b, n_bus))
        self.bare_energies = bare[keep]

        same_a = np.equal.outer(self.idx_a, self.idx_a)
        same_b = np.equal.outer(self.idx_b, self.idx_b)
        same_bus = np.equal.outer(self.idx_bus, self.idx_bus)
        ga = m_a[np.ix_(self.idx_a, self.idx_a)]
        gb = m_b[np.ix_(self.idx_b, self.idx_b)]
        gy = quad_y[np.ix_(self.idx_bus, self.idx_bus)]

        h = np.diag(self.bare_energies)
        c = couplings
        if c.form == "charge-quadrature":
            # i J n (a^dag - a) with n = i M  ->  -J * (M x quad_y), real
            h -= c.j1 * (ga * gy * same_b)
            h -= c.j2 * (gb * gy * same_a)
        else:
            # J_c n_f n_b with n_b = i zpf (a^dag - a)  ->  -J_c zpf (M x quad_y)
            h -= c.j_c * bus_zpf * (ga * gy * same_b)
            h -= c.j_c * bus_zpf * (gb * gy * same_a)
            # J_AB n_A n_B = (i M_A)(i M_B) = -(M_A x M_B)
            h -= c.j_ab * (ga * gb * same_bus)
        self.hamiltonian = h

        self.energies, self.eigvecs = eigh(h)
        self._label()
        self._same_mode_masks = (same_a, same_b, same_bus)

    # -- labeling -----------------------------------------------------------

    def _label(self):
        r2 = self.eigvecs ** 2
        best = np.argmax(r2, axis=0)
        conf = r2[best, np.arange(self.trunc_dim)]
        labels = [None] * self.trunc_dim
        claimed = set()
        for k in np.argsort(-conf, kind="stable"):
            p = best[k]
            key = (int(self.idx_a[p]), int(self.idx_b[p]), int(self.idx_bus[p]))
            if conf[k] >= 0.5 and key not in claimed:
                labels[k] = key
                claimed.add(key)
        self.spectrum = SpectrumResult(self.energies, labels, conf)
        self._label_index = {lab: k for k, lab in enumerate(labels)
                             if lab is not None}
        # frame bookkeeping uses argmax labels regardless of confidence
        self.bus_label = self.idx_bus[best].astype(int)
        self.flux_label = np.stack([self.idx_a[best], self.idx_b[best]],
                                   axis=1).astype(int)

    def label_index(self, label):
        try:
            return self._label_index[tuple(label)]
        except KeyError:
            raise LabelingError(f"no dressed state labeled {tuple(label)}") from None

    def energy_of(self, label):
        return self.energies[self.label_index(label)]

    # -- lazy operator blocks (dressed basis) --------------------------------

    def _gather_bus(self, op):
        same_a, same_b, _ = self._same_mode_masks
        sub = op[np.ix_(self.idx_bus, self.idx_bus)] * (same_a & same_b)
        return self.eigvecs.T @ sub @ self.eigvecs

    @cached_property
    def drive_op(self):
        """Bus drive quadrature (a^dag + a) in the dressed basis."""
        a_op = _annihilation(self.levels[2])
        return self._gather_bus(a_op.T + a_op)

    @cached_property
    def lower_op(self):
        """Bus annihilation operator in the dressed basis."""
        return self._gather_bus(_annihilation(self.levels[2]))

    @cached_property
    def number_op(self):
        """Bus photon number in the dressed basis."""
        n_bus = self.levels[2]
        same_a, same_b, _ = self._same_mode_masks
        sub = np.diag(np.arange(n_bus, dtype=float))[
            np.ix_(self.idx_bus, self.idx_bus)] * (same_a & same_b)
        return self.eigvecs.T @ sub @ self.eigvecs

    @cached_property
    def rwa_drive(self):
        """(S, K): symmetric/antisymmetric RWA split of the drive quadrature.

        With the drive written as Re[env(t) e^{i 2 pi f_d t}] (a^dag + a), the
        frame rotating at f_d per bus-label excitation keeps
        W(t) = Re(env) S + i Im(env) K, where S couples bus labels n <-> n+1
        symmetrically and K antisymmetrically.
        """
        dn = np.subtract.outer(self.bus_label, self.bus_label)
        d_plus = np.where(dn == 1, self.drive_op, 0.0)
        d_minus = np.where(dn == -1, self.drive_op, 0.0)
        return 0.5 * (d_plus + d_minus), 0.5 * (d_minus - d_plus)

    def computational_mask(self):
        """True where both fluxonium labels are in {0, 1} (any bus level)."""
        return (self.flux_label[:, 0] <= 1) & (self.flux_label[:, 1] <= 1)

    def bare_amplitudes(self, psi):
        """Scatter a dressed-basis state into the bare product tensor."""
        coeff = self.eigvecs @ np.asarray(psi)
        tensor = np.zeros(self.levels, dtype=coeff.dtype)
        tensor[self.idx_a, self.idx_b, self.idx_bus] = coeff
        return tensor


def composite_hamiltonian(qubit_a, qubit_b, bus, couplings, trunc_dim=800,
                          levels=None, basis_dim=140, bus_zpf=1.0):
    """Build and diagonalize the coupled two-fluxonium/bus model."""
    if levels is None:
        levels = (8, 8, bus.dim)
    return CompositeModel(qubit_a, qubit_b, bus, couplings, trunc_dim=trunc_dim,
                          levels=levels, basis_dim=basis_dim, bus_zpf=bus_zpf)


def dressed_spectrum(model: CompositeModel) -> SpectrumResult:
    """Labeled dressed eigenpairs of a built composite model."""
    return model.spectrum


_COMPUTATIONAL = ((0, 0), (1, 0), (0, 1), (1, 1))


def dispersive_shifts(model: CompositeModel) -> DispersiveShifts:
    """Qubit-conditioned bus frequencies f_bus|ij = E(i,j,1) - E(i,j,0).

    Sign convention: chi = f|e - f|g, so a bus transition pushed up by the
    excited qubit gives positive chi.
    """
    quartet = {}
    for (i, j) in _COMPUTATIONAL:
        quartet[(i, j)] = (model.energy_of((i, j, 1))
                           - model.energy_of((i, j, 0)))
    chi_a = (quartet[(1, 0)] - quartet[(0, 0)]) * 1e3
    chi_b = (quartet[(0, 1)] - quartet[(0, 0)]) * 1e3
    residual = (quartet[(1, 1)] - quartet[(0, 0)]) * 1e3 - chi_a - chi_b
    return DispersiveShifts(chi_a_mhz=chi_a, chi_b_mhz=chi_b, quartet=quartet,
                            cross_kerr_mhz=residual)


def zz_from_model(model: CompositeModel):
    """zeta = (E_ee - E_eg - E_ge + E_gg) in Hz from the labeled spectrum."""
    e = {k: model.energy_of((k[0], k[1], 0)) for k in _COMPUTATIONAL}
    return (e[(1, 1)] - e[(1, 0)] - e[(0, 1)] + e[(0, 0)]) * 1e9


def static_zz(qubit_a, qubit_b, bus, couplings, trunc_dim=800, levels=None,
              basis_dim=140, bus_zpf=1.0) -> StaticZZReport:
    """Static ZZ with the two single-path components.

    Runs three diagonalizations: the full model, j_ab = 0, and j_c = 0.
    The cancellation ratio compares the bus-only path against the full model;
    values >> 1 demonstrate the multi-path ZZ suppression.
    """
    import dataclasses

    def run(c):
        m = composite_hamiltonian(qubit_a, qubit_b, bus, c, trunc_dim=trunc_dim,
                                  levels=levels, basis_dim=basis_dim,
                                  bus_zpf=bus_zpf)
        return zz_from_model(m)

    zeta = run(couplings)
    zeta_no_ab = run(dataclasses.replace(couplings, j_ab=0.0))
    zeta_no_c = run(dataclasses.replace(couplings, j_c=0.0))
    cancel = abs(zeta_no_ab) / abs(zeta) if zeta != 0 else math.inf
    return StaticZZReport(zeta_hz=zeta, zeta_jab_off_hz=zeta_no_ab,
                          zeta_jc_off_hz=zeta_no_c, cancellation=cancel)
