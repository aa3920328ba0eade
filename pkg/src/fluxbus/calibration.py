"""Analysis pipelines for device calibrations on measured or synthetic data.

Covers the photon-number calibration (Fock peak heights -> coherent-state
amplitude), Ramsey-based static-ZZ estimation, randomized-benchmarking decay
and quadratic error-accumulation fits, single-shot readout discrimination,
and measurement-induced-transition summaries.  All fits are deterministic
given the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import FitError

P_VALIDITY_FLOOR = 0.01          # Fock populations below this are unreliable


# ---------------------------------------------------------------------------
# photon-number calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhotonCalRecord:
    """Peak heights (arbitrary linear units) at one pump amplitude."""

    pump_amplitude: float
    peak_height_n0: float
    peak_height_n2: float
    reference_height: float      # height at zero pump, where P0 = 1

    def __post_init__(self):
        if min(self.peak_height_n0, self.peak_height_n2) < 0:
            raise ValueError("peak heights must be nonnegative")
        if self.reference_height <= 0:
            raise ValueError("reference height must be positive")


def poisson_population(n, alpha):
    """Coherent-state Fock population e^{-|a|^2} |a|^{2n} / n!."""
    x = abs(alpha) ** 2
    return math.exp(-x) * x ** n / math.factorial(n)


def fock_population(record: PhotonCalRecord, n, k2=None, tol=0.05):
    """Fock-state population from a photon-number-splitting peak height.

    n = 0 uses P = height / reference directly; n = 2 needs the
    cross-calibration constant ``k2`` from :func:`cross_calibration_k2`.
    """
    if n == 0:
        p = record.peak_height_n0 / record.reference_height
    elif n == 2:
        if k2 is None:
            raise ValueError("n = 2 requires the cross-calibration constant")
        p = record.peak_height_n2 / k2
    else:
        raise ValueError("only Fock 0 and 2 peaks are calibrated")
    if p > 1.0 + tol:
        raise FitError(f"Fock population {p:.3f} exceeds 1; data inconsistent")
    return min(p, 1.0)


def cross_calibration_k2(records, anchor_amplitude):
    """Fock-2 height scale from the record at the anchor pump amplitude.

    At the anchor, |alpha| is taken from the Fock-0 population, the expected
    Fock-2 population follows from the Poisson distribution, and the ratio
    height / population fixes the conversion for all other amplitudes.
    """
    anchor = min(records, key=lambda r: abs(r.pump_amplitude - anchor_amplitude))
    p0 = fock_population(anchor, 0)
    alpha = alpha_from_p0(p0)
    if not alpha.valid:
        raise FitError("anchor point sits outside the valid Fock-0 window")
    p2 = poisson_population(2, alpha.value)
    if p2 <= 0:
        raise FitError("anchor point has vanishing Fock-2 population")
    return anchor.peak_height_n2 / p2


@dataclass(frozen=True)
class AlphaEstimate:
    value: float
    valid: bool
    branch: str = "low"


def alpha_from_p0(p0) -> AlphaEstimate:
    """|alpha| = sqrt(-ln P0); flagged invalid once P0 drops below 0.01."""
    if p0 <= 0:
        raise ValueError("P0 must be positive")
    if p0 > 1.0:
        raise ValueError("P0 cannot exceed 1")
    value = math.sqrt(-math.log(p0))
    return AlphaEstimate(value=value, valid=p0 >= P_VALIDITY_FLOOR)


_P2_MAX = 2.0 * math.exp(-2.0)   # max of x^2 e^{-x} / 2 at x = |alpha|^2 = 2


def alpha_from_p2(p2, branch="low") -> AlphaEstimate:
    """Invert P2 = x^2 e^{-x} / 2 (x = |alpha|^2) on one monotone branch.

    The conversion is flagged invalid outside 0.4 < |alpha| < 2.8 where the
    Fock-2 population falls to the 0.01 breakdown level.
    """
    if p2 <= 0:
        raise ValueError("P2 must be positive")
    if p2 > _P2_MAX + 1e-12:
        raise ValueError(f"P2 = {p2:.4f} exceeds the maximum {_P2_MAX:.4f}")
    if branch not in ("low", "high"):
        raise ValueError("branch must be 'low' or 'high'")

    def f(x):
        return 0.5 * x * x * math.exp(-x) - p2

    p2 = min(p2, _P2_MAX)
    if branch == "low":
        x = optimize.brentq(f, 1e-12, 2.0)
    else:
        hi = 2.0
        while f(hi) > 0:
            hi *= 2.0
        x = optimize.brentq(f, 2.0, hi)
    value = math.sqrt(x)
    return AlphaEstimate(value=value, valid=0.4 <= value <= 2.8, branch=branch)


def alpha_from_p2_both(p2):
    """Both roots of the Fock-2 inversion, flagged; near the maximum the
    branches become ambiguous and both should be inspected."""
    return alpha_from_p2(p2, "low"), alpha_from_p2(p2, "high")


@dataclass
class LineFit:
    slope: float
    stderr: float
    n_used: int


def fit_alpha_line(amplitudes, alphas, valid=None) -> LineFit:
    """Least-squares line through the origin over the valid points."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    mask = np.ones(len(amplitudes), dtype=bool) if valid is None \
        else np.asarray(valid, dtype=bool)
    x, y = amplitudes[mask], alphas[mask]
    if len(x) < 3:
        raise FitError(f"need at least 3 valid points, got {len(x)}")
    sxx = float(x @ x)
    slope = float(x @ y) / sxx
    resid = y - slope * x
    dof = max(len(x) - 1, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return LineFit(slope=slope, stderr=stderr, n_used=int(mask.sum()))


# ---------------------------------------------------------------------------
# Ramsey / static ZZ
# ---------------------------------------------------------------------------

@dataclass
class RamseyFit:
    frequency_mhz: float
    frequency_err_mhz: float
    decay_time_us: float
    params: tuple                # (A, tau, f, phi, C)


def fit_ramsey(delays_us, signal) -> RamseyFit:
    """Decaying-sinusoid fit A e^{-t/tau} cos(2 pi f t + phi) + C.

    The frequency is seeded from the spectrum peak; the quoted error is the
    covariance standard error.
    """
    t = np.asarray(delays_us, dtype=float)
    y = np.asarray(signal, dtype=float)
    if len(t) < 8:
        raise FitError("too few points for a Ramsey fit")
    # frequency seed from a dense rFFT of the detrended signal
    dt = np.median(np.diff(t))
    yc = y - y.mean()
    freqs = np.fft.rfftfreq(8 * len(t), dt)
    power = np.abs(np.fft.rfft(yc, 8 * len(t)))
    f0 = max(freqs[np.argmax(power[1:]) + 1], 1.0 / (t[-1] - t[0]))
    a0 = float(np.sqrt(2.0) * yc.std())

    def model(tt, a, tau, f, phi, c):
        return a * np.exp(-tt / tau) * np.cos(2 * np.pi * f * tt + phi) + c

    p0 = (a0, t[-1], f0, 0.0, float(y.mean()))
    try:
        popt, pcov = optimize.curve_fit(model, t, y, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"Ramsey fit did not converge: {exc}") from exc
    perr = np.sqrt(np.abs(np.diag(pcov)))
    freq = abs(popt[2])
    return RamseyFit(frequency_mhz=freq, frequency_err_mhz=float(perr[2]),
                     decay_time_us=abs(popt[1]), params=tuple(popt))


@dataclass
class ZZEstimate:
    zeta_hz: float
    ci95_hz: tuple               # (low, high); (nan, nan) for a single repeat
    stderr_hz: float
    n_repeats: int

    @property
    def ci_defined(self):
        return self.n_repeats >= 2


def static_zz_estimate(freqs_g_mhz, freqs_e_mhz) -> ZZEstimate:
    """Mean frequency difference with a 95% t-distribution interval, in Hz."""
    fg = np.asarray(freqs_g_mhz, dtype=float)
    fe = np.asarray(freqs_e_mhz, dtype=float)
    if fg.shape != fe.shape:
        raise ValueError("need paired g/e frequency estimates")
    diffs_hz = (fe - fg) * 1e6
    n = len(diffs_hz)
    mean = float(diffs_hz.mean())
    if n < 2:
        return ZZEstimate(mean, (math.nan, math.nan), math.nan, n)
    se = float(diffs_hz.std(ddof=1) / math.sqrt(n))
    half = stats.t.ppf(0.975, n - 1) * se
    return ZZEstimate(mean, (mean - half, mean + half), se, n)


# ---------------------------------------------------------------------------
# randomized benchmarking
# ---------------------------------------------------------------------------

@dataclass
class RBFit:
    p: float
    p_err: float
    amplitude: float
    offset: float
    per_gate_error: float        # r = (1 - p)(d - 1)/d with d = 4
    fidelity: float


def fit_rb(lengths, survival) -> RBFit:
    """Exponential RB decay A p^m + B; two-qubit error r = 3 (1 - p) / 4."""
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(survival, dtype=float)
    if len(m) < 4:
        raise FitError("need at least 4 sequence lengths")
    if np.ptp(y) < 1e-12:
        # constant data: p = 1 exactly
        return RBFit(1.0, 0.0, 0.0, float(y.mean()), 0.0, 1.0)

    def model(mm, a, p, b):
        return a * p ** mm + b

    span = y[0] - y[-1]
    p0 = (span if span != 0 else 0.5, 0.98, float(y[-1]))
    try:
        popt, pcov = optimize.curve_fit(model, m, y, p0=p0, maxfev=20000,
                                        bounds=([-2.0, 0.0, -1.0],
                                                [2.0, 1.0, 2.0]))
    except RuntimeError as exc:
        raise FitError(f"RB fit did not converge: {exc}") from exc
    a, p, b = popt
    if not 0.0 < p < 1.0:
        raise FitError(f"decay parameter p = {p:.4f} outside (0, 1)")
    r = (1.0 - p) * 3.0 / 4.0
    return RBFit(float(p), float(np.sqrt(abs(pcov[1, 1]))), float(a), float(b),
                 float(r), float(1.0 - r))


@dataclass
class QuadraticErrorFit:
    eps1: float
    eps2: float
    eps_single: float            # eps(1) = eps1 + eps2
    cov: np.ndarray


def fit_quadratic_error(m_values, errors) -> QuadraticErrorFit:
    """Least squares through the origin of eps(m) = eps1 m + eps2 m^2."""
    m = np.asarray(m_values, dtype=float)
    y = np.asarray(errors, dtype=float)
    if len(m) < 3:
        raise FitError("need at least 3 gate counts")
    design = np.column_stack([m, m * m])
    if np.linalg.matrix_rank(design) < 2:
        raise FitError("rank-deficient design (degenerate m values)")
    coef, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    dof = max(len(m) - 2, 1)
    sigma2 = float(res[0] / dof) if len(res) else \
        float(np.sum((y - design @ coef) ** 2) / dof)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return QuadraticErrorFit(float(coef[0]), float(coef[1]),
                             float(coef.sum()), cov)


# ---------------------------------------------------------------------------
# single-shot readout
# ---------------------------------------------------------------------------

@dataclass
class SingleShotDataset:
    """Complex-plane readout shots tagged by prepared state.

    ``second`` optionally carries the outcome of an immediately repeated
    readout (same shot order), enabling the QND-ness estimate.
    """

    points: np.ndarray           # complex, shape (n,)
    prepared: np.ndarray         # 0 for g, 1 for e
    second: np.ndarray = None    # complex, same shape, or None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.prepared = np.asarray(self.prepared, dtype=int)
        if self.points.shape != self.prepared.shape:
            raise ValueError("points and prepared tags must align")
        if self.second is not None:
            self.second = np.asarray(self.second, dtype=complex)
            if self.second.shape != self.points.shape:
                raise ValueError("second readout must align with the first")
        if not np.all(np.isfinite(self.points.view(float))):
            raise ValueError("readout points must be finite")


@dataclass
class BlobModel:
    means: np.ndarray            # complex, (3,) ordered |0>, |1>, |2>
    covariances: np.ndarray      # (3, 2, 2)
    weights: np.ndarray

    def sigma(self, k):
        """Isotropic-equivalent blob standard deviation."""
        return math.sqrt(0.5 * float(np.trace(self.covariances[k])))


def fit_blobs(dataset: SingleShotDataset) -> BlobModel:
    """Three-component full-covariance Gaussian mixture of the IQ shots.

    Components are initialized from the tagged-state medians plus the point
    most distant from both (the |2> leakage blob) and reordered afterwards so
    the |0>/|1> components sit nearest those medians.
    """
    from sklearn.mixture import GaussianMixture

    xy = np.column_stack([dataset.points.real, dataset.points.imag])
    med_g = np.median(xy[dataset.prepared == 0], axis=0)
    med_e = np.median(xy[dataset.prepared == 1], axis=0)
    d = np.linalg.norm(xy - med_g, axis=1) + np.linalg.norm(xy - med_e, axis=1)
    far = xy[np.argmax(d)]
    gm = GaussianMixture(n_components=3, covariance_type="full",
                         means_init=np.array([med_g, med_e, far]),
                         random_state=0, n_init=1, reg_covar=1e-10)
    gm.fit(xy)
    means = gm.means_[:, 0] + 1j * gm.means_[:, 1]
    # reorder components to |0>, |1>, |2>
    order = [int(np.argmin(np.abs(means - (med_g[0] + 1j * med_g[1])))),
             int(np.argmin(np.abs(means - (med_e[0] + 1j * med_e[1]))))]
    if order[0] == order[1]:
        raise FitError("mixture components merged; blobs indistinguishable")
    order.append(({0, 1, 2} - set(order)).pop())
    return BlobModel(means=means[order], covariances=gm.covariances_[order],
                     weights=gm.weights_[order])


@dataclass
class ReadoutResult:
    method: str
    p0_given_g: float
    p1_given_e: float
    fidelity: float
    qndness: float               # nan when no repeated readout is provided
    discard_fraction: float
    leakage_p2: float


def readout_discriminate(dataset: SingleShotDataset, method="binary",
                         blob_model: BlobModel = None,
                         circle_radius_sigmas=2.0) -> ReadoutResult:
    """Extract populations, fidelity F = [P(0|g) + P(1|e)]/2, and QND-ness.

    binary     -- perpendicular bisector between the |0> and |1> blob means.
    circular   -- count only shots inside radius-2-sigma circles; shots
                  outside every circle (or inside two) are discarded.
    heights    -- populations from per-preparation mixture weights, avoiding
                  assignment errors entirely.
    """
    blobs = blob_model or fit_blobs(dataset)
    if method == "binary":
        assign, used = _assign_binary(dataset.points, blobs)
    elif method == "circular":
        assign, used = _assign_circular(dataset.points, blobs,
                                        circle_radius_sigmas)
    elif method == "heights":
        return _heights_result(dataset, blobs)
    else:
        raise ValueError(f"unknown method {method!r}")

    g_mask = (dataset.prepared == 0) & used
    e_mask = (dataset.prepared == 1) & used
    p0g = float(np.mean(assign[g_mask] == 0)) if g_mask.any() else math.nan
    p1e = float(np.mean(assign[e_mask] == 1)) if e_mask.any() else math.nan
    fidelity = 0.5 * (p0g + p1e)
    leak2 = float(np.mean(assign[used] == 2)) if used.any() else math.nan

    qnd = math.nan
    if dataset.second is not None:
        if method == "binary":
            assign2, used2 = _assign_binary(dataset.second, blobs)
        else:
            assign2, used2 = _assign_circular(dataset.second, blobs,
                                              circle_radius_sigmas)
        both = used & used2
        m0 = both & (assign == 0)
        m1 = both & (assign == 1)
        p00 = float(np.mean(assign2[m0] == 0)) if m0.any() else math.nan
        p11 = float(np.mean(assign2[m1] == 1)) if m1.any() else math.nan
        qnd = 0.5 * (p00 + p11)

    return ReadoutResult(method=method, p0_given_g=p0g, p1_given_e=p1e,
                         fidelity=fidelity, qndness=qnd,
                         discard_fraction=1.0 - float(np.mean(used)),
                         leakage_p2=leak2)


def _assign_binary(points, blobs: BlobModel):
    mu0, mu1 = blobs.means[0], blobs.means[1]
    axis = mu1 - mu0
    proj = np.real((points - 0.5 * (mu0 + mu1)) * np.conj(axis))
    assign = np.where(proj > 0, 1, 0)
    return assign, np.ones(len(points), dtype=bool)


def _assign_circular(points, blobs: BlobModel, radius_sigmas):
    dist = np.stack([np.abs(points - blobs.means[k]) for k in range(3)])
    radii = np.array([radius_sigmas * blobs.sigma(k) for k in range(3)])
    inside = dist <= radii[:, None]
    n_inside = inside.sum(axis=0)
    used = n_inside == 1
    assign = np.where(used, np.argmax(inside, axis=0), -1)
    return assign, used


def _heights_result(dataset, blobs):
    from scipy.stats import multivariate_normal

    xy = np.column_stack([dataset.points.real, dataset.points.imag])
    dens = np.stack([
        multivariate_normal.pdf(
            xy, mean=[blobs.means[k].real, blobs.means[k].imag],
            cov=blobs.covariances[k]) for k in range(3)])

    def weights_for(mask):
        w = np.asarray(blobs.weights, dtype=float).copy()
        for _ in range(200):
            resp = (w[:, None] * dens[:, mask])
            resp /= resp.sum(axis=0, keepdims=True)
            w_new = resp.mean(axis=1)
            if np.max(np.abs(w_new - w)) < 1e-12:
                w = w_new
                break
            w = w_new
        return w

    wg = weights_for(dataset.prepared == 0)
    we = weights_for(dataset.prepared == 1)
    return ReadoutResult(method="heights", p0_given_g=float(wg[0]),
                         p1_given_e=float(we[1]),
                         fidelity=0.5 * float(wg[0] + we[1]), qndness=math.nan,
                         discard_fraction=0.0,
                         leakage_p2=0.5 * float(wg[2] + we[2]))


# ---------------------------------------------------------------------------
# measurement-induced state transitions
# ---------------------------------------------------------------------------

@dataclass
class MistReport:
    """Leakage-vs-photon-number summary for one prepared state."""

    rising: dict                 # state label -> bool (population grows with n)
    onset_photons: dict          # state label -> first n with pop > threshold
    operating_photons: float
    flagged_at_operating: bool


def mist_curve(photon_numbers, populations, operating_photons=10.4,
               rise_threshold=0.02) -> MistReport:
    """Monotonicity and onset thresholds of unwanted populations vs photons.

    ``populations`` maps a state label to its population trace over the
    photon-number axis.  A state is 'rising' when its population increases
    by more than ``rise_threshold`` from its zero-photon baseline; the onset
    is the first photon number where that happens.
    """
    n = np.asarray(photon_numbers, dtype=float)
    rising, onset = {}, {}
    flagged = False
    for label, pop in populations.items():
        pop = np.asarray(pop, dtype=float)
        if pop.shape != n.shape:
            raise ValueError(f"population trace {label!r} misaligned")
        excess = pop - pop[0]
        above = np.nonzero(excess > rise_threshold)[0]
        rising[label] = bool(len(above) > 0)
        onset[label] = float(n[above[0]]) if len(above) else math.inf
        if rising[label] and onset[label] <= operating_photons:
            flagged = True
    return MistReport(rising=rising, onset_photons=onset,
                      operating_photons=operating_photons,
                      flagged_at_operating=flagged)
