"""AR(p) estimation and prediction, GARCH(1,1) filtering, ACF and Ljung-Box.

AR fitting follows the classical Yule-Walker route: biased sample
autocovariances, the Levinson-Durbin recursion for every order up to
``max_order``, and AIC on the innovation-variance sequence to pick the
order.  The process mean is handled explicitly (eta), so the AR equation
reads  x(t) = eta + sum_j tau_j (x(t-j) - eta) + innovation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaincc

from .errors import (
    DegenerateSeries,
    HistoryTooShort,
    InvalidInput,
    NumericalFailure,
)
from .optimize import OptimizeSettings, minimize


@dataclass(frozen=True)
class ARCoeffs:
    """AR(p) coefficients: process mean eta and lag weights tau_1..tau_p."""

    p: int
    eta: float
    tau: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.p != len(self.tau):
            raise InvalidInput(f"AR order {self.p} does not match {len(self.tau)} tau values")
        if not np.all(np.isfinite([self.eta, *self.tau])):
            raise InvalidInput("AR coefficients must be finite")


@dataclass(frozen=True)
class GARCHCoeffs:
    """GARCH(1,1) coefficients, all non-negative."""

    omega0: float
    omega1: float
    omega2: float

    def __post_init__(self):
        vals = (self.omega0, self.omega1, self.omega2)
        if not np.all(np.isfinite(vals)) or min(vals) < 0:
            raise InvalidInput(f"GARCH coefficients must be finite and >= 0, got {vals}")


def _centered(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSeries("need at least 2 observations")
    mean = x.mean()
    c = x - mean
    if not np.all(np.isfinite(c)):
        raise InvalidInput("series contains non-finite values")
    # relative floor catches constant series despite summation rounding
    floor = x.size * (1e-12 * (1.0 + abs(mean))) ** 2
    if float(c @ c) <= floor:
        raise DegenerateSeries("constant series has no autocorrelation structure")
    return c


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations rho_1..rho_max_lag (biased denominator).

    Autocovariances use divisor n and are normalized by the lag-0
    autocovariance, the convention that keeps Levinson-Durbin stable.
    """
    c = _centered(x)
    n = c.size
    if not (1 <= max_lag < n):
        raise InvalidInput(f"max_lag must be in [1, n-1], got {max_lag} for n={n}")
    denom = float(c @ c)
    return np.array([float(c[k:] @ c[:-k]) / denom for k in range(1, max_lag + 1)])


def _levinson_durbin(gamma: np.ndarray):
    """All-order Yule-Walker solutions from autocovariances gamma_0..gamma_p.

    Returns (coeffs, variances): coeffs[k] is the tau vector of the order-k
    model, variances[k] the corresponding innovation-variance estimate
    (variances[0] = gamma_0).
    """
    max_order = gamma.size - 1
    coeffs = [np.empty(0)]
    variances = [gamma[0]]
    phi = np.empty(0)
    v = gamma[0]
    for k in range(1, max_order + 1):
        acc = gamma[k] - (phi @ gamma[k - 1:0:-1] if k > 1 else 0.0)
        kappa = acc / v
        phi_new = np.empty(k)
        phi_new[k - 1] = kappa
        if k > 1:
            phi_new[: k - 1] = phi - kappa * phi[::-1]
        v = v * (1.0 - kappa * kappa)
        phi = phi_new
        coeffs.append(phi.copy())
        variances.append(v)
    return coeffs, np.asarray(variances)


def fit_ar_yule_walker(x, max_order: int | None = None) -> ARCoeffs:
    """Fit an AR(p) model with the order chosen by AIC over 0..max_order.

    eta is the sample mean; tau comes from the Levinson-Durbin recursion at
    the selected order.  Default max_order = min(20, floor(10 log10 n)),
    additionally capped at n - 2.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if max_order is None:
        max_order = min(20, int(np.floor(10.0 * np.log10(max(n, 2)))))
    max_order = max(0, min(max_order, n - 2))
    if n <= max_order + 1:
        raise InvalidInput(f"series of length {n} too short for max_order {max_order}")
    c = _centered(x)
    gamma = np.array([float(c @ c)] + [float(c[k:] @ c[:-k]) for k in range(1, max_order + 1)]) / n
    coeffs, variances = _levinson_durbin(gamma)
    variances = np.maximum(variances, 1e-300)
    aic = n * np.log(variances) + 2.0 * np.arange(max_order + 1)
    p = int(np.argmin(aic))
    return ARCoeffs(p=p, eta=float(x.mean()), tau=tuple(float(t) for t in coeffs[p]))


def ar_innovation_variance(x, ar: ARCoeffs) -> float:
    """Mean squared one-step prediction error of ``ar`` on the series itself."""
    x = np.asarray(x, dtype=float).ravel()
    if ar.p == 0:
        return float(np.mean(np.square(x - ar.eta)))
    if x.size <= ar.p:
        raise HistoryTooShort(f"series of length {x.size} cannot score an AR({ar.p})")
    pred = np.full(x.size - ar.p, ar.eta)
    for j, t in enumerate(ar.tau, start=1):
        pred += t * (x[ar.p - j: x.size - j] - ar.eta)
    return float(np.mean(np.square(x[ar.p:] - pred)))


def is_stationary(tau) -> bool:
    """True when all roots of 1 - tau_1 z - ... - tau_p z^p lie outside the unit circle."""
    tau = np.asarray(tau, dtype=float).ravel()
    if tau.size == 0:
        return True
    roots = np.roots(np.concatenate([-tau[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


def ar_one_step(ar: ARCoeffs, history) -> float:
    """One-step AR prediction eta + sum_j tau_j (history[-j] - eta).

    ``history`` is ordered oldest to newest and must provide at least p values.
    """
    hist = np.asarray(history, dtype=float).ravel()
    if hist.size < ar.p:
        raise HistoryTooShort(f"AR({ar.p}) needs {ar.p} past values, got {hist.size}")
    acc = ar.eta
    for j, t in enumerate(ar.tau, start=1):
        acc += t * (hist[-j] - ar.eta)
    return float(acc)


def ar_multistep(ar: ARCoeffs, history, steps: int) -> np.ndarray:
    """Iterated AR predictions, appending each prediction to the history.

    Used whenever the lead time leaves the most recent residuals
    unobserved.  Emits a warning for nonstationary tau, where the recursion
    can diverge.
    """
    if steps < 1:
        raise InvalidInput("steps must be >= 1")
    if not is_stationary(ar.tau):
        warnings.warn("multi-step prediction with nonstationary AR coefficients", stacklevel=2)
    hist = list(np.asarray(history, dtype=float).ravel())
    out = np.empty(steps)
    for i in range(steps):
        out[i] = ar_one_step(ar, hist)
        hist.append(out[i])
    return out


# ---------------------------------------------------------------------------
# GARCH(1,1)
# ---------------------------------------------------------------------------


def garch_init_variance(g: GARCHCoeffs) -> float:
    """Starting variance for the GARCH recursion.

    The unconditional variance omega0 / (1 - omega1 - omega2) when the
    persistence is stationary, else 1.0.
    """
    persistence = g.omega1 + g.omega2
    if persistence < 1.0:
        return g.omega0 / (1.0 - persistence) if g.omega0 > 0 else 1.0
    return 1.0


def garch_filter(g: GARCHCoeffs, rho_sq, init_var: float) -> np.ndarray:
    """Forward GARCH(1,1) variance recursion.

    Element i of the output is sigma^2 one step after seeing ``rho_sq[i]``:

        out[0] = omega0 + omega1 * init_var + omega2 * rho_sq[0]
        out[i] = omega0 + omega1 * out[i-1] + omega2 * rho_sq[i]

    so the caller passes the *lagged* squared innovations rho^2(t-1) to get
    sigma^2(t).  Output is strictly positive whenever omega0 > 0 or the
    carried variance stays positive.
    """
    rho_sq = np.asarray(rho_sq, dtype=float).ravel()
    if init_var <= 0 or not np.isfinite(init_var):
        raise InvalidInput(f"init_var must be positive, got {init_var}")
    if rho_sq.size and (rho_sq.min() < 0 or not np.all(np.isfinite(rho_sq))):
        raise InvalidInput("squared innovations must be finite and >= 0")
    drive = g.omega0 + g.omega2 * rho_sq
    # IIR recursion out[i] = drive[i] + omega1 * out[i-1], seeded at init_var
    out = lfilter([1.0], [1.0, -g.omega1], drive, zi=np.array([g.omega1 * init_var]))[0]
    return out


def fit_garch(rho, settings: OptimizeSettings | None = None) -> GARCHCoeffs:
    """GARCH(1,1) fit by Gaussian quasi-maximum-likelihood.

    Coefficients are carried as unconstrained square roots during the
    optimization to keep them non-negative.  The recursion is started at
    the sample variance of ``rho``.

    Raises
    ------
    DegenerateSeries
        When ``rho`` is (nearly) constant.
    NumericalFailure
        When the likelihood cannot be evaluated at any tried point.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    var = float(np.var(rho))
    if rho.size < 20 or var <= 1e-12:
        raise DegenerateSeries("series too short or too flat for a GARCH fit")
    rho_sq = np.square(rho)

    def nll(theta):
        w0, w1, w2 = np.square(theta)
        sig2 = np.empty(rho.size)
        sig2[0] = var
        if rho.size > 1:
            drive = w0 + w2 * rho_sq[:-1]
            sig2[1:] = lfilter([1.0], [1.0, -w1], drive, zi=np.array([w1 * var]))[0]
        if sig2.min() <= 0 or not np.all(np.isfinite(sig2)):
            return np.inf
        return 0.5 * float(np.sum(np.log(sig2) + rho_sq / sig2))

    theta0 = np.sqrt([0.1 * var, 0.7, 0.15])
    result = minimize(nll, theta0, settings or OptimizeSettings(max_iterations=200))
    if not np.isfinite(result.value):
        raise NumericalFailure("GARCH likelihood not finite at any tried point")
    w0, w1, w2 = np.square(result.x)
    return GARCHCoeffs(omega0=float(w0), omega1=float(w1), omega2=float(w2))


# ---------------------------------------------------------------------------
# Ljung-Box
# ---------------------------------------------------------------------------


def chi2_sf(q: float, dof: int) -> float:
    """Upper tail of the chi-squared distribution via the regularized
    upper incomplete gamma function."""
    if q < 0 or dof < 1:
        raise InvalidInput(f"need q >= 0 and dof >= 1, got q={q}, dof={dof}")
    return float(gammaincc(dof / 2.0, q / 2.0))


def ljung_box(x, lag: int) -> tuple[float, float]:
    """Ljung-Box portmanteau test for absence of autocorrelation up to ``lag``.

    Q = n (n+2) sum_{j<=k} rho_j^2 / (n-j), compared against chi-squared
    with k degrees of freedom.  Returns (Q, p_value).
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if not (1 <= lag < n):
        raise InvalidInput(f"lag must be in [1, n-1], got {lag} for n={n}")
    rho = acf(x, lag)
    q = n * (n + 2.0) * float(np.sum(np.square(rho) / (n - np.arange(1, lag + 1))))
    return q, chi2_sf(q, lag)
