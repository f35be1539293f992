"""Grey models for hazard time series.

GM(1,1) drives the accumulated series with a constant forcing term; the
Fourier-forced variant replaces that constant with a truncated Fourier series
so quasi-periodic fluctuation is absorbed instead of averaged away. Both are
estimated by linear least squares on the discretized balance equation

    (x0[t] + x0[t+1]) / 2 = lambda * z[t] + a0 + sum_n (a_n cos(n w t) + b_n sin(n w t))

over rows t = 2..n-1, where z[t] is the mean background of the accumulated
series. The fitted structural parameters, mapped through the analytic solution
of the forced first-order ODE, form the "grey guidance" feature vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hts import HTS, CumulativeSeries, accumulate, estimate_period, squeeze

LAMBDA_TOL = 1e-8  # below this |lambda| the constant offset -a0/lambda is meaningless


class FitError(RuntimeError):
    """Raised when a grey-model fit cannot be carried out."""


class RankDeficientError(FitError):
    """Least-squares design matrix is rank deficient."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class NearSingularLambdaError(FitError):
    """|lambda| too small for the constant particular term to be computed."""


@dataclass
class FSGMParams:
    lam: float
    a0: float
    an: np.ndarray  # cosine coefficients a_1..a_N
    bn: np.ndarray  # sine coefficients b_1..b_N
    omega: float
    order: int


@dataclass
class TimeResponse:
    """Coefficients of x1(t) = eta*e^(lam*t) + A0 + sum(An cos(n w t) + Bn sin(n w t))."""

    eta: float
    lam: float
    a0_coef: float  # A0
    an: np.ndarray  # A_1..A_N
    bn: np.ndarray  # B_1..B_N
    omega: float


@dataclass
class GreyGuidance:
    values: np.ndarray  # (eta, lambda, A0, A1, B1, A2, B2, A3, B3)
    degenerate: bool = False


@dataclass
class LeastSquaresSystem:
    y: np.ndarray  # length m = n-2
    z: np.ndarray  # m x (2N+2), columns [background, 1, cos(wt), sin(wt), ...]

    @property
    def m(self) -> int:
        return len(self.y)


def build_system(
    x0: HTS, x1: CumulativeSeries, omega: float, order: int
) -> LeastSquaresSystem:
    """Assemble Y and Z for rows t = 2..n-1 of the discretized balance equation."""
    x = np.asarray(x0.values, dtype=np.float64)
    c = np.asarray(x1.values, dtype=np.float64)
    n = len(x)
    if order < 0:
        raise ValueError("order must be >= 0")
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if n < 2 * order + 4:
        raise FitError(
            f"series too short for order {order}: n={n}, need n >= {2 * order + 4}"
        )
    # t runs 2..n-1; x0 is 0-based so x_t = x[t-1], x1_t = c[t-1]
    t = np.arange(2, n, dtype=np.float64)
    y = (x[1 : n - 1] + x[2:n]) / 2.0
    cols = [(c[1 : n - 1] + c[0 : n - 2]) / 2.0, np.ones(n - 2)]
    for k in range(1, order + 1):
        cols.append(np.cos(k * omega * t))
        cols.append(np.sin(k * omega * t))
    return LeastSquaresSystem(y=y, z=np.column_stack(cols))


def solve_ls(system: LeastSquaresSystem) -> np.ndarray:
    """Minimize ||Y - ZQ||_2 via an orthogonal factorization (SVD-backed lstsq)."""
    z, y = system.z, system.y
    q, _, rank, sv = np.linalg.lstsq(z, y, rcond=None)
    if rank < z.shape[1]:
        smallest = sv[-1] if len(sv) else 0.0
        cond = float(sv[0] / smallest) if smallest > 0 else math.inf
        raise RankDeficientError(
            f"design matrix rank {rank} < {z.shape[1]} columns "
            f"(condition estimate {cond:.3e})",
            condition=cond,
        )
    return q


def fit_gm11(x0: HTS) -> tuple[float, float]:
    """Classical GM(1,1): constant forcing, parameters (lambda, mu)."""
    x = np.asarray(x0.values, dtype=np.float64)
    n = len(x)
    if n < 4:
        raise FitError(f"series too short for GM(1,1): n={n}, need n >= 4")
    c = accumulate(x0).values
    y = (x[1 : n - 1] + x[2:n]) / 2.0
    z = np.column_stack([(c[1 : n - 1] + c[0 : n - 2]) / 2.0, np.ones(n - 2)])
    lam, mu = solve_ls(LeastSquaresSystem(y=y, z=z))
    return float(lam), float(mu)


def fit_fsgm(x0: HTS, order: int, omega: float | None = None) -> FSGMParams:
    """Fit the Fourier-forced model; omega defaults to the sign-change estimate."""
    if omega is None:
        omega = estimate_period(x0).omega
    system = build_system(x0, accumulate(x0), omega, order)
    q = solve_ls(system)
    return FSGMParams(
        lam=float(q[0]),
        a0=float(q[1]),
        an=q[2::2].copy(),
        bn=q[3::2].copy(),
        omega=float(omega),
        order=order,
    )


def particular_coeffs(
    params: FSGMParams,
    x1_initial: float,
    t1: float = 1.0,
    on_small_lambda: str = "raise",
) -> TimeResponse:
    """Map structural parameters to the analytic solution's coefficients.

    A0 = -a0/lambda; each (An, Bn) solves the 2x2 system obtained by
    substituting An*cos(n w t) + Bn*sin(n w t) into x' = lambda*x + forcing:

        lambda*An - n*w*Bn = -a_n
        n*w*An + lambda*Bn = -b_n

    eta pins the response to the accumulated series at t1 (x1_initial is
    x1(t1), normally the first accumulated value at t1 = 1).

    on_small_lambda: "raise" rejects |lambda| < LAMBDA_TOL; "zero-a0"
    substitutes A0 = 0 instead (degraded but finite response).
    """
    lam, omega = params.lam, params.omega
    if abs(lam) < LAMBDA_TOL:
        if on_small_lambda == "raise":
            raise NearSingularLambdaError(
                f"|lambda|={abs(lam):.3e} < {LAMBDA_TOL:g}; "
                "constant particular term -a0/lambda is near-singular"
            )
        a0_coef = 0.0
    else:
        a0_coef = -params.a0 / lam
    an = np.empty(params.order)
    bn = np.empty(params.order)
    for idx in range(params.order):
        k = idx + 1
        theta = k * omega
        det = lam * lam + theta * theta
        if det == 0.0:
            raise FitError(f"singular forcing at harmonic {k}: lambda^2 + (n*omega)^2 = 0")
        an[idx] = -(lam * params.an[idx] + theta * params.bn[idx]) / det
        bn[idx] = (theta * params.an[idx] - lam * params.bn[idx]) / det
    k = np.arange(1, params.order + 1)
    fourier_at_t1 = float(np.sum(an * np.cos(k * omega * t1) + bn * np.sin(k * omega * t1)))
    eta = math.exp(-lam * t1) * (x1_initial - a0_coef - fourier_at_t1)
    return TimeResponse(eta=eta, lam=lam, a0_coef=a0_coef, an=an, bn=bn, omega=omega)


def reconstruct(tr: TimeResponse, t) -> np.ndarray | float:
    """Evaluate the time-response function at scalar or array t."""
    t = np.asarray(t, dtype=np.float64)
    k = np.arange(1, len(tr.an) + 1, dtype=np.float64)
    phase = np.multiply.outer(t, k) * tr.omega
    fourier = np.cos(phase) @ tr.an + np.sin(phase) @ tr.bn
    out = tr.eta * np.exp(tr.lam * t) + tr.a0_coef + fourier
    return float(out) if out.ndim == 0 else out


def forcing(params_or_tr, t) -> np.ndarray | float:
    """Evaluate the Fourier forcing a0 + sum(a_n cos + b_n sin) at t.

    Accepts FSGMParams (uses a0, an, bn). For a TimeResponse, use the
    source FSGMParams instead: the response's An/Bn are not the forcing.
    """
    p = params_or_tr
    t = np.asarray(t, dtype=np.float64)
    k = np.arange(1, p.order + 1, dtype=np.float64)
    phase = np.multiply.outer(t, k) * p.omega
    out = p.a0 + np.cos(phase) @ p.an + np.sin(phase) @ p.bn
    return float(out) if out.ndim == 0 else out


def guidance_vector(
    x0: HTS,
    order: int = 3,
    omega: float | None = None,
    model: str = "fsgm",
) -> tuple[np.ndarray, bool]:
    """Fit a grey model and pack (eta, lambda, A0, A1, B1, ..., AN, BN).

    Width is always 2*order+3. model="gm" fits classical GM(1,1) and zero-pads
    the Fourier slots so widths stay comparable across model choices. Returns
    the vector and a degeneracy flag (set when |lambda| fell below tolerance
    and A0 was zeroed).
    """
    if model not in ("fsgm", "gm"):
        raise ValueError(f"unknown grey model '{model}'")
    x1_first = float(accumulate(x0).values[0])
    if model == "gm":
        lam, mu = fit_gm11(x0)
        params = FSGMParams(
            lam=lam, a0=mu, an=np.empty(0), bn=np.empty(0), omega=1.0, order=0
        )
    else:
        params = fit_fsgm(x0, order, omega=omega)
    degenerate = abs(params.lam) < LAMBDA_TOL
    tr = particular_coeffs(params, x1_first, on_small_lambda="zero-a0")
    values = np.empty(2 * order + 3)
    values[0] = tr.eta
    values[1] = tr.lam
    values[2] = tr.a0_coef
    values[3:] = 0.0
    for idx in range(len(tr.an)):
        values[3 + 2 * idx] = tr.an[idx]
        values[4 + 2 * idx] = tr.bn[idx]
    if not np.all(np.isfinite(values)):
        raise FitError("non-finite guidance vector")
    return values, degenerate


def grey_guidance(x0: HTS, omega: float | None = None) -> GreyGuidance:
    """Nine-element guidance at the pipeline's fixed Fourier order 3."""
    if x0.n < 10:
        raise FitError(f"series too short for guidance: n={x0.n}, need n >= 10")
    values, degenerate = guidance_vector(x0, order=3, omega=omega, model="fsgm")
    return GreyGuidance(values=values, degenerate=degenerate)


def extract_guidance(records, order: int = 3, model: str = "fsgm") -> dict:
    """Batch guidance keyed by record id.

    Falls back to the windowed omega (2*pi/n) and flags the record degenerate
    when the sign-change omega produces a rank-deficient Fourier design, which
    happens whenever some harmonic of 2*pi/T aliases to a constant or zero
    column on integer t (e.g. T in {1, 2, 3, 4, 6} with order 3).
    """
    out = {}
    for record in records:
        series = squeeze(record.embedding)
        try:
            values, degenerate = guidance_vector(series, order=order, model=model)
        except RankDeficientError:
            fallback = 2.0 * math.pi / series.n
            values, _ = guidance_vector(series, order=order, omega=fallback, model=model)
            degenerate = True
        out[record.id] = (values, degenerate)
    return out
