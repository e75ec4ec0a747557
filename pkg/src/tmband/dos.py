"""Density of states: counting recipe, near-singularity law, exponent fits.

The integrated density D(E) is the fraction of a fine uniform momentum
grid with eps(k) < E; the density nu(mu) is its fourth-order central
finite difference.  Near a critical point of order p the density follows

    nu(omega0 + delta) = A_p(k0) * delta^(-(p-1)/p)   (allowed side)

with A_p = (p-1)!/(pi |a_p|) * (|a_p|/p!)^((p-1)/p), plus a smooth
background 1/(pi |eps'(k)|) from every other simple real crossing at the
same energy.  ``fit_exponent`` recovers the power law from sampled
curves by a log-log least squares fit.

Evaluations at distinct energies are independent; nothing is cached
between calls.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import LatticeModel, band_extent, dispersion, dispersion_polynomial
from .critical import CriticalPoint, find_critical_points
from . import polyroots

__all__ = [
    "DosCurve",
    "integrated_dos",
    "dos_numeric",
    "dos_analytic_near_ep",
    "fit_exponent",
    "dos_curve",
    "dos_curve_near",
    "DEFAULT_K_STEP",
]

# Momentum grid spacing; 1e6 samples across the zone by default.
DEFAULT_K_STEP = 2.0 * math.pi * 1e-6
# Finite-difference step near singularities, as a fraction of bandwidth.
DEFAULT_E_STEP_FRAC = 1e-7
# Interior cap for the adaptive step used by dos_curve.
INTERIOR_E_STEP_FRAC = 1e-3
# Step-to-distance ratio for log-spaced near-singularity sampling.
NEAR_STEP_RATIO = 0.2


@dataclass(frozen=True)
class DosCurve:
    """Sampled density of states with the grid provenance that produced it.

    ``grid`` records k_step, fd_order (always 4) and e_step so a curve can
    be reproduced; ``critical_energies`` lists the band's singular
    energies for use by ``fit_exponent``.  Values are nonnegative up to
    the finite-difference noise floor; points whose stencil straddles a
    singularity carry its smeared weight (that keeps the integral of the
    curve at 1 across singular energies).
    """

    energies: np.ndarray
    values: np.ndarray
    grid: dict
    critical_energies: tuple


def _band_samples(model: LatticeModel, k_step: float):
    """Sorted dispersion samples on the uniform zone grid.

    The grid is k_j = -pi + j * dk, j = 1..N with dk = 2 pi / N and N the
    nearest integer to 2 pi / k_step, covering (-pi, pi] exactly once.
    """
    if k_step <= 0:
        raise ValueError("k_step must be positive")
    count = max(int(round(2.0 * math.pi / k_step)), 8)
    k = -math.pi + (2.0 * math.pi / count) * np.arange(1, count + 1)
    m = np.arange(1, model.n + 1)
    t = np.asarray(model.hoppings)
    eps = -2.0 * (np.cos(np.multiply.outer(k, m)) @ t)
    eps.sort()
    return eps


def integrated_dos(model: LatticeModel, energy: float, k_step: float = DEFAULT_K_STEP) -> float:
    """Integrated density D(E): fraction of zone momenta with eps(k) < E.

    Implements the plain counting recipe, number of grid points strictly
    below E times dk / (2 pi); ties count as outside.  0 below the band,
    1 above it.
    """
    eps = _band_samples(model, k_step)
    return float(np.searchsorted(eps, energy, side="left")) / len(eps)


def _stencil(sorted_eps: np.ndarray, mu, h):
    """Fourth-order central difference of the counting D at mu, step h."""
    mu = np.asarray(mu, dtype=float)
    h = np.asarray(h, dtype=float)
    count = len(sorted_eps)
    d = [
        np.searchsorted(sorted_eps, mu + s * h, side="left").astype(float) / count
        for s in (-2.0, -1.0, 1.0, 2.0)
    ]
    return (d[0] - 8.0 * d[1] + 8.0 * d[2] - d[3]) / (12.0 * h)


def dos_numeric(
    model: LatticeModel,
    mu: float,
    k_step: float = DEFAULT_K_STEP,
    e_step: float | None = None,
) -> float:
    """Density of states at mu by the 4th-order difference of D.

    When e_step is not given it adapts to the location: a quarter of the
    distance to the nearest critical energy, clipped between 1e-7 and
    1e-3 times the bandwidth, which keeps the stencil off the
    singularities while staying well above the counting resolution in the
    smooth interior.  Warns when mu lies within 2 * e_step of a critical
    energy, where the stencil straddles the singularity and returns its
    smeared weight instead of a pointwise value.
    """
    lo, hi = band_extent(model)
    width = hi - lo
    crit = [cp.omega0 for cp in find_critical_points(model)]
    if e_step is None:
        dist = min(abs(mu - wc) for wc in crit)
        e_step = float(
            np.clip(dist / 4.0, DEFAULT_E_STEP_FRAC * width, INTERIOR_E_STEP_FRAC * width)
        )
    if e_step <= 0:
        raise ValueError("e_step must be positive")
    if any(abs(mu - wc) < 2.0 * e_step for wc in crit):
        warnings.warn(
            f"stencil at mu={mu} straddles a critical energy",
            stacklevel=2,
        )
    eps = _band_samples(model, k_step)
    return float(_stencil(eps, mu, e_step))


def _background_slopes(model: LatticeModel, omega0: float):
    """|eps'(k)| at every simple real in-band crossing of omega0."""
    poly = dispersion_polynomial(model, omega0)
    slopes = []
    for x, mult in polyroots.cheb_roots_with_multiplicity(np.asarray(poly.cheb)):
        if mult != 1 or x.imag != 0.0:
            continue
        if abs(x.real) >= 1.0 - 1e-12:
            continue
        k = math.acos(x.real)
        a1 = float(2.0 * np.sin(k * np.arange(1, model.n + 1)) @ (
            np.asarray(model.hoppings) * np.arange(1, model.n + 1)
        ))
        if abs(a1) > 1e-12:
            slopes.append(abs(a1))
    return slopes


def dos_analytic_near_ep(
    model: LatticeModel, cp: CriticalPoint, delta: float, side: str
) -> float:
    """Leading analytic density A_p delta^(-(p-1)/p) plus smooth background.

    ``side`` is "above" or "below"; a minimum only diverges from above
    and a maximum only from below, and the inconsistent side is rejected.
    The background adds 1/(pi |eps'|) for each other simple real crossing
    at the critical energy (each +-k pair enters once).
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if cp.kind == "minimum" and side == "below":
        raise ValueError("a band minimum has no states below it")
    if cp.kind == "maximum" and side == "above":
        raise ValueError("a band maximum has no states above it")
    p = cp.order
    ap = abs(cp.leading)
    prefactor = math.factorial(p - 1) / (math.pi * ap) * (ap / math.factorial(p)) ** ((p - 1) / p)
    value = prefactor * delta ** (-(p - 1) / p)
    value += sum(1.0 / (math.pi * s) for s in _background_slopes(model, cp.omega0))
    return float(value)


def fit_exponent(curve: DosCurve, omega0: float, side: str, window) -> dict:
    """Power-law fit of log nu against log |omega - omega0|.

    Uses the curve samples on the requested side whose offset falls in
    ``window = (delta_min, delta_max)``; needs at least 8 positive
    samples and rejects windows that contain another critical energy.
    Returns {"exponent", "prefactor", "r2", "samples"}.
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    delta_min, delta_max = float(window[0]), float(window[1])
    if not 0 < delta_min < delta_max:
        raise ValueError("window must satisfy 0 < delta_min < delta_max")
    sign = 1.0 if side == "above" else -1.0
    for wc in curve.critical_energies:
        off = sign * (wc - omega0)
        if delta_min < off < delta_max:
            raise ValueError(
                f"window contains another critical energy at {wc}; shrink it"
            )
    delta = sign * (np.asarray(curve.energies) - omega0)
    mask = (delta >= delta_min) & (delta <= delta_max)
    vals = np.asarray(curve.values)[mask]
    delta = delta[mask]
    keep = vals > 0
    delta, vals = delta[keep], vals[keep]
    if len(vals) < 8:
        raise ValueError(f"only {len(vals)} usable samples in the fit window; need 8")
    logd = np.log(delta)
    logv = np.log(vals)
    slope, intercept = np.polyfit(logd, logv, 1)
    fitted = slope * logd + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {
        "exponent": float(slope),
        "prefactor": float(math.exp(intercept)),
        "r2": r2,
        "samples": int(len(vals)),
    }


def dos_curve(
    model: LatticeModel,
    num: int = 2000,
    k_step: float = DEFAULT_K_STEP,
    e_step: float | None = None,
) -> DosCurve:
    """Density of states across the whole band.

    The energy grid is ``num`` uniform samples padded a little beyond the
    band edges, refined geometrically toward every critical energy and
    crossed with a linear micro-grid through it, so the trapezoidal
    integral of the curve recovers the full unit weight including the
    divergent parts.  The difference step shrinks near the singular
    energies, e_step(omega) = clip(distance/4, e_step, 1e-3 * bandwidth).
    """
    lo, hi = band_extent(model)
    width = hi - lo
    h_min = DEFAULT_E_STEP_FRAC * width if e_step is None else float(e_step)
    h_cap = INTERIOR_E_STEP_FRAC * width
    crit = sorted({cp.omega0 for cp in find_critical_points(model)})

    points = [np.linspace(lo - 8 * h_min, hi + 8 * h_min, num)]
    for wc in crit:
        ladder = [4.0 * h_min]
        while ladder[-1] < width / 8.0:
            ladder.append(ladder[-1] * 1.25)
        ladder = np.asarray(ladder)
        micro = (h_min / 2.0) * np.arange(-12, 13)
        points.extend([wc + ladder, wc - ladder, wc + micro])
    energies = np.unique(np.concatenate(points))
    energies = energies[(energies >= lo - 8 * h_min) & (energies <= hi + 8 * h_min)]

    dist = np.min(np.abs(energies[:, None] - np.asarray(crit)[None, :]), axis=1)
    steps = np.clip(dist / 4.0, h_min, h_cap)
    eps = _band_samples(model, k_step)
    values = _stencil(eps, energies, steps)
    actual_k_step = 2.0 * math.pi / len(eps)
    return DosCurve(
        energies=energies,
        values=values,
        grid={
            "k_step": actual_k_step,
            "fd_order": 4,
            "e_step": h_min,
            "e_step_interior_cap": h_cap,
            "refined": True,
        },
        critical_energies=tuple(crit),
    )


def dos_curve_near(
    model: LatticeModel,
    omega0: float,
    side: str,
    window=(1e-6, 1e-3),
    num: int = 40,
    k_step: float = DEFAULT_K_STEP,
) -> DosCurve:
    """Log-spaced samples of nu at omega0 +- delta for exponent fitting.

    delta runs over ``num`` logarithmically spaced offsets spanning the
    window; the difference step scales with the offset
    (e_step = NEAR_STEP_RATIO * delta) so the stencil never straddles the
    singularity and truncation error stays a fixed small fraction.
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    delta_min, delta_max = float(window[0]), float(window[1])
    if not 0 < delta_min < delta_max:
        raise ValueError("window must satisfy 0 < delta_min < delta_max")
    sign = 1.0 if side == "above" else -1.0
    delta = np.geomspace(delta_min, delta_max, num)
    energies = omega0 + sign * delta
    steps = NEAR_STEP_RATIO * delta
    eps = _band_samples(model, k_step)
    values = _stencil(eps, energies, steps)
    order = np.argsort(energies)
    crit = sorted({cp.omega0 for cp in find_critical_points(model)})
    return DosCurve(
        energies=energies[order],
        values=values[order],
        grid={
            "k_step": 2.0 * math.pi / len(eps),
            "fd_order": 4,
            "e_step": float(steps.min()),
            "e_step_ratio": NEAR_STEP_RATIO,
        },
        critical_energies=tuple(crit),
    )
