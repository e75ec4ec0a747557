"""Hopping design: generate chains whose transfer matrix has an
eigenvalue coalescence of any allowed order.

With t_1 = 1 fixing the energy scale, the allowed coalescence orders for
range n are every integer 2..n (realized at interior momenta, in +-k0
pairs) and every even integer up to 2n (realized at k = 0 or pi, where
all odd dispersion derivatives vanish identically).  Even orders at the
zone center or edge follow from a linear solve, because each condition
a_r(k0) = 0 is linear in the hoppings; interior orders need a damped
Newton iteration over (k0, t_2, ..).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .model import LatticeModel, dispersion_derivative
from . import critical

__all__ = [
    "DesignError",
    "DesignRequest",
    "DesignResult",
    "SampleOutcome",
    "allowed_orders",
    "design_even_ep",
    "design_odd_ep",
    "hypersurface_sample",
    "order_five_scan",
]

LOCATIONS = ("zone_center", "zone_edge", "interior")
# Default value for hoppings the constraints leave free.
FREE_DEFAULT = 0.1
# Newton settings for interior designs.
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
MULTISTART = 64
# Sweep range for free hoppings in hypersurface sampling.
SWEEP_RANGE = (0.05, 0.5)


class DesignError(RuntimeError):
    """No design satisfying the request was found.

    ``residual_trace`` holds the best residuals seen per Newton start
    when an interior search exhausts its multistarts.
    """

    def __init__(self, message, residual_trace=None):
        super().__init__(message)
        self.residual_trace = residual_trace


def allowed_orders(n: int) -> set:
    """Coalescence orders realizable with hopping range n:
    {2..n} plus the even integers in (n, 2n]."""
    if n < 1:
        raise ValueError("range must be >= 1")
    orders = set(range(2, n + 1))
    orders.update(p for p in range(n + 1, 2 * n + 1) if p % 2 == 0)
    return orders


@dataclass(frozen=True)
class DesignRequest:
    """Target order and location, plus values for unconstrained hoppings.

    ``free`` maps hopping indices (2..n) to fixed values; hoppings the
    constraints do not determine and the caller does not fix default to
    0.1.  t_1 = 1 always.
    """

    n: int
    order: int
    location: str
    free: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.location not in LOCATIONS:
            raise ValueError(f"location must be one of {LOCATIONS}")
        if self.order not in allowed_orders(self.n):
            raise ValueError(
                f"order {self.order} is not allowed for range {self.n}: "
                f"allowed orders are {sorted(allowed_orders(self.n))}"
            )
        if self.location == "interior":
            if self.order > self.n:
                raise ValueError(
                    f"order {self.order} > n = {self.n} can only occur at the "
                    "zone center or edge"
                )
        elif self.order % 2:
            raise ValueError("odd orders cannot occur at k = 0 or pi")
        for m in self.free:
            if not 2 <= int(m) <= self.n:
                raise ValueError(f"free hopping index {m} outside 2..{self.n}")


@dataclass(frozen=True)
class DesignResult:
    """A verified design: the model, the critical momentum and energy,
    the independently confirmed order, and |a_r(k0)| for r < order."""

    model: LatticeModel
    k0: float
    omega0: float
    achieved_order: int
    residuals: tuple

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "k0": self.k0,
            "omega0": self.omega0,
            "order": self.achieved_order,
            "residuals": list(self.residuals),
            "status": "ok",
        }


@dataclass(frozen=True)
class SampleOutcome:
    """Per-point status for hypersurface sampling."""

    status: str
    params: dict
    result: DesignResult | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"status": self.status, "params": self.params}
        if self.result is not None:
            out.update(self.result.to_dict())
        if self.detail:
            out["detail"] = self.detail
        return out


def _residuals(model: LatticeModel, k0: float, order: int) -> tuple:
    return tuple(
        abs(float(dispersion_derivative(model, k0, r).real)) for r in range(1, order)
    )


def _verify(model: LatticeModel, k0: float, order: int) -> DesignResult:
    """Independent confirmation through both detection routes."""
    cp = critical.classify(model, k0)
    if cp.order != order:
        raise DesignError(
            f"design verification failed: classification gives order {cp.order}, "
            f"requested {order} (free-parameter choice may be degenerate)"
        )
    eps = critical.ep_orders_at(model, cp.omega0)
    matched = any(
        e.order == order and abs(e.z0 - k0) < 1e-6 for e in eps
    )
    if not matched:
        raise DesignError(
            f"design verification failed: no order-{order} coalescence found at "
            f"k0={k0} among {eps}"
        )
    return DesignResult(
        model=model,
        k0=float(k0),
        omega0=cp.omega0,
        achieved_order=order,
        residuals=_residuals(model, k0, order),
    )


def _even_split(req: DesignRequest):
    """Solved and free hopping indices for an even-order zone design.

    The conditions a_r(k0) = 0, r = 2, 4, .., p-2 determine the lowest
    (p-2)/2 of t_2..t_n; the rest stay free.
    """
    n_solved = (req.order - 2) // 2
    solved = list(range(2, 2 + n_solved))
    free = [m for m in range(2, req.n + 1) if m not in solved]
    return solved, free


def design_even_ep(req: DesignRequest) -> DesignResult:
    """Even-order design at the zone center or edge by a linear solve.

    At k0 = 0 or pi each condition a_r(k0) = 0 reads
    sum_m s_m m^r t_m = 0 with s_m = 1 or (-1)^m, linear in the hoppings.
    For order 2n all n-1 hoppings are determined and the design point is
    unique.  Rejects odd orders and requests that pin a constrained
    hopping.
    """
    if req.location == "interior":
        raise ValueError("use design_odd_ep for interior locations")
    k0 = 0.0 if req.location == "zone_center" else math.pi
    sign = (lambda m: 1.0) if req.location == "zone_center" else (lambda m: (-1.0) ** m)
    solved, free = _even_split(req)
    for m in req.free:
        if int(m) in solved:
            raise DesignError(
                f"t_{m} is determined by the order-{req.order} constraints and "
                "cannot be fixed freely"
            )
    free_vals = {m: float(req.free.get(m, FREE_DEFAULT)) for m in free}

    orders_r = list(range(2, req.order, 2))
    t = np.zeros(req.n + 1)
    t[1] = 1.0
    for m, v in free_vals.items():
        t[m] = v
    if solved:
        a = np.array([[sign(m) * m**r for m in solved] for r in orders_r], dtype=float)
        b = np.array(
            [
                -sum(sign(m) * m**r * t[m] for m in range(1, req.n + 1) if m not in solved)
                for r in orders_r
            ],
            dtype=float,
        )
        try:
            sol = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise DesignError(f"singular constraint system: {exc}") from exc
        for m, v in zip(solved, sol):
            t[m] = v
    model = LatticeModel(tuple(t[1:]))
    return _verify(model, k0, req.order)


def _interior_split(req: DesignRequest):
    """For an interior order-p design the unknowns are (k0, t_2..t_{p-1});
    hoppings from t_p up stay free."""
    solved = list(range(2, req.order))
    free = [m for m in range(2, req.n + 1) if m not in solved]
    return solved, free


def design_odd_ep(req: DesignRequest, seed: int = 0) -> DesignResult:
    """Interior design (any order 2..n) by damped Newton from multistarts.

    Solves a_1(k0) = .. = a_{p-1}(k0) = 0 in the unknowns
    (k0, t_2, .., t_{p-1}); remaining hoppings are fixed by the request
    or default to 0.1.  Starts are low-discrepancy samples with k0 over
    (0, pi) and hoppings over [-1, 1]; converged solutions are verified
    by independent classification and merged deterministically (smaller
    residual first, ties broken preferring larger hopping values).
    Raises DesignError with the residual trace when no start converges,
    e.g. outside the feasibility window of the requested order.
    """
    if req.location != "interior":
        raise ValueError("design_odd_ep handles interior locations")
    solved, free = _interior_split(req)
    for m in req.free:
        if int(m) in solved:
            raise DesignError(
                f"t_{m} is an unknown of the order-{req.order} interior design "
                "and cannot be fixed freely"
            )
    p = req.order
    orders_r = list(range(1, p))
    dim = 1 + len(solved)

    base_t = np.zeros(req.n + 1)
    base_t[1] = 1.0
    for m in free:
        base_t[m] = float(req.free.get(m, FREE_DEFAULT))

    def residual_vec(k0: float, tsol: np.ndarray):
        t = base_t.copy()
        t[solved] = tsol
        model_t = t[1:]
        m_idx = np.arange(1, req.n + 1, dtype=float)
        vals = []
        for r in orders_r:
            vals.append(-2.0 * float(np.cos(r * math.pi / 2 + m_idx * k0) @ (model_t * m_idx**r)))
        return np.asarray(vals), t

    def jacobian(k0: float, tsol: np.ndarray):
        t = base_t.copy()
        t[solved] = tsol
        model_t = t[1:]
        m_idx = np.arange(1, req.n + 1, dtype=float)
        jac = np.zeros((len(orders_r), dim))
        for i, r in enumerate(orders_r):
            jac[i, 0] = -2.0 * float(
                np.cos((r + 1) * math.pi / 2 + m_idx * k0) @ (model_t * m_idx ** (r + 1))
            )
            for j, m in enumerate(solved):
                jac[i, 1 + j] = -2.0 * m**r * math.cos(r * math.pi / 2 + m * k0)
        return jac

    sampler = qmc.Halton(d=dim, seed=seed)
    starts = sampler.random(MULTISTART)
    solutions = []
    trace = []
    for u in starts:
        k0 = 1e-3 + (math.pi - 2e-3) * u[0]
        tsol = 2.0 * u[1:] - 1.0
        best = math.inf
        for _ in range(NEWTON_MAX_ITER):
            f, _t = residual_vec(k0, tsol)
            norm = float(np.max(np.abs(f)))
            best = min(best, norm)
            if norm <= NEWTON_TOL:
                break
            jac = jacobian(k0, tsol)
            try:
                step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            f2 = float(f @ f)
            while lam > 1e-6:
                k_new = k0 + lam * step[0]
                t_new = tsol + lam * step[1:]
                k_new = math.acos(max(-1.0, min(1.0, math.cos(k_new))))
                f_new, _ = residual_vec(k_new, t_new)
                if float(f_new @ f_new) < f2 * (1.0 - 0.25 * lam) + 1e-300:
                    k0, tsol = k_new, t_new
                    break
                lam /= 2.0
            else:
                break
        trace.append(best)
        f, t_full = residual_vec(k0, tsol)
        if float(np.max(np.abs(f))) > NEWTON_TOL:
            continue
        if math.sin(k0) < 1e-6 or not abs(math.cos(k0)) < 1.0 - 1e-9:
            continue  # collapsed onto the zone center/edge family
        if abs(t_full[-1]) < 1e-12:
            continue
        try:
            model = LatticeModel(tuple(t_full[1:]))
            result = _verify(model, k0, p)
        except (DesignError, ValueError):
            continue
        solutions.append(result)

    if not solutions:
        raise DesignError(
            f"no interior order-{p} design found after {MULTISTART} starts "
            f"(best residual {min(trace):.3e}); the requested free values may "
            "lie outside the feasibility window",
            residual_trace=sorted(trace),
        )

    dedup = {}
    for res in solutions:
        key = (round(res.k0, 9),) + tuple(round(v, 9) for v in res.model.hoppings)
        if key not in dedup:
            dedup[key] = res
    merged = sorted(
        dedup.values(),
        key=lambda r: (tuple(-v for v in r.model.hoppings), r.k0),
    )
    return merged[0]


def _design(req: DesignRequest, seed: int = 0) -> DesignResult:
    if req.location == "interior":
        return design_odd_ep(req, seed=seed)
    return design_even_ep(req)


def hypersurface_sample(
    n: int, order: int, location: str, count: int, seed: int = 0
) -> list:
    """Sample ``count`` points on the coalescence hypersurface.

    Free hoppings sweep [0.05, 0.5] (a line sweep for one free parameter,
    low-discrepancy points otherwise; the range keeps t_n away from 0).
    For order 2n nothing is free and the unique design point is returned
    once.  Each point is solved and re-verified; failures are reported
    per point rather than aborting the sweep.
    """
    probe = DesignRequest(n=n, order=order, location=location)
    if location == "interior":
        _, free = _interior_split(probe)
    else:
        _, free = _even_split(probe)
    if not free:
        outcome_params: dict = {}
        try:
            res = _design(probe, seed=seed)
            return [SampleOutcome(status="ok", params=outcome_params, result=res)]
        except DesignError as exc:
            return [SampleOutcome(status="no_solution", params=outcome_params, detail=str(exc))]

    lo, hi = SWEEP_RANGE
    if len(free) == 1:
        grid = np.linspace(lo, hi, count)[:, None]
    else:
        grid = qmc.scale(qmc.Halton(d=len(free), seed=seed).random(count), lo, hi)
    outcomes = []
    for row in grid:
        params = {m: float(v) for m, v in zip(free, row)}
        req = DesignRequest(n=n, order=order, location=location, free=params)
        try:
            res = _design(req, seed=seed)
            outcomes.append(SampleOutcome(status="ok", params=params, result=res))
        except DesignError as exc:
            outcomes.append(SampleOutcome(status="no_solution", params=params, detail=str(exc)))
    return outcomes


def order_five_scan(
    samples: int = 100_000,
    seed: int = 12345,
    box: float = 2.0,
    margin: float = 1e-3,
    iterations: int = 30,
) -> dict:
    """Randomized evidence scan: no interior 5th-order point for n = 3.

    Draws (t_2, t_3) over [-box, box]^2, seeds Gauss-Newton at the
    interior critical momenta and polishes (k, t_2, t_3) toward
    a_1 = a_2 = a_3 = a_4 = 0 with cos(k) confined to
    [-1 + margin, 1 - margin] (the conditions become solvable exactly on
    the boundary, where they reduce to the even zone-edge family, so the
    interior margin is what makes the residual floor meaningful).
    Reports the minimal max_r |a_r| over the whole scan; a floor well
    above zero is evidence, not proof, that order 5 is unrealizable.
    """
    rng = np.random.default_rng(seed)
    t2 = rng.uniform(-box, box, samples)
    t3 = rng.uniform(-box, box, samples)
    small = np.abs(t3) < 0.02
    t3[small] = np.where(t3[small] >= 0, 0.02, -0.02)

    k_lo = math.acos(1.0 - margin)
    k_hi = math.acos(-1.0 + margin)

    # Interior critical momenta: roots of 12 t3 x^2 + 4 t2 x + (1 - 3 t3).
    disc = (4 * t2) ** 2 - 4 * (12 * t3) * (1 - 3 * t3)
    sq = np.sqrt(np.clip(disc, 0.0, None))
    x1 = (-4 * t2 + sq) / (24 * t3)
    x2 = (-4 * t2 - sq) / (24 * t3)
    ks = []
    for x in (x1, x2):
        x_ok = np.where(disc >= 0, np.clip(x, -1 + margin, 1 - margin), 0.0)
        ks.append(np.arccos(x_ok))
    k = np.concatenate(ks)
    t2 = np.tile(t2, 2)
    t3 = np.tile(t3, 2)

    r_idx = np.arange(1, 5)[:, None]

    def a_r_all(k, t2, t3):
        # rows r = 1..4
        return -2.0 * (
            np.cos(r_idx * math.pi / 2 + k)
            + t2 * 2.0**r_idx * np.cos(r_idx * math.pi / 2 + 2 * k)
            + t3 * 3.0**r_idx * np.cos(r_idx * math.pi / 2 + 3 * k)
        )

    for _ in range(iterations):
        f = a_r_all(k, t2, t3)  # (4, M)
        r5 = np.arange(2, 6)[:, None]
        dk = -2.0 * (
            np.cos(r5 * math.pi / 2 + k)
            + t2 * 2.0 ** (r5 - 1) * 2.0 * np.cos(r5 * math.pi / 2 + 2 * k)
            + t3 * 3.0 ** (r5 - 1) * 3.0 * np.cos(r5 * math.pi / 2 + 3 * k)
        )
        dt2 = -2.0 * 2.0**r_idx * np.cos(r_idx * math.pi / 2 + 2 * k)
        dt3 = -2.0 * 3.0**r_idx * np.cos(r_idx * math.pi / 2 + 3 * k)
        jac = np.stack([dk, dt2, dt3], axis=-1)  # (4, M, 3)
        jac = np.moveaxis(jac, 1, 0)  # (M, 4, 3)
        rhs = -np.moveaxis(f, 1, 0)[:, :, None]  # (M, 4, 1)
        jtj = jac.transpose(0, 2, 1) @ jac + 1e-12 * np.eye(3)
        jtf = jac.transpose(0, 2, 1) @ rhs
        step = np.linalg.solve(jtj, jtf)[:, :, 0]  # (M, 3)
        norm = np.max(np.abs(step), axis=1)
        scale = np.minimum(1.0, 0.2 / np.maximum(norm, 1e-30))
        k = np.clip(k + scale * step[:, 0], k_lo, k_hi)
        t2 = np.clip(t2 + scale * step[:, 1], -box, box)
        t3 = np.clip(t3 + scale * step[:, 2], -box, box)

    resid = np.max(np.abs(a_r_all(k, t2, t3)), axis=0)
    best = int(np.argmin(resid))
    return {
        "samples": int(samples),
        "seed": int(seed),
        "box": float(box),
        "interior_margin": float(margin),
        "min_residual": float(resid[best]),
        "argmin": {"k0": float(k[best]), "t2": float(t2[best]), "t3": float(t3[best])},
        "threshold": 1e-3,
        "passed": bool(resid[best] > 1e-3),
        "note": "randomized evidence, not a proof",
    }
