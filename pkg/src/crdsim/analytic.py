"""Closed-form expected payoffs and class-based solvers.

Restricting every agent of a risk class to one class strategy turns the
N-player game into a 2-player game between the classes.  This module
computes exact expected payoffs for that game (binomial group configurations
weighted by the hypergeometric chance of each class composition), extracts
best-response curves and their intersections (class-based Nash points) on a
strategy grid, builds linear-utility welfare grids, and audits single-agent
deviations from a fixed population profile.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .game import GameParams, PayoffSpec, RiskClass, Utility

TAU_TIE = 1e-9    # absolute payoff tolerance for argmax ties
TAU_NASH = 1e-9   # max unilateral class improvement at a reported Nash point


@dataclass(frozen=True)
class StrategyProfile:
    pi_L: float
    pi_H: float

    def __post_init__(self):
        if not (0 <= self.pi_L <= 1 and 0 <= self.pi_H <= 1):
            raise ValueError(f"strategies outside [0,1]: {self}")

    def of(self, cls: RiskClass) -> float:
        return self.pi_L if cls is RiskClass.LOW else self.pi_H


@dataclass(frozen=True)
class GridSpec:
    epsilon: float = 0.001

    def __post_init__(self):
        n = 1.0 / self.epsilon
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"1/epsilon = {n} is not an integer")

    @property
    def size(self) -> int:
        return round(1.0 / self.epsilon) + 1

    @property
    def values(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.size)


# ---------------------------------------------------------------------------
# exact expected payoffs for the 2-class game


def _binom_pmf(n: int, k: int, q: float) -> float:
    return comb(n, k) * q**k * (1 - q) ** (n - k)


def config_prob(n_L: int, n_H: int, n_L_coop: int, n_H_coop: int,
                profile: StrategyProfile) -> float:
    """Probability of a given cooperator configuration among N-1 co-players."""
    if not (0 <= n_L_coop <= n_L and 0 <= n_H_coop <= n_H):
        raise ValueError(
            f"cooperator counts ({n_L_coop},{n_H_coop}) out of range for "
            f"class counts ({n_L},{n_H})"
        )
    return _binom_pmf(n_L, n_L_coop, profile.pi_L) * _binom_pmf(n_H, n_H_coop, profile.pi_H)


def target_prob(params: GameParams, n_L: int, profile: StrategyProfile,
                cooperates: bool) -> float:
    """P(group reaches the threshold | focal action), given n_L low-risk co-players.

    A focal cooperator needs only M-1 contributions from the other N-1
    members; a focal defector needs all M from them.
    """
    if not (0 <= n_L <= params.N - 1):
        raise ValueError(f"n_L={n_L} outside 0..{params.N - 1}")
    n_H = params.N - 1 - n_L
    need = params.M - 1 if cooperates else params.M
    total = 0.0
    for a in range(n_L + 1):
        for h in range(n_H + 1):
            if a + h >= need:
                total += config_prob(n_L, n_H, a, h, profile)
    return total


def success_prob(params: GameParams, cls: RiskClass, n_L: int,
                 profile: StrategyProfile, cooperates: bool) -> tuple[float, float]:
    """(P(no disaster | action), P(disaster | action)) for the focal agent."""
    r_cls = params.risk(cls)
    pt = target_prob(params, n_L, profile, cooperates)
    ps = pt + (1 - r_cls) * (1 - pt)
    return ps, 1 - ps


def class_payoff_given_composition(params: GameParams, spec: PayoffSpec,
                                   cls: RiskClass, n_L: int,
                                   profile: StrategyProfile) -> float:
    """Expected payoff of a focal class member in a known group composition."""
    pi_own = profile.of(cls)
    ps_c, pf_c = success_prob(params, cls, n_L, profile, cooperates=True)
    ps_d, pf_d = success_prob(params, cls, n_L, profile, cooperates=False)
    return pi_own * (ps_c * spec.x_C + pf_c * spec.x_C_fail) + (1 - pi_own) * (
        ps_d * spec.x_D + pf_d * spec.x_D_fail
    )


def composition_weights(params: GameParams, cls: RiskClass) -> np.ndarray:
    """Hypergeometric weights over n_L = 0..N-1 low-risk co-players.

    The focal agent is removed from its own class count, so the low-risk
    weight draws from Z_L - 1 low-risk agents and the high-risk weight from
    Z_H - 1 high-risk agents.
    """
    Z, N, Z_L = params.Z, params.N, params.Z_L
    denom = comb(Z - 1, N - 1)
    w = np.zeros(N)
    for n_L in range(N):
        n_H = N - 1 - n_L
        if cls is RiskClass.LOW:
            w[n_L] = comb(Z_L - 1, n_L) * comb(Z - Z_L, n_H) / denom
        else:
            w[n_L] = comb(Z_L, n_L) * comb(Z - Z_L - 1, n_H) / denom
    return w


def class_payoff(params: GameParams, spec: PayoffSpec, cls: RiskClass,
                 profile: StrategyProfile) -> float:
    """Expected payoff of a class member over random group compositions."""
    w = composition_weights(params, cls)
    return float(
        sum(
            w[n_L] * class_payoff_given_composition(params, spec, cls, n_L, profile)
            for n_L in range(params.N)
        )
    )


# ---------------------------------------------------------------------------
# vectorized payoff surfaces over a strategy grid


def payoff_grids(params: GameParams, spec: PayoffSpec,
                 grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expected payoff matrices (H_L, H_H) over the (pi_L, pi_H) grid.

    Returns (values, H_L, H_H) where both matrices are indexed
    [pi_L index, pi_H index].
    """
    vals = grid.values
    G = grid.size
    N, M = params.N, params.M
    w_L = composition_weights(params, RiskClass.LOW)
    w_H = composition_weights(params, RiskClass.HIGH)
    H_L = np.zeros((G, G))
    H_H = np.zeros((G, G))
    for n_L in range(N):
        n_H = N - 1 - n_L
        pmf_L = np.stack(
            [comb(n_L, a) * vals**a * (1 - vals) ** (n_L - a) for a in range(n_L + 1)],
            axis=1,
        )
        pmf_H = np.stack(
            [comb(n_H, h) * vals**h * (1 - vals) ** (n_H - h) for h in range(n_H + 1)],
            axis=1,
        )
        a_idx = np.arange(n_L + 1)[:, None]
        h_idx = np.arange(n_H + 1)[None, :]
        mask_D = (a_idx + h_idx >= M).astype(float)
        mask_C = (a_idx + h_idx >= M - 1).astype(float)
        Pt_D = pmf_L @ mask_D @ pmf_H.T    # [pi_L, pi_H]
        Pt_C = pmf_L @ mask_C @ pmf_H.T
        for cls, H, w in ((RiskClass.LOW, H_L, w_L), (RiskClass.HIGH, H_H, w_H)):
            r_cls = params.risk(cls)
            Ps_C = Pt_C + (1 - r_cls) * (1 - Pt_C)
            Ps_D = Pt_D + (1 - r_cls) * (1 - Pt_D)
            h_coop = Ps_C * spec.x_C + (1 - Ps_C) * spec.x_C_fail
            h_defe = Ps_D * spec.x_D + (1 - Ps_D) * spec.x_D_fail
            if cls is RiskClass.LOW:
                own = vals[:, None]
            else:
                own = vals[None, :]
            H += w[n_L] * (own * h_coop + (1 - own) * h_defe)
    return vals, H_L, H_H


@dataclass
class BestResponseCurve:
    risk_class: RiskClass
    opponent_values: np.ndarray
    response_sets: list[np.ndarray]   # own strategies within TAU_TIE of the max

    @property
    def response_min(self) -> np.ndarray:
        return np.array([s.min() for s in self.response_sets])

    @property
    def response_max(self) -> np.ndarray:
        return np.array([s.max() for s in self.response_sets])


def best_response_curves(
    params: GameParams,
    grid: GridSpec,
    spec: PayoffSpec | None = None,
    tau_tie: float = TAU_TIE,
) -> tuple[BestResponseCurve, BestResponseCurve]:
    """Grid best responses of each class to every opponent-class strategy."""
    spec = spec or PayoffSpec.log_utility(params)
    vals, H_L, H_H = payoff_grids(params, spec, grid)
    sets_L = [
        vals[H_L[:, j] >= H_L[:, j].max() - tau_tie] for j in range(grid.size)
    ]
    sets_H = [
        vals[H_H[i, :] >= H_H[i, :].max() - tau_tie] for i in range(grid.size)
    ]
    return (
        BestResponseCurve(RiskClass.LOW, vals, sets_L),
        BestResponseCurve(RiskClass.HIGH, vals, sets_H),
    )


# ---------------------------------------------------------------------------
# class-based Nash points


@dataclass(frozen=True)
class NashPoint:
    profile: StrategyProfile
    residual: float       # max unilateral class improvement at the point
    refined: bool = False


def _own_payoff_poly(params: GameParams, spec: PayoffSpec, cls: RiskClass,
                     opponent_value: float) -> np.polynomial.Polynomial:
    """Expected class payoff as an exact polynomial in the own strategy."""
    P = np.polynomial.Polynomial
    N, M = params.N, params.M
    r_cls = params.risk(cls)
    w = composition_weights(params, cls)
    total = P([0.0])
    x = P([0.0, 1.0])
    for n_L in range(N):
        n_H = N - 1 - n_L
        n_own, n_opp = (n_L, n_H) if cls is RiskClass.LOW else (n_H, n_L)
        # own-class co-player cooperator count distribution (polynomials in own pi)
        own_pmf = [
            comb(n_own, a) * x**a * (1 - x) ** (n_own - a) for a in range(n_own + 1)
        ]
        opp_pmf = [
            _binom_pmf(n_opp, h, opponent_value) for h in range(n_opp + 1)
        ]
        Pt_D = P([0.0])
        Pt_C = P([0.0])
        for a in range(n_own + 1):
            for h in range(n_opp + 1):
                if a + h >= M:
                    Pt_D = Pt_D + own_pmf[a] * opp_pmf[h]
                if a + h >= M - 1:
                    Pt_C = Pt_C + own_pmf[a] * opp_pmf[h]
        Ps_C = (1 - r_cls) + r_cls * Pt_C
        Ps_D = (1 - r_cls) + r_cls * Pt_D
        h_coop = Ps_C * spec.x_C + (1 - Ps_C) * spec.x_C_fail
        h_defe = Ps_D * spec.x_D + (1 - Ps_D) * spec.x_D_fail
        total = total + w[n_L] * (x * h_coop + (1 - x) * h_defe)
    return total


def _poly_argmax(poly: np.polynomial.Polynomial) -> tuple[float, float]:
    """(argmax, max) of a polynomial over [0, 1]."""
    candidates = [0.0, 1.0]
    roots = poly.deriv().roots()
    for z in roots:
        if abs(z.imag) < 1e-12 and 0.0 < z.real < 1.0:
            candidates.append(float(z.real))
    best = max(candidates, key=lambda v: poly(v))
    return best, float(poly(best))


def best_response_exact(params: GameParams, spec: PayoffSpec, cls: RiskClass,
                        opponent_value: float) -> tuple[float, float]:
    """Continuous best response of a class and the payoff it attains."""
    return _poly_argmax(_own_payoff_poly(params, spec, cls, opponent_value))


def _refine_nash(params: GameParams, spec: PayoffSpec, pi_L0: float, pi_H0: float,
                 window: float) -> tuple[float, float] | None:
    """Polish a grid Nash cell to a continuous best-response fixed point.

    Bisects g(pi_H) = BR_H(BR_L(pi_H)) - pi_H around the grid estimate; the
    grid value remains the fallback when no bracket exists.
    """

    def g(pi_H: float) -> float:
        br_L, _ = best_response_exact(params, spec, RiskClass.LOW, pi_H)
        br_H, _ = best_response_exact(params, spec, RiskClass.HIGH, br_L)
        return br_H - pi_H

    lo = hi = pi_H0
    g_lo = g_hi = g(pi_H0)
    for w in (window, 10 * window, 0.25, 1.0):
        lo, hi = max(0.0, pi_H0 - w), min(1.0, pi_H0 + w)
        g_lo, g_hi = g(lo), g(hi)
        if abs(g_lo) < 1e-13:
            return best_response_exact(params, spec, RiskClass.LOW, lo)[0], lo
        if abs(g_hi) < 1e-13:
            return best_response_exact(params, spec, RiskClass.LOW, hi)[0], hi
        if g_lo * g_hi <= 0:
            break
    else:
        return None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < 1e-13 or hi - lo < 1e-13:
            break
        if g_lo * g_mid <= 0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    pi_H = 0.5 * (lo + hi)
    pi_L = best_response_exact(params, spec, RiskClass.LOW, pi_H)[0]
    return pi_L, pi_H


def _nash_residual(params: GameParams, spec: PayoffSpec,
                   profile: StrategyProfile) -> float:
    res = 0.0
    for cls in (RiskClass.LOW, RiskClass.HIGH):
        _, best = best_response_exact(params, spec, cls, profile.of(
            RiskClass.HIGH if cls is RiskClass.LOW else RiskClass.LOW))
        res = max(res, best - class_payoff(params, spec, cls, profile))
    return res


def find_class_nash(
    params: GameParams,
    grid: GridSpec,
    spec: PayoffSpec | None = None,
    refine: bool = True,
    tau_tie: float = TAU_TIE,
    tau_nash: float = TAU_NASH,
) -> list[NashPoint]:
    """Grid cells where both classes play a best response, one point per cluster.

    Adjacent qualifying cells (the discrete trace of one curve crossing) are
    merged; each cluster is optionally refined to a continuous fixed point.
    An empty list is a valid outcome.
    """
    spec = spec or PayoffSpec.log_utility(params)
    vals, H_L, H_H = payoff_grids(params, spec, grid)
    col_max = H_L.max(axis=0)
    row_max = H_H.max(axis=1)
    joint = (col_max[None, :] - H_L <= tau_tie) & (row_max[:, None] - H_H <= tau_tie)
    cells = np.argwhere(joint)
    if len(cells) == 0:
        return []

    # cluster cells that are within a couple of grid steps of each other
    clusters: list[list[tuple[int, int]]] = []
    for i, j in sorted(map(tuple, cells)):
        for cluster in clusters:
            if any(abs(i - ci) <= 2 and abs(j - cj) <= 2 for ci, cj in cluster):
                cluster.append((i, j))
                break
        else:
            clusters.append([(i, j)])

    points = []
    for cluster in clusters:
        # representative: smallest joint shortfall from the two best responses
        i, j = min(
            cluster,
            key=lambda ij: max(col_max[ij[1]] - H_L[ij], row_max[ij[0]] - H_H[ij]),
        )
        pi_L, pi_H = float(vals[i]), float(vals[j])
        refined = False
        if refine:
            polished = _refine_nash(params, spec, pi_L, pi_H, window=5 * grid.epsilon)
            if polished is not None:
                pi_L, pi_H = polished
                refined = True
        profile = StrategyProfile(pi_L=pi_L, pi_H=pi_H)
        residual = _nash_residual(params, spec, profile)
        if residual <= tau_nash:
            points.append(NashPoint(profile=profile, residual=residual, refined=refined))
    return sorted(points, key=lambda pt: (pt.profile.pi_L, pt.profile.pi_H))


# ---------------------------------------------------------------------------
# welfare grid (linear utility)


@dataclass
class WelfareGrid:
    values: np.ndarray           # grid axis, shared by pi_L and pi_H
    welfare: np.ndarray          # [pi_L index, pi_H index], all <= 0
    argmax_cells: list[tuple[float, float]]
    max_welfare: float

    @property
    def argmax(self) -> tuple[float, float]:
        """Canonical maximizer: lexicographically smallest (pi_L, pi_H)."""
        return min(self.argmax_cells)


def welfare_grid(params: GameParams, grid: GridSpec,
                 tau_tie: float = TAU_TIE) -> WelfareGrid:
    """Population expected linear-utility welfare per class-strategy pair."""
    spec = PayoffSpec.linear_utility(params)
    vals, H_L, H_H = payoff_grids(params, spec, grid)
    z_H = params.z_H
    W = (1 - z_H) * H_L + z_H * H_H
    w_max = float(W.max())
    cells = np.argwhere(W >= w_max - tau_tie)
    argmax_cells = [(float(vals[i]), float(vals[j])) for i, j in cells]
    return WelfareGrid(values=vals, welfare=W, argmax_cells=argmax_cells,
                       max_welfare=w_max)


# ---------------------------------------------------------------------------
# single-agent deviation audit

_EXHAUSTIVE_LIMIT = 1_000_000
_AUDIT_SAMPLES = 100_000


@dataclass(frozen=True)
class AuditResult:
    delta: float              # E[payoff | pi_prime] - E[payoff | current pi]
    ci_low: float
    ci_high: float
    method: str               # "exhaustive" or "monte-carlo"
    expected_current: float
    expected_deviated: float


def _focal_payoff_terms(p_coop: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    """P(>= M) and P(>= M-1) cooperators among co-players, batched.

    p_coop is (S, N-1): cooperation probabilities of the N-1 co-players in
    each sampled/enumerated group; returns two (S,) arrays.
    """
    S, n = p_coop.shape
    dp = np.zeros((S, n + 1))
    dp[:, 0] = 1.0
    for j in range(n):
        pj = p_coop[:, j][:, None]
        new = dp * (1 - pj)
        new[:, 1:] += dp[:, :-1] * pj
        dp = new
    P_D = dp[:, M:].sum(axis=1) if M <= n else np.zeros(S)
    P_C = dp[:, max(M - 1, 0):].sum(axis=1) if M - 1 <= n else np.zeros(S)
    return P_D, P_C


def _expected_given_groups(strategy: float, P_D: np.ndarray, P_C: np.ndarray,
                           risk: float, spec: PayoffSpec) -> np.ndarray:
    Ps_C = P_C + (1 - risk) * (1 - P_C)
    Ps_D = P_D + (1 - risk) * (1 - P_D)
    h_coop = Ps_C * spec.x_C + (1 - Ps_C) * spec.x_C_fail
    h_defe = Ps_D * spec.x_D + (1 - Ps_D) * spec.x_D_fail
    return strategy * h_coop + (1 - strategy) * h_defe


def deviation_audit(
    pi: np.ndarray,
    params: GameParams,
    deviant_id: int,
    pi_prime: float,
    spec: PayoffSpec | None = None,
    seed: int = 0,
    samples: int = _AUDIT_SAMPLES,
) -> AuditResult:
    """Exact payoff gain for one agent deviating to pi_prime, others fixed.

    Disaster and co-player action randomness is integrated out exactly per
    group; group membership is enumerated exhaustively when feasible and
    Monte Carlo sampled (with a 95% CI on the delta) otherwise.
    """
    spec = spec or PayoffSpec.log_utility(params)
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (params.Z,):
        raise ValueError(f"expected {params.Z} strategies, got shape {pi.shape}")
    if not np.all((pi >= 0) & (pi <= 1)) or not (0 <= pi_prime <= 1):
        raise ValueError("strategies must lie in [0,1]")
    others = np.delete(np.arange(params.Z), deviant_id)
    risk = params.risk(params.class_of(deviant_id))
    current = float(pi[deviant_id])
    n_co = params.N - 1

    if comb(params.Z - 1, n_co) <= _EXHAUSTIVE_LIMIT:
        groups = np.array(list(itertools.combinations(others, n_co)))
        method = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        sel = np.argpartition(rng.random((samples, params.Z - 1)), n_co, axis=1)[:, :n_co]
        groups = others[sel]
        method = "monte-carlo"

    P_D, P_C = _focal_payoff_terms(pi[groups], params.M)
    e_cur = _expected_given_groups(current, P_D, P_C, risk, spec)
    e_dev = _expected_given_groups(pi_prime, P_D, P_C, risk, spec)
    d = e_dev - e_cur
    delta = float(d.mean())
    if method == "exhaustive":
        ci_low = ci_high = delta
    else:
        half = 1.96 * float(d.std(ddof=1)) / math.sqrt(len(d))
        ci_low, ci_high = delta - half, delta + half
    return AuditResult(
        delta=delta, ci_low=ci_low, ci_high=ci_high, method=method,
        expected_current=float(e_cur.mean()), expected_deviated=float(e_dev.mean()),
    )
