"""Exact finite-size hop-count and delay distributions for line propagation.

Two independent routes to the same laws:

* a transform route: first-passage generating functions of the update-size
  chain, solved as linear systems over a truncated series ring, assembled
  into a master series whose coefficients are P[hops = m at size n] (or the
  delay moment generating function at size n);
* a dynamic-programming route over (nodes covered, last update size), used
  as the accuracy oracle.

Sizes n <= R take a single broadcast, so the hop law there is a point mass
and the delay is one timer draw, uniform on [eta, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import transition_matrix
from .series import TruncatedSeries, geometric

HOP_VAR = "hops"
NODE_VAR = "nodes"
TIME_VAR = "time"

PMF_TAIL_TOL = 1e-12


class TruncationInsufficientError(RuntimeError):
    """Requested coefficients are not all captured by the truncation order."""


# --- holding-time transform -------------------------------------------------


def step_moment(j: int, eta: float, r: int) -> float:
    """E[nu_j^r] for the holding time nu_j = eta + (1 - eta) * Beta(1, j)."""
    if j < 1:
        raise ValueError("state index must be >= 1")
    total = 0.0
    for q in range(r + 1):
        beta_q = math.factorial(q) * math.factorial(j) / math.factorial(q + j)
        total += math.comb(r, q) * eta ** (r - q) * (1.0 - eta) ** q * beta_q
    return total


def step_mgf(j: int, eta: float, s: float) -> float:
    """E[exp(s * nu_j)], evaluated through cancellation-free series.

    For lam = s * (1 - eta) >= 0 this is exp(s * eta) * j! * sum_q lam^q /
    (q + j)!; for lam < 0 the variable is reflected about 1 so all series
    terms stay positive.
    """
    if j < 1:
        raise ValueError("state index must be >= 1")
    lam = s * (1.0 - eta)
    if lam >= 0.0:
        term = 1.0
        total = 1.0
        q = 0
        while True:
            q += 1
            term *= lam / (q + j)
            total += term
            if term <= 1e-18 * total:
                break
        return math.exp(s * eta) * total
    mu = -lam
    term = 1.0 / j
    total = term
    q = 0
    while True:
        q += 1
        term = term * mu / q * (q - 1 + j) / (q + j)
        total += term
        if term <= 1e-18 * total:
            break
    return math.exp(s * eta + lam) * j * total


@dataclass(slots=True)
class StepTimeMGF:
    """Holding-time transform for one chain state: series and evaluator."""

    j: int
    eta: float
    order: int

    def series_coeffs(self) -> np.ndarray:
        """Power-series coefficients E[nu_j^r] / r! up to the configured order."""
        return np.array(
            [step_moment(self.j, self.eta, r) / math.factorial(r) for r in range(self.order + 1)]
        )

    def __call__(self, s: float) -> float:
        return step_mgf(self.j, self.eta, s)


# --- first-passage systems ---------------------------------------------------


@dataclass(slots=True)
class FirstPassageGF:
    """Transforms of (reward, elapsed) between first entrances to `target`.

    `table[i - 1]` is the transform starting from state i.  Hop mode tracks
    (nodes updated, steps taken); delay mode tracks (nodes updated, elapsed
    time) with the time axis holding moment-series coefficients.
    """

    R: int
    target: int
    mode: str
    table: list[TruncatedSeries]


def solve_hop_system(R: int, node_degree: int, step_degree: int) -> list[FirstPassageGF]:
    """First-passage transforms for every target state, hop mode.

    Fixed-point iteration: the t-th sweep accounts for all paths of at most
    t steps, and a path of t steps carries node degree >= t and step degree
    exactly t, so min(node_degree, step_degree) + 1 sweeps reach the exact
    truncated solution.
    """
    P = transition_matrix(R)
    variables = (NODE_VAR, HOP_VAR)
    degrees = (node_degree, step_degree)
    sweeps = min(node_degree, step_degree) + 1
    out = []
    for target in range(1, R + 1):
        base = [
            TruncatedSeries.monomial(variables, degrees, (target, 1), P[i - 1, target - 1])
            for i in range(1, R + 1)
        ]
        table = [TruncatedSeries.zeros(variables, degrees) for _ in range(R)]
        for _ in range(sweeps):
            table = [
                base[i] + _hop_step(P, i, target, table, variables, degrees)
                for i in range(R)
            ]
        out.append(FirstPassageGF(R=R, target=target, mode="hop", table=table))
    return out


def _hop_step(P, i, target, table, variables, degrees):
    acc = TruncatedSeries.zeros(variables, degrees)
    for k in range(1, P.shape[0] + 1):
        if k == target or P[i, k - 1] == 0.0:
            continue
        acc = acc + P[i, k - 1] * table[k - 1].shifted((k, 1))
    return acc


def solve_delay_system(R: int, eta: float, node_degree: int, order: int) -> list[FirstPassageGF]:
    """First-passage transforms in delay mode: one step from state i costs a
    factor of the holding-time transform of state i and z^k on arrival at k."""
    P = transition_matrix(R)
    variables = (NODE_VAR, TIME_VAR)
    degrees = (node_degree, order)
    mgf = []
    for i in range(1, R + 1):
        coeffs = np.zeros((node_degree + 1, order + 1))
        coeffs[0, :] = StepTimeMGF(i, eta, order).series_coeffs()
        mgf.append(TruncatedSeries(variables, coeffs))
    sweeps = node_degree + 1
    out = []
    for target in range(1, R + 1):
        base = [
            (P[i - 1, target - 1] * mgf[i - 1]).shifted((target, 0))
            for i in range(1, R + 1)
        ]
        table = [TruncatedSeries.zeros(variables, degrees) for _ in range(R)]
        for _ in range(sweeps):
            new = []
            for i in range(R):
                acc = base[i]
                for k in range(1, R + 1):
                    if k == target or P[i, k - 1] == 0.0:
                        continue
                    acc = acc + P[i, k - 1] * (mgf[i] * table[k - 1]).shifted((k, 0))
                new.append(acc)
            table = new
        out.append(FirstPassageGF(R=R, target=target, mode="delay", table=table))
    return out


# --- master series and extraction ---------------------------------------------


def hop_master_series(R: int, n_max: int, m_max: int) -> TruncatedSeries:
    """Series whose (m, n) coefficient is P[hop count = m at size n]."""
    systems = solve_hop_system(R, n_max, m_max)
    variables = (HOP_VAR, NODE_VAR)
    degrees = (m_max, n_max)
    bracket = TruncatedSeries.constant(1.0, variables, degrees)
    for fp in systems:
        first = fp.table[0].transposed()  # from state 1
        back = fp.table[fp.target - 1].transposed()
        bracket = bracket + first * geometric(back)
    ones_nodes = TruncatedSeries.zeros(variables, degrees)
    ones_nodes.coeffs[0, :] = 1.0  # 1 / (1 - z_nodes)
    shifted_mix = (ones_nodes * bracket).shifted((0, 1))
    master = shifted_mix.shifted((1, 0)) - shifted_mix + ones_nodes
    return master


def hop_pmf_table(R: int, n_max: int, m_max: int | None = None) -> np.ndarray:
    """Matrix [m, n] of exact hop-count probabilities for all n <= n_max."""
    if m_max is None:
        m_max = n_max
    master = hop_master_series(R, n_max, m_max)
    return master.coeffs


def hop_pmf_gf(R: int, n: int, m_max: int | None = None) -> np.ndarray:
    """Exact hop-count pmf at size n via the transform route.

    With the default truncation (hop degree n) the support is fully covered;
    an explicit, too-small m_max raises TruncationInsufficientError.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    explicit = m_max is not None
    if m_max is None:
        m_max = n
    pmf = hop_pmf_table(R, n, m_max)[:, n]
    tail = abs(1.0 - pmf.sum())
    if tail > PMF_TAIL_TOL:
        if explicit:
            raise TruncationInsufficientError(
                f"hop pmf tail mass {tail:.3e} exceeds {PMF_TAIL_TOL} at m_max={m_max}"
            )
        raise TruncationInsufficientError(
            f"hop pmf tail mass {tail:.3e} at full truncation m_max={m_max}; "
            "this indicates an internal error"
        )
    return pmf


def hop_pmf_dp(R: int, n: int) -> np.ndarray:
    """Exact hop-count pmf by forward dynamic programming (oracle).

    State: (nodes covered so far a < n, last update size u); from u the next
    update size is uniform on {R - u + 1, ..., R}; absorb once coverage
    reaches n.  Entry m of the result is P[hop count = m].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dist = np.zeros((n, R + 1))
    dist[0, 1] = 1.0  # one seed node, nothing covered yet
    pmf = [0.0]
    while dist.any():
        nxt = np.zeros_like(dist)
        absorbed = 0.0
        for u in range(1, R + 1):
            col = dist[:, u]
            if not col.any():
                continue
            w = 1.0 / u
            for up in range(R - u + 1, R + 1):
                # coverage a -> a + up; rows with a + up >= n absorb
                if up < n:
                    nxt[up:, up] += w * col[: n - up]
                absorbed += w * col[max(n - up, 0):].sum()
        pmf.append(absorbed)
        dist = nxt
    return np.array(pmf)


def delay_master_series(R: int, eta: float, n_max: int, order: int = 2) -> TruncatedSeries:
    """Series whose row n holds the delay moment series at size n."""
    systems = solve_delay_system(R, eta, n_max, order)
    variables = (NODE_VAR, TIME_VAR)
    degrees = (n_max, order)

    def mgf_embedded(j: int) -> TruncatedSeries:
        coeffs = np.zeros((n_max + 1, order + 1))
        coeffs[0, :] = StepTimeMGF(j, eta, order).series_coeffs()
        return TruncatedSeries(variables, coeffs)

    bracket = 1.0 - mgf_embedded(1)
    for fp in systems:
        first = fp.table[0]
        back = fp.table[fp.target - 1]
        bracket = bracket + (1.0 - mgf_embedded(fp.target)) * (first * geometric(back))
    geo = TruncatedSeries.zeros(variables, degrees)
    geo.coeffs[:, 0] = 1.0  # 1 / (1 - z_nodes)
    return geo - (geo * bracket).shifted((1, 0))


def delay_moments_gf(R: int, eta: float, n: int, order: int = 2) -> list[float]:
    """Exact raw delay moments [E[T], E[T^2], ...] at size n, transform route."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if order < 1:
        raise ValueError("order must be >= 1")
    master = delay_master_series(R, eta, n, order)
    row = master.coeffs[n, :]
    if abs(row[0] - 1.0) > 1e-9:
        raise TruncationInsufficientError(
            f"delay transform normalization drifted: M(0) = {row[0]!r} at n={n}"
        )
    return [row[r] * math.factorial(r) for r in range(1, order + 1)]


def delay_moments_dp(R: int, eta: float, n: int) -> tuple[float, float]:
    """Exact (mean, variance) of the delay at size n by forward DP (oracle).

    Carries per-state unnormalized first and second moments of elapsed time;
    each transition out of update-size u adds an independent holding time
    with moments E[nu_u], E[nu_u^2].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    e1 = np.array([0.0] + [step_moment(u, eta, 1) for u in range(1, R + 1)])
    e2 = np.array([0.0] + [step_moment(u, eta, 2) for u in range(1, R + 1)])
    prob = np.zeros((n, R + 1))
    m1 = np.zeros((n, R + 1))
    m2 = np.zeros((n, R + 1))
    prob[0, 1] = 1.0
    tot_p = tot_m1 = tot_m2 = 0.0
    while prob.any():
        n_prob = np.zeros_like(prob)
        n_m1 = np.zeros_like(m1)
        n_m2 = np.zeros_like(m2)
        for u in range(1, R + 1):
            p = prob[:, u]
            if not p.any():
                continue
            s1 = m1[:, u] + p * e1[u]
            s2 = m2[:, u] + 2.0 * e1[u] * m1[:, u] + p * e2[u]
            w = 1.0 / u
            for up in range(R - u + 1, R + 1):
                cut = max(n - up, 0)
                if up < n:
                    n_prob[up:, up] += w * p[:cut]
                    n_m1[up:, up] += w * s1[:cut]
                    n_m2[up:, up] += w * s2[:cut]
                tot_p += w * p[cut:].sum()
                tot_m1 += w * s1[cut:].sum()
                tot_m2 += w * s2[cut:].sum()
        prob, m1, m2 = n_prob, n_m1, n_m2
    mean = tot_m1 / tot_p
    return mean, tot_m2 / tot_p - mean * mean
