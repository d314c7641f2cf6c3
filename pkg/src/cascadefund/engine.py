"""Backward-induction threshold equilibria on a public-likelihood grid.

A game state is (L, B, n): public odds L of a good world, B investments
still needed, n players left to move.  The mover invests exactly when her
type clears a threshold x, and the threshold of a best reply solves

    G(x) = L * x/(1-x) - pi_0(L', B-1, n-1) / pi_1(L', B-1, n-1) = 0,

where L' are the public odds after an invest at threshold x and pi_w are
the child completion probabilities.  Completion probabilities follow the
recurrence

    pi_w(L, B, n) = (1 - F_w(x)) * pi_w(L', B-1, n-1) + F_w(x) * pi_w(L'', B, n-1)

with pi_w = 1 once B <= 0 and pi_w = 0 when B > n.  Multiple candidate
thresholds are ranked by the mover's expected utility; exact ties go to
the candidate a vanishing tremble favors (the discriminator), and a tie
there too marks the state irregular.

Tables are solved bottom-up in n on a log-odds grid wide enough to hold
every reachable state, with extra grid points pinned at the analytic
cascade bounds so the all-invest and all-decline plateaus are resolved
sharply.  Row queries interpolate linearly in log odds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from cascadefund.beliefs import (
    DomainError,
    OutOfSupportWarning,
    TypeDistribution,
)

__all__ = [
    "Candidate",
    "GameState",
    "LikelihoodGrid",
    "ModelViolationError",
    "PolicyRow",
    "PolicyTable",
    "RootSet",
    "SolverSettings",
    "backward_induction",
    "completion_prob",
    "discriminator",
    "expected_utility",
    "find_roots",
    "indifference_residual",
    "last_mover_threshold",
    "pi_ordering_scan",
    "select_equilibrium",
]

KIND_INTERIOR = "interior"
KIND_HERD_INVEST = "herd_invest"
KIND_HERD_DECLINE = "herd_decline"

MAX_PLAYERS = 50


class ModelViolationError(RuntimeError):
    """The solver produced or met a state violating a structural contract."""


@dataclass(frozen=True)
class GameState:
    """Public state: odds L, investments still needed B, players left n."""

    L: float
    B: int
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L) and self.L > 0):
            raise DomainError(f"need finite positive odds, got L={self.L}")
        if self.n < 0:
            raise DomainError("player count cannot be negative")


@dataclass(frozen=True)
class SolverSettings:
    grid_size: int = 2001
    scan_points: int = 4001
    root_xtol: float = 1e-12
    residual_tol: float = 1e-9
    tie_rel_tol: float = 1e-9
    grid_pad: float = 10.0
    # Candidates whose continuation multisets agree within this absolute
    # spread are treated as the same equilibrium outcome (B = n rows).
    multiset_tol: float = 1e-5
    chunk: int = 512

    def __post_init__(self) -> None:
        if self.grid_size < 16 or self.scan_points < 16:
            raise DomainError("grid_size and scan_points must be at least 16")
        if self.grid_pad <= 1.0:
            raise DomainError("grid_pad must exceed 1")


class LikelihoodGrid:
    """Strictly increasing positive odds points, uniform in log odds."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("grid needs at least two points")
        if np.any(~np.isfinite(pts)) or np.any(pts <= 0) or np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be finite, positive, increasing")
        self.points = pts
        self.log_points = np.log(pts)

    @classmethod
    def spanning(cls, Q: float, B0: int, size: int = 2001, pad: float = 10.0):
        """Grid covering every state reachable from odds inside the bounds."""
        lo = ((1.0 - Q) / Q) ** B0 / pad
        hi = pad * Q / (1.0 - Q)
        return cls(np.exp(np.linspace(math.log(lo), math.log(hi), size)))

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])


@dataclass(frozen=True)
class Candidate:
    """One best-reply threshold candidate at a state."""

    x: float
    kind: str
    utility: float
    residual: float
    discriminator: float = math.nan


@dataclass(frozen=True)
class RootSet:
    state: GameState
    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ModelViolationError(f"no candidate thresholds at {self.state}")


def last_mover_threshold(L):
    """Threshold of a pivotal last mover: invest iff private odds favor good."""
    La = np.asarray(L, dtype=float)
    if np.any(~np.isfinite(La)) or np.any(La <= 0):
        raise DomainError("likelihood must be finite and positive")
    out = 1.0 / (1.0 + La)
    return float(out) if out.ndim == 0 else out


class PolicyRow:
    """Solved thresholds and completion probabilities for one (B, n)."""

    def __init__(self, B, n, L, sigma, pi0, pi1, irregular, Q):
        self.B = B
        self.n = n
        self.L = L
        self.logL = np.log(L)
        self.sigma = sigma
        self.pi0 = pi0
        self.pi1 = pi1
        self.irregular = irregular
        self.Q = Q
        self.up_bound = Q / (1.0 - Q)
        dead = np.nonzero(pi1 == 0.0)[0]
        # Highest stored odds with zero completion chance; queries at or
        # below it are dead states.  The solver places a grid point at the
        # analytic bound, so this frontier is sharp.
        self.dead_frontier = float(L[dead[-1]]) if dead.size else None
        live = pi1 > 0.0
        self._live_logL = self.logL[live]
        self._live_logratio = np.log(np.maximum(pi0[live], 1e-300) / pi1[live])
        self._live_pi0 = pi0[live]
        self._live_pi1 = pi1[live]

    def _warn_if_outside(self, La) -> None:
        # Clamping is exact inside the plateaus (at or above the up-cascade
        # bound, at or below the dead frontier); only a live query outside
        # the stored span can be distorted, so only that warns.
        above = (La > self.L[-1] * (1 + 1e-12)) & (La < self.up_bound)
        below = La < self.L[0] * (1 - 1e-12)
        if self.dead_frontier is not None:
            below &= La > self.dead_frontier
        if np.any(above) or np.any(below):
            warnings.warn(
                f"live odds query outside the solved grid for row (B={self.B}, "
                f"n={self.n}) was clamped",
                OutOfSupportWarning,
                stacklevel=3,
            )

    def sigma_at(self, L):
        La = np.asarray(L, dtype=float)
        self._warn_if_outside(La)
        out = np.interp(np.log(La), self.logL, self.sigma)
        return float(out) if out.ndim == 0 else out

    def pi_at(self, L):
        La = np.asarray(L, dtype=float)
        self._warn_if_outside(La)
        logq = np.log(La)
        p0 = np.interp(logq, self.logL, self.pi0)
        p1 = np.interp(logq, self.logL, self.pi1)
        up = La >= self.up_bound
        p0 = np.where(up, 1.0, p0)
        p1 = np.where(up, 1.0, p1)
        if p0.ndim == 0:
            return float(p0), float(p1)
        return p0, p1

    def ratio_at(self, L):
        """Completion-odds ratio pi0/pi1; +inf where completion is impossible."""
        La = np.asarray(L, dtype=float)
        self._warn_if_outside(La)
        out = np.exp(np.interp(np.log(La), self._live_logL, self._live_logratio))
        out = np.where(La >= self.up_bound, 1.0, out)
        if self.dead_frontier is not None:
            out = np.where(La <= self.dead_frontier, np.inf, out)
        return float(out) if out.ndim == 0 else out

    def irregular_at(self, L):
        La = np.asarray(L, dtype=float)
        idx = np.clip(
            np.searchsorted(self.logL, np.log(La)), 0, len(self.logL) - 1
        )
        out = self.irregular[idx]
        return bool(out) if out.ndim == 0 else out


class _ChildView:
    """Uniform query surface over solved rows and terminal cases.

    A sole remaining pivotal mover ("last") is evaluated in closed form
    rather than from a stored row: the threshold is 1/(1+L) clipped to the
    support and completion is the tail mass above it, so parents of that
    state carry no interpolation error.
    """

    def __init__(self, kind: str, row: PolicyRow | None = None, dist=None):
        if kind not in ("row", "won", "dead", "last"):
            raise ValueError(kind)
        self.kind = kind
        self.row = row
        self.dist = dist

    def _last_pi(self, La):
        s = np.clip(1.0 / (1.0 + La), self.dist.lo, self.dist.hi)
        return np.asarray(self.dist.sf(0, s), dtype=float), np.asarray(
            self.dist.sf(1, s), dtype=float
        )

    def ratio(self, L):
        La = np.asarray(L, dtype=float)
        if self.kind == "won":
            out = np.ones_like(La)
        elif self.kind == "dead":
            out = np.full_like(La, np.inf)
        elif self.kind == "last":
            p0, p1 = self._last_pi(La)
            out = np.divide(
                p0, p1, out=np.full_like(p1, np.inf), where=p1 > 0.0
            )
        else:
            out = self.row.ratio_at(La)
        return float(out) if np.ndim(out) == 0 else out

    def pi(self, L):
        La = np.asarray(L, dtype=float)
        if self.kind == "won":
            z = np.ones_like(La)
            return (z, z.copy()) if La.ndim else (1.0, 1.0)
        if self.kind == "dead":
            z = np.zeros_like(La)
            return (z, z.copy()) if La.ndim else (0.0, 0.0)
        if self.kind == "last":
            p0, p1 = self._last_pi(La)
            if La.ndim == 0:
                return float(p0), float(p1)
            return p0, p1
        return self.row.pi_at(La)

    def irregular(self, L):
        if self.kind != "row":
            La = np.asarray(L)
            out = np.zeros(La.shape, dtype=bool)
            return bool(out) if La.ndim == 0 else out
        return self.row.irregular_at(L)


def _g_raw(dist: TypeDistribution, inv_view: _ChildView, L, x):
    """Indifference gap at threshold x; NaN where the invest child is dead."""
    La = np.asarray(L, dtype=float)
    xa = np.asarray(x, dtype=float)
    r = inv_view.ratio(La * dist.lr_upper_tail(xa))
    ra = np.asarray(r, dtype=float)
    out = np.where(np.isfinite(ra), La * xa / (1.0 - xa) - ra, np.nan)
    return out


def _bisect_roots(dist, inv_view, bL, lo, hi, glo_pos, xtol):
    """Vectorized bisection on pre-found sign-change brackets."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(80):
        if np.max(hi - lo) <= xtol:
            break
        mid = 0.5 * (lo + hi)
        gm = _g_raw(dist, inv_view, bL, mid)
        if np.any(np.isnan(gm)):
            raise ModelViolationError("indifference gap undefined inside a bracket")
        go_right = (gm > 0.0) == glo_pos
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def _scan_candidates(dist, inv_view, Lpts, settings):
    """Interior roots plus playable herd thresholds for each odds point."""
    Q = dist.Q
    up = Q / (1.0 - Q)
    xs = np.linspace(1.0 - Q, Q, settings.scan_points)
    uxs = dist.lr_upper_tail(xs)
    lhs = xs / (1.0 - xs)

    M = len(Lpts)
    roots: list[list[float]] = [[] for _ in range(M)]
    all_bL, all_lo, all_hi, all_state, all_glo_pos = [], [], [], [], []
    for start in range(0, M, settings.chunk):
        Lc = Lpts[start : start + settings.chunk]
        r = inv_view.ratio(Lc[:, None] * uxs[None, :])
        G = np.where(np.isfinite(r), Lc[:, None] * lhs[None, :] - r, np.nan)
        a, b = G[:, :-1], G[:, 1:]
        flip = (a * b < 0.0) & np.isfinite(a) & np.isfinite(b)
        ci, j = np.nonzero(flip)
        all_bL.append(Lc[ci])
        all_lo.append(xs[j])
        all_hi.append(xs[j + 1])
        all_state.append(ci + start)
        all_glo_pos.append(a[ci, j] > 0.0)
        zi, zj = np.nonzero(a == 0.0)
        for s, jj in zip(zi, zj):
            if jj > 0:  # x = 1-Q is handled as a herd candidate, not a root
                roots[s + start].append(float(xs[jj]))

    if all_bL and sum(len(v) for v in all_bL):
        bL = np.concatenate(all_bL)
        xr = _bisect_roots(
            dist,
            inv_view,
            bL,
            np.concatenate(all_lo),
            np.concatenate(all_hi),
            np.concatenate(all_glo_pos),
            settings.root_xtol,
        )
        for s, x in zip(np.concatenate(all_state), xr):
            roots[int(s)].append(float(x))

    # Herd thresholds.  Investing for every type keeps odds at L, so it is
    # playable when the worst type still clears the child ratio; declining
    # for every type is playable when the best type cannot clear it (or the
    # invest child is dead outright).
    # One-ulp slack keeps states exactly at a cascade bound on the herd side.
    r_at_L = np.asarray(inv_view.ratio(Lpts), dtype=float)
    herd_inv = np.isfinite(r_at_L) & (Lpts * (1.0 - Q) / Q >= r_at_L * (1.0 - 1e-15))
    r_at_up = np.asarray(inv_view.ratio(Lpts * up), dtype=float)
    herd_dec = ~np.isfinite(r_at_up) | (Lpts * up <= r_at_up * (1.0 + 1e-15))

    cands: list[list[tuple[float, str]]] = []
    for s in range(M):
        got: list[tuple[float, str]] = []
        if herd_inv[s]:
            got.append((1.0 - Q, KIND_HERD_INVEST))
        for x in sorted(roots[s]):
            if got and abs(x - got[-1][0]) <= 1e-9:
                continue
            if herd_dec[s] and abs(x - Q) <= 1e-9:
                continue
            got.append((x, KIND_INTERIOR))
        if herd_dec[s]:
            got.append((Q, KIND_HERD_DECLINE))
        if not got:
            x = _rescue_root(dist, inv_view, float(Lpts[s]), settings)
            got.append((x, KIND_INTERIOR))
        cands.append(got)
    return cands


def _rescue_root(dist, inv_view, L, settings):
    """Locate the root when the playable-invest window is sub-scan-width.

    Just above a dead frontier only thresholds within a vanishing band
    below Q keep the invest child alive, so the coarse scan sees at most
    one finite G value and finds no bracket even though a root exists.
    """
    Q = dist.Q
    lo, hi = 1.0 - Q, Q
    g_lo = _g_raw(dist, inv_view, L, lo)
    if math.isnan(float(np.asarray(g_lo))):
        # Bisect for the lowest threshold whose invest child is alive.
        a, b = lo, hi
        for _ in range(200):
            m = 0.5 * (a + b)
            if math.isnan(float(np.asarray(_g_raw(dist, inv_view, L, m)))):
                a = m
            else:
                b = m
            if b - a <= settings.root_xtol / 4:
                break
        lo = b
        g_lo = _g_raw(dist, inv_view, L, lo)
    g_lo = float(np.asarray(g_lo))
    g_hi = float(np.asarray(_g_raw(dist, inv_view, L, hi)))
    if math.isnan(g_lo) or math.isnan(g_hi):
        raise ModelViolationError(f"no playable threshold window at L={L!r}")
    if g_lo >= 0.0:
        # Every playable type prefers investing: the window edge is the reply.
        return lo
    if g_hi <= 0.0:
        raise ModelViolationError(
            f"herd-decline condition missed by the scan at L={L!r}"
        )
    root = _bisect_roots(
        dist,
        inv_view,
        np.array([L]),
        np.array([lo]),
        np.array([hi]),
        np.array([g_lo > 0.0]),
        settings.root_xtol,
    )
    return float(root[0])


def _trace_signatures(rows, dist, xflat, Lp_flat, n):
    """Continuation multiset for each candidate of a B = n row."""
    F = len(xflat)
    sig = np.empty((F, n))
    sig[:, 0] = xflat
    Lc = Lp_flat.copy()
    for col, m in enumerate(range(n - 1, 0, -1), start=1):
        xm = rows[(m, m)].sigma_at(Lc)
        sig[:, col] = xm
        Lc = Lc * dist.lr_upper_tail(xm)
    return np.sort(sig, axis=1)


def _select_one(xs, kinds, U, L, T1, T0, p0c, p1c, sigs, settings):
    """Pick the equilibrium index among one state's candidates.

    Returns (index, tie_irregular).  Candidates with matching continuation
    multisets (sigs rows) are one outcome: their utilities agree by theory,
    so the comparison across groups uses the group max, and the trembling
    discriminator ranks candidates inside the surviving pool.
    """
    k = len(xs)
    if k == 1:
        return 0, False
    idx = list(range(k))
    groups: list[list[int]] = []
    if sigs is not None:
        for i in idx:
            for g in groups:
                if np.max(np.abs(sigs[i] - sigs[g[0]])) <= settings.multiset_tol:
                    g.append(i)
                    break
            else:
                groups.append([i])
    else:
        groups = [[i] for i in idx]

    gU = [max(U[i] for i in g) for g in groups]
    best = max(gU)
    tie_tol = settings.tie_rel_tol * max(1.0, abs(best))
    pool: list[int] = []
    for g, u in zip(groups, gU):
        if best - u <= tie_tol:
            pool.extend(g)
    if len(pool) == 1:
        return pool[0], False

    # Discriminator: payoff of candidate i's continuation against the
    # toughest rival threshold among the tied pool.
    D = np.full(k, -np.inf)
    for i in pool:
        vals = [
            L * p1c[i] * T1[j] - p0c[i] * T0[j] for j in pool if j != i
        ]
        D[i] = max(vals)
    order = sorted(pool, key=lambda i: (-D[i], xs[i]))
    top = order[0]
    tie_irregular = False
    if len(order) > 1:
        second = order[1]
        d_tol = settings.tie_rel_tol * max(1.0, abs(D[top]))
        if D[top] - D[second] <= d_tol and abs(xs[top] - xs[second]) > 1e-9:
            tie_irregular = True
    return top, tie_irregular


def _solve_row(dist, B, n, Lpts, inv_view, dec_view, settings, rows):
    Q = dist.Q
    cands = _scan_candidates(dist, inv_view, Lpts, settings)

    counts = np.array([len(c) for c in cands])
    state_ix = np.repeat(np.arange(len(Lpts)), counts)
    xflat = np.array([x for per in cands for x, _ in per])
    kflat = [kind for per in cands for _, kind in per]
    Lflat = Lpts[state_ix]

    T1 = dist.sf(1, xflat)
    T0 = dist.sf(0, xflat)
    F1 = dist.cdf(1, xflat)
    F0 = dist.cdf(0, xflat)
    Lp = Lflat * dist.lr_upper_tail(xflat)
    p0c, p1c = inv_view.pi(Lp)
    lam = Lflat / (1.0 + Lflat)
    U = lam * T1 * p1c - (1.0 - lam) * T0 * p0c

    sigs = None
    if B == n and n >= 2:
        sigs = _trace_signatures(rows, dist, xflat, Lp, n)

    M = len(Lpts)
    sigma = np.empty(M)
    pi0 = np.empty(M)
    pi1 = np.empty(M)
    irregular = np.zeros(M, dtype=bool)
    sel_flat = np.empty(M, dtype=int)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    for s in range(M):
        lo, hi = offsets[s], offsets[s + 1]
        local, tie_irr = _select_one(
            xflat[lo:hi],
            kflat[lo:hi],
            U[lo:hi],
            Lpts[s],
            T1[lo:hi],
            T0[lo:hi],
            p0c[lo:hi],
            p1c[lo:hi],
            None if sigs is None else sigs[lo:hi],
            settings,
        )
        sel_flat[s] = lo + local
        irregular[s] = tie_irr

    sel = sel_flat
    sigma[:] = xflat[sel]
    Lm = Lpts * dist.lr_lower_tail(sigma)
    p0m, p1m = dec_view.pi(Lm)
    pi0[:] = T0[sel] * p0c[sel] + F0[sel] * p0m
    pi1[:] = T1[sel] * p1c[sel] + F1[sel] * p1m

    reaches_child = (T0[sel] + T1[sel]) > 0.0
    reaches_decline = (F0[sel] + F1[sel]) > 0.0
    irregular |= reaches_child & np.asarray(inv_view.irregular(Lp[sel]))
    irregular |= reaches_decline & np.asarray(dec_view.irregular(Lm))

    interior = np.array([k == KIND_INTERIOR for k in np.asarray(kflat, dtype=object)[sel]])
    if np.any(interior):
        res = _g_raw(dist, inv_view, Lpts[interior], sigma[interior])
        scale = np.maximum(1.0, Lpts[interior])
        if np.any(~(np.abs(res) <= settings.residual_tol * scale)):
            worst = float(np.nanmax(np.abs(res) / scale))
            raise ModelViolationError(
                f"interior root residual {worst:.3e} exceeds tolerance on row "
                f"(B={B}, n={n})"
            )

    return PolicyRow(B, n, Lpts, sigma, pi0, pi1, irregular, Q)


class PolicyTable:
    """Solved policy rows for every (B, n) reachable from (B0, n0).

    Queries outside stored rows use the terminal conventions: B <= 0 means
    the drive has already filled, so movers bet on private beliefs alone
    (sigma = 1/(1+L), pi = 1); B > n means the drive cannot fill, nobody
    invests (sigma = Q, pi = 0).
    """

    def __init__(self, dist, grid, settings, rows, B0, n0):
        self.dist = dist
        self.grid = grid
        self.settings = settings
        self.rows = rows
        self.B0 = B0
        self.n0 = n0

    @property
    def Q(self) -> float:
        return self.dist.Q

    def row(self, B: int, n: int) -> PolicyRow:
        try:
            return self.rows[(B, n)]
        except KeyError:
            raise ModelViolationError(f"row (B={B}, n={n}) is not in the table") from None

    def _dispatch(self, L, B, n, on_won, on_dead, on_row):
        if B <= 0:
            return on_won(L)
        if B > n:
            return on_dead(L)
        return on_row(self.row(B, n), L)

    def sigma(self, L, B: int, n: int):
        La = np.asarray(L, dtype=float)
        if B <= 0 or (B == 1 and n >= 1):
            # Needing at most one more investment decouples the player from
            # the future: declining pays zero regardless, so invest iff the
            # full posterior favors the good world.  Exact, no grid error.
            out = np.clip(1.0 / (1.0 + La), self.dist.lo, self.dist.hi)
            return float(out) if np.ndim(out) == 0 else out
        out = self._dispatch(
            La,
            B,
            n,
            lambda v: np.clip(1.0 / (1.0 + v), self.dist.lo, self.dist.hi),
            lambda v: np.full_like(v, self.Q),
            lambda row, v: np.asarray(row.sigma_at(v)),
        )
        return float(out) if np.ndim(out) == 0 else out

    def pi(self, L, B: int, n: int):
        La = np.asarray(L, dtype=float)
        scalar = La.ndim == 0

        def won(v):
            z = np.ones_like(v)
            return z, z.copy()

        def dead(v):
            z = np.zeros_like(v)
            return z, z.copy()

        p0, p1 = self._dispatch(
            La, B, n, won, dead, lambda row, v: row.pi_at(v)
        )
        if scalar:
            return float(np.asarray(p0)), float(np.asarray(p1))
        return np.asarray(p0), np.asarray(p1)

    def ratio(self, L, B: int, n: int):
        La = np.asarray(L, dtype=float)
        out = self._dispatch(
            La,
            B,
            n,
            lambda v: np.ones_like(v),
            lambda v: np.full_like(v, np.inf),
            lambda row, v: np.asarray(row.ratio_at(v)),
        )
        return float(out) if np.ndim(out) == 0 else out

    def irregular_at(self, L, B: int, n: int):
        La = np.asarray(L, dtype=float)
        out = self._dispatch(
            La,
            B,
            n,
            lambda v: np.zeros(v.shape, dtype=bool),
            lambda v: np.zeros(v.shape, dtype=bool),
            lambda row, v: np.asarray(row.irregular_at(v)),
        )
        return bool(out) if np.ndim(out) == 0 else out

    def child_views(self, B: int, n: int) -> tuple[_ChildView, _ChildView]:
        """Invest child (B-1, n-1) and decline child (B, n-1) query views."""

        def view(Bc: int, nc: int) -> _ChildView:
            if Bc <= 0:
                return _ChildView("won")
            if Bc > nc:
                return _ChildView("dead")
            if Bc == 1 and nc == 1:
                return _ChildView("last", dist=self.dist)
            return _ChildView("row", self.row(Bc, nc))

        return view(B - 1, n - 1), view(B, n - 1)

    def iter_rows(self):
        for (B, n) in sorted(self.rows):
            yield B, n, self.rows[(B, n)]


def _row_points(grid: LikelihoodGrid, Q: float, B: int) -> np.ndarray:
    """Grid points plus anchors at the analytic cascade bounds for this row."""
    up = Q / (1.0 - Q)
    dead = ((1.0 - Q) / Q) ** B
    offs = np.array([1e-9, 1e-6, 1e-3, 3e-2])
    extra = np.concatenate(
        (
            [dead, up],
            dead * (1.0 + offs),
            dead * (1.0 - offs),
            up * (1.0 - offs),
            up * (1.0 + offs),
        )
    )
    extra = extra[(extra >= grid.lo) & (extra <= grid.hi)]
    return np.unique(np.concatenate((grid.points, extra)))


def backward_induction(
    dist: TypeDistribution,
    B0: int,
    n0: int,
    grid: LikelihoodGrid | None = None,
    settings: SolverSettings | None = None,
) -> PolicyTable:
    """Solve every row reachable from (B0, n0), in ascending n."""
    if not (1 <= B0 <= n0 <= MAX_PLAYERS):
        raise DomainError(f"need 1 <= B0 <= n0 <= {MAX_PLAYERS}")
    settings = settings or SolverSettings()
    grid = grid or LikelihoodGrid.spanning(dist.Q, B0, settings.grid_size, settings.grid_pad)

    rows: dict[tuple[int, int], PolicyRow] = {}
    table = PolicyTable(dist, grid, settings, rows, B0, n0)
    for n in range(1, n0 + 1):
        b_lo = max(1, B0 - (n0 - n))
        for B in range(b_lo, min(B0, n) + 1):
            inv_view, dec_view = table.child_views(B, n)
            Lpts = _row_points(grid, dist.Q, B)
            rows[(B, n)] = _solve_row(
                dist, B, n, Lpts, inv_view, dec_view, settings, rows
            )
    return table


# -- state-level operations -------------------------------------------------


def indifference_residual(x: float, state: GameState, policy: PolicyTable) -> float:
    """G(x) at the state; +inf when the invest child cannot complete."""
    inv_view, _ = policy.child_views(state.B, state.n)
    g = _g_raw(policy.dist, inv_view, state.L, float(x))
    val = float(np.asarray(g))
    return math.inf if math.isnan(val) else val


def expected_utility(x: float, state: GameState, policy: PolicyTable) -> float:
    """Mover's ex-ante utility of playing threshold x at the state."""
    dist = policy.dist
    inv_view, _ = policy.child_views(state.B, state.n)
    T1 = dist.sf(1, float(x))
    T0 = dist.sf(0, float(x))
    Lp = state.L * dist.lr_upper_tail(float(x))
    p0c, p1c = inv_view.pi(Lp)
    lam = state.L / (1.0 + state.L)
    return float(lam * T1 * p1c - (1.0 - lam) * T0 * p0c)


def find_roots(state: GameState, policy: PolicyTable) -> RootSet:
    """All candidate thresholds at the state, with utilities attached."""
    if not (1 <= state.B <= state.n):
        raise DomainError("find_roots needs a live state with 1 <= B <= n")
    dist = policy.dist
    inv_view, _ = policy.child_views(state.B, state.n)
    cands = _scan_candidates(
        dist, inv_view, np.array([state.L]), policy.settings
    )[0]
    out = []
    for x, kind in cands:
        res = indifference_residual(x, state, policy)
        out.append(
            Candidate(
                x=x,
                kind=kind,
                utility=expected_utility(x, state, policy),
                residual=res,
            )
        )
    rs = RootSet(state=state, candidates=tuple(out))
    if len(out) >= 2:
        enriched = tuple(
            replace(c, discriminator=discriminator(i, rs, state, policy))
            for i, c in enumerate(out)
        )
        rs = RootSet(state=state, candidates=enriched)
    return rs


def discriminator(i: int, root_set: RootSet, state: GameState, policy: PolicyTable) -> float:
    """Tie-break score of candidate i against the other candidates.

    A vanishing tremble by the next movers makes the mover strictly prefer
    the candidate whose continuation performs best against the toughest
    rival threshold; equal thresholds give equal scores by construction.
    """
    cands = root_set.candidates
    if len(cands) < 2:
        raise DomainError("discriminator needs at least two candidates")
    dist = policy.dist
    inv_view, _ = policy.child_views(state.B, state.n)
    xi = cands[i].x
    Lp = state.L * dist.lr_upper_tail(xi)
    p0c, p1c = inv_view.pi(Lp)
    vals = []
    for j, cj in enumerate(cands):
        if j == i:
            continue
        vals.append(
            state.L * p1c * dist.sf(1, cj.x) - p0c * dist.sf(0, cj.x)
        )
    return float(max(vals))


def select_equilibrium(
    root_set: RootSet, state: GameState, policy: PolicyTable
) -> tuple[float, bool]:
    """Equilibrium threshold at the state plus an irregularity flag.

    Highest expected utility wins; within tolerance ties the discriminator
    decides, and a discriminator tie between distinct thresholds marks the
    state irregular (the tie-break refinement has no unique selection).
    """
    dist = policy.dist
    inv_view, _ = policy.child_views(state.B, state.n)
    cands = root_set.candidates
    xs = np.array([c.x for c in cands])
    kinds = [c.kind for c in cands]
    U = np.array([c.utility for c in cands])
    T1 = dist.sf(1, xs)
    T0 = dist.sf(0, xs)
    Lp = state.L * dist.lr_upper_tail(xs)
    p0c, p1c = inv_view.pi(Lp)
    p0c = np.atleast_1d(p0c)
    p1c = np.atleast_1d(p1c)
    sigs = None
    if state.B == state.n and state.n >= 2:
        sigs = _trace_signatures(policy.rows, dist, xs, np.atleast_1d(Lp), state.n)
    idx, tie_irr = _select_one(
        xs, kinds, U, state.L, T1, T0, p0c, p1c, sigs, policy.settings
    )
    return float(xs[idx]), bool(tie_irr)


def completion_prob(
    state: GameState, policy: PolicyTable, x: float | None = None
) -> tuple[float, float]:
    """Completion probability by world state under equilibrium play.

    Solves the state's threshold on the fly unless x is supplied.
    """
    if state.B <= 0:
        return 1.0, 1.0
    if state.B > state.n:
        return 0.0, 0.0
    if x is None:
        x, _ = select_equilibrium(find_roots(state, policy), state, policy)
    dist = policy.dist
    inv_view, dec_view = policy.child_views(state.B, state.n)
    T1 = dist.sf(1, x)
    T0 = dist.sf(0, x)
    Lp = state.L * dist.lr_upper_tail(x)
    p0c, p1c = inv_view.pi(Lp)
    Lm = state.L * dist.lr_lower_tail(x)
    p0m, p1m = dec_view.pi(Lm)
    pi0 = T0 * p0c + dist.cdf(0, x) * p0m
    pi1 = T1 * p1c + dist.cdf(1, x) * p1m
    return float(pi0), float(pi1)


def pi_ordering_scan(policy: PolicyTable, tol: float = 1e-9) -> dict:
    """Scan every stored state for completion odds favoring the bad world.

    Completion ought never be likelier when the project is bad, but that
    ordering is unproven for partial-requirement games, so the scan
    reports offending states instead of asserting.
    """
    violations = []
    checked = 0
    for B, n, row in policy.iter_rows():
        checked += row.L.size
        mask = row.pi1 < row.pi0 - tol
        for L, p0, p1 in zip(row.L[mask], row.pi0[mask], row.pi1[mask]):
            violations.append(
                {"B": B, "n": n, "L": float(L), "pi0": float(p0), "pi1": float(p1)}
            )
    return {"states_checked": checked, "tolerance": tol, "violations": violations}
