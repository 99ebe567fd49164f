"""Weak limits of powers and what they certify.

Along the return-power sequences n_k = d*H_{j_k+m}, with

    H_j = -(L_j + min(s_j(1..r_j-1))),

powers T^{n_k} of a bounded construction accumulate to operators of
the form sum_z a_z T^z + c*Theta (Theta = projection onto constants).
This module fits such truncated polynomials to correlation data on a
coefficient simplex, compares two fitted limits for p/q-similarity
(Q = R(S^q), P = R(T^p) for a common series R), and combines the two
into numerical disjointness evidence. Everything here is finite-depth
estimation: verdicts are labeled evidence, never proofs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Mapping, Sequence

import numpy as np

from .construction import ConstructionParams, Window, WindowSet, heights
from .tower import CorrelationMatrix, build_labels, correlation_matrix

MAX_SOLVER_ITERATIONS = 10_000
SOLVER_IMPROVEMENT_TOL = 1e-10


@dataclass(frozen=True)
class FitTolerances:
    """Default thresholds separating signal from truncation noise at
    depths with L_K >= 1e4."""

    support_tau: float = 0.02
    coeff_tol: float = 0.02
    stability_tol: float = 0.02
    residual_tol: float = 0.05


DEFAULT_TOLERANCES = FitTolerances()


@dataclass(frozen=True)
class DepthPolicy:
    """How deep to build towers when chasing a weak limit.

    Each fitted shift n gets the smallest depth K with
    L_K >= max(min_levels, shift_factor*|n|); fits run along the last
    ``fit_count`` admissible stages whose shift stays below
    ``max_shift``. ``ref_stage`` of None picks the smallest stage whose
    level count exceeds twice the fit window, so that distinct shifts
    stay distinguishable even on periodic words.
    """

    min_levels: int = 10_000
    shift_factor: int = 200
    max_shift: int = 2_000
    fit_count: int = 3
    horizon: int = 60
    ref_stage: int | None = None


DEFAULT_POLICY = DepthPolicy()


# ------------------------------------------------------------ polynomial

@dataclass(frozen=True)
class LimitPolynomial:
    """Truncated convex combination sum_z a_z T^z + c*Theta."""

    window: int
    coeffs: Mapping[int, float]
    theta: float
    fit_residual: float

    def a(self, z: int) -> float:
        return float(self.coeffs.get(z, 0.0))

    @property
    def mass(self) -> float:
        return float(sum(self.coeffs.values()) + self.theta)

    def support(self, tau: float) -> frozenset[int]:
        """Shifts carrying more than tau of coefficient mass."""
        return frozenset(z for z, a in self.coeffs.items() if a > tau)

    def to_csv_rows(self):
        for z in sorted(self.coeffs):
            yield (str(z), repr(float(self.coeffs[z])))
        yield ("theta", repr(float(self.theta)))
        yield ("residual", repr(float(self.fit_residual)))

    def __str__(self):
        parts = [
            f"{a:.4f}*T^{z}" for z, a in sorted(self.coeffs.items()) if a > 1e-4
        ]
        if self.theta > 1e-4:
            parts.append(f"{self.theta:.4f}*Theta")
        return " + ".join(parts) if parts else "0"


def coefficient_distance(a: LimitPolynomial, b: LimitPolynomial) -> float:
    """sup-distance over all shift coefficients and theta."""
    zs = set(a.coeffs) | set(b.coeffs)
    gap = max((abs(a.a(z) - b.a(z)) for z in zs), default=0.0)
    return max(gap, abs(a.theta - b.theta))


@dataclass(frozen=True)
class SupportSet:
    """tau-thresholded support of a fitted limit, tagged by its offset m."""

    index: int
    zs: frozenset[int]
    tau: float


# ---------------------------------------------------------------- fitting

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} (sort method)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _polish_on_support(x, gram, gtb):
    """Exact equality-constrained solve on the face the projected
    gradient identified; accepted only when feasible and no worse.

    Removes the last ~1e-5 of first-order stall so that exact-match
    targets (e.g. the zero-shift fit) come back with coefficients
    accurate to the 1e-6 the fit contract promises.
    """
    support = np.nonzero(x > 1e-12)[0]
    if support.size == 0:
        return x
    gs = gram[np.ix_(support, support)]
    k = support.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * gs
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([2.0 * gtb[support], [1.0]])
    try:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    except np.linalg.LinAlgError:
        return x
    y = sol[:k]
    if y.min() < -1e-10 or abs(y.sum() - 1.0) > 1e-9:
        return x
    y = np.maximum(y, 0.0)
    y /= y.sum()
    candidate = np.zeros_like(x)
    candidate[support] = y
    def obj(v):
        return float(v @ gram @ v - 2.0 * gtb @ v)
    return candidate if obj(candidate) <= obj(x) + 1e-15 else x


def fit_limit_polynomial(
    target: CorrelationMatrix,
    basis: Mapping[int, CorrelationMatrix],
    measures: np.ndarray,
    Z: int | None = None,
) -> LimitPolynomial:
    """Constrained least squares fit of the target correlation matrix.

    Minimizes || C_n - sum_z a_z C_z - c*M_Theta ||_F over the simplex
    {a_z, c >= 0, sum + c = 1}, where M_Theta(A,B) = nu(A)nu(B), by
    projected gradient descent (tiny dimension, robustness over speed).
    """
    zs = sorted(basis)
    if Z is None:
        Z = max(abs(z) for z in zs)
    if any(abs(z) > Z for z in zs):
        raise ValueError("basis contains shifts beyond the window Z")
    if Z >= target.total:
        raise ValueError(f"window Z={Z} infeasible for depth with L_K={target.total}")
    for z, mat in basis.items():
        if (mat.stage, mat.depth) != (target.stage, target.depth):
            raise ValueError(f"basis C_{z} built at a different stage/depth")

    b = target.values.ravel()
    cols = [basis[z].values.ravel() for z in zs]
    cols.append(np.outer(measures, measures).ravel())
    G = np.stack(cols, axis=1)

    gram = G.T @ G
    lipschitz = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    gtb = G.T @ b

    x = np.full(G.shape[1], 1.0 / G.shape[1])
    prev = float("inf")
    for _ in range(MAX_SOLVER_ITERATIONS):
        grad = 2.0 * (gram @ x - gtb)
        x = _project_simplex(x - step * grad)
        obj = float(np.dot(x, gram @ x) - 2.0 * np.dot(gtb, x))
        if prev - obj < SOLVER_IMPROVEMENT_TOL:
            break
        prev = obj
    x = _polish_on_support(x, gram, gtb)

    residual = float(np.linalg.norm(G @ x - b))
    coeffs = {z: float(x[i]) for i, z in enumerate(zs)}
    return LimitPolynomial(
        window=Z, coeffs=coeffs, theta=float(x[-1]), fit_residual=residual
    )


def fit_for_shift(
    params: ConstructionParams, j: int, K: int, n: int, Z: int = 8
) -> LimitPolynomial:
    """Build target C_n and basis {C_z : |z| <= Z} at (j, K) and fit."""
    model = build_labels(params, j, K)
    target = correlation_matrix(params, j, K, n)
    basis = {z: correlation_matrix(params, j, K, z) for z in range(-Z, Z + 1)}
    measures = model.class_counts() / model.length
    return fit_limit_polynomial(target, basis, measures, Z)


# ------------------------------------------------------------- sequences

def full_window(horizon: int) -> WindowSet:
    return WindowSet((Window(1, horizon),))


def h_sequence(
    params: ConstructionParams, d: int, m: int, windows: WindowSet,
    count: int | None = None,
) -> list[int]:
    """Shift sequence n_k = d*H_{j_k+m}, H_j = -(L_j + s_j^min), over
    the admissible window stages (s_j^min ranges over the first r_j - 1
    columns)."""
    if d < 1 or m < 0:
        raise ValueError("need d >= 1 and m >= 0")
    stages = windows.offset_stages(m)
    if not stages:
        raise ValueError(f"offset m={m} exceeds every window")
    if count is not None:
        stages = stages[:count]
    table = heights(params, max(stages))
    return [
        -d * (table.L(j) + params.stage(j).s_min_first) for j in stages
    ]


def _select_stages(
    params: ConstructionParams, windows: WindowSet, m: int,
    multiplier: int, policy: DepthPolicy,
) -> list[int]:
    """Last fit_count stages whose scaled shift stays within max_shift."""
    stages = windows.offset_stages(m)
    if not stages:
        raise ValueError(f"offset m={m} exceeds every window")
    table = heights(params, max(stages))
    usable = [
        j for j in stages
        if multiplier * (table.L(j) + params.stage(j).s_min_first)
        <= policy.max_shift
    ]
    if len(usable) < 2:
        raise ValueError(
            "fewer than two admissible stages; raise max_shift or the horizon"
        )
    return usable[-policy.fit_count:]


def _depth_for_shift(params: ConstructionParams, j_ref: int, n: int,
                     policy: DepthPolicy) -> int:
    need = max(policy.min_levels, policy.shift_factor * abs(n))
    K = j_ref
    while heights(params, K).L(K) < need:
        K += 1
    return K


def auto_ref_stage(params: ConstructionParams, Z: int) -> int:
    """Smallest reference stage whose level count exceeds 2Z+1, so that
    the basis shifts |z| <= Z stay distinct even on periodic words
    (odometer words repeat with period L_j, aliasing C_z with
    C_{z mod L_j})."""
    j = 1
    while heights(params, j).L(j) < 2 * Z + 2:
        j += 1
    return j


def _ref_stage(params: ConstructionParams, Z: int, policy: DepthPolicy) -> int:
    return policy.ref_stage if policy.ref_stage is not None else auto_ref_stage(params, Z)


@dataclass(frozen=True)
class WeakLimitResult:
    """A fitted limit along a power sequence plus its stability trace."""

    polynomial: LimitPolynomial
    fits: tuple[LimitPolynomial, ...] = field(repr=False)
    stages: tuple[int, ...]
    shifts: tuple[int, ...]
    stability_gap: float
    ref_stage: int

    def converged(self, tol: float) -> bool:
        return self.stability_gap <= tol


def _fit_series(
    params: ConstructionParams, stages: Sequence[int], shifts: Sequence[int],
    Z: int, policy: DepthPolicy,
) -> WeakLimitResult:
    j_ref = _ref_stage(params, Z, policy)
    fits = []
    for n in shifts:
        K = _depth_for_shift(params, j_ref, n, policy)
        fits.append(fit_for_shift(params, j_ref, K, n, Z))
    gap = max(
        (coefficient_distance(a, b) for a, b in zip(fits, fits[1:])),
        default=float("inf"),
    )
    return WeakLimitResult(
        polynomial=fits[-1], fits=tuple(fits), stages=tuple(stages),
        shifts=tuple(shifts), stability_gap=gap, ref_stage=j_ref,
    )


def weak_limit(
    params: ConstructionParams, d: int, m: int,
    windows: WindowSet | None = None,
    policy: DepthPolicy = DEFAULT_POLICY,
    Z: int = 8,
) -> WeakLimitResult:
    """Fit the weak limit of T^{d*H_{j_k+m}} along successive k.

    Fits the last few admissible stages, reports the maximal
    coefficient gap between consecutive fits, and returns the deepest
    fit as the limit estimate.
    """
    if windows is None:
        windows = full_window(policy.horizon)
    stages = _select_stages(params, windows, m, d, policy)
    table = heights(params, max(stages))
    shifts = [
        -d * (table.L(j) + params.stage(j).s_min_first) for j in stages
    ]
    return _fit_series(params, stages, shifts, Z, policy)


# ------------------------------------------------------------ similarity

@dataclass(frozen=True)
class SimilarityVerdict:
    """Outcome of the p/q-similarity test, with the recovered common
    series R when it exists."""

    similar: bool
    witness: dict[int, float] | None
    max_coeff_gap: float
    reason: str


def is_pq_similar(
    Q: LimitPolynomial, P: LimitPolynomial, p: int, q: int,
    tol: float = DEFAULT_TOLERANCES.coeff_tol,
    tau: float = DEFAULT_TOLERANCES.support_tau,
) -> SimilarityVerdict:
    """Test whether Q(S) = R(S^q) and P(T) = R(T^p) for a common R.

    Requires supp(Q) within q*Z and supp(P) within p*Z (above the
    support threshold tau), coefficient agreement a^Q_{qr} = a^P_{pr}
    within tol on the common r-grid, and matching theta components.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    if gcd(p, q) != 1:
        raise ValueError(f"p={p}, q={q} must be coprime")

    bad_q = sorted(z for z in Q.support(tau) if z % q != 0)
    if bad_q:
        return SimilarityVerdict(
            False, None, float("inf"),
            f"supp(Q) not within {q}Z: shifts {bad_q}",
        )
    bad_p = sorted(z for z in P.support(tau) if z % p != 0)
    if bad_p:
        return SimilarityVerdict(
            False, None, float("inf"),
            f"supp(P) not within {p}Z: shifts {bad_p}",
        )

    r_range = {z // q for z in Q.coeffs if z % q == 0}
    r_range |= {z // p for z in P.coeffs if z % p == 0}
    gap = abs(Q.theta - P.theta)
    for r in r_range:
        gap = max(gap, abs(Q.a(q * r) - P.a(p * r)))
    if gap > tol:
        return SimilarityVerdict(
            False, None, gap, f"coefficient gap {gap:.4g} exceeds tol {tol:g}"
        )
    witness = {r: Q.a(q * r) for r in sorted(r_range) if Q.a(q * r) > 0.0}
    return SimilarityVerdict(True, witness, gap, "supports and coefficients match")


# ----------------------------------------------------------- certificate

class Verdict(enum.Enum):
    EVIDENCE_DISJOINT = "EvidenceDisjoint"
    SIMILAR_LIMITS = "SimilarLimits"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DisjointnessVerdict:
    """Numerical evidence about disjointness of T^p and T^q.

    EvidenceDisjoint requires both fitted limits converged and not
    p/q-similar; this is evidence in the sense of the finite
    computation, not a proof of weak convergence.
    """

    verdict: Verdict
    p: int
    q: int
    q_result: WeakLimitResult
    p_result: WeakLimitResult
    similarity: SimilarityVerdict
    notes: tuple[str, ...] = ()

    def diagnostics(self) -> str:
        lines = [
            f"verdict: {self.verdict.value} (numerical evidence)",
            f"Q (along T^(q*H_j), q={self.q}): {self.q_result.polynomial}",
            f"  stability gap {self.q_result.stability_gap:.4g}, "
            f"residual {self.q_result.polynomial.fit_residual:.4g}",
            f"P (along T^(p*H_j), p={self.p}): {self.p_result.polynomial}",
            f"  stability gap {self.p_result.stability_gap:.4g}, "
            f"residual {self.p_result.polynomial.fit_residual:.4g}",
            f"similarity: {self.similarity.reason}",
        ]
        lines.extend(self.notes)
        return "\n".join(lines)


def disjointness_certificate(
    params: ConstructionParams, p: int, q: int,
    windows: WindowSet | None = None,
    policy: DepthPolicy = DEFAULT_POLICY,
    tolerances: FitTolerances = DEFAULT_TOLERANCES,
    Z: int = 8,
) -> DisjointnessVerdict:
    """Fit Q along T^{q*H_j} and P along T^{p*H_j} on a shared stage
    sequence and compare: non-similar converged limits are evidence
    that T^q and T^p are disjoint."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    if p == q:
        raise ValueError("p and q must differ")
    if gcd(p, q) != 1:
        raise ValueError(f"p={p}, q={q} must be coprime")
    if windows is None:
        windows = full_window(policy.horizon)

    stages = _select_stages(params, windows, 0, max(p, q), policy)
    table = heights(params, max(stages))
    base = [-(table.L(j) + params.stage(j).s_min_first) for j in stages]
    q_result = _fit_series(params, stages, [q * n for n in base], Z, policy)
    p_result = _fit_series(params, stages, [p * n for n in base], Z, policy)

    similarity = is_pq_similar(
        q_result.polynomial, p_result.polynomial, p, q,
        tol=tolerances.coeff_tol, tau=tolerances.support_tau,
    )

    notes = []
    stable = True
    for name, res in (("Q", q_result), ("P", p_result)):
        if not res.converged(tolerances.stability_tol):
            stable = False
            notes.append(
                f"{name} fit unstable: gap {res.stability_gap:.4g} > "
                f"{tolerances.stability_tol:g}"
            )
        if res.polynomial.fit_residual > tolerances.residual_tol:
            stable = False
            notes.append(
                f"{name} fit residual {res.polynomial.fit_residual:.4g} > "
                f"{tolerances.residual_tol:g}"
            )

    if similarity.similar:
        verdict = Verdict.SIMILAR_LIMITS
    elif stable:
        verdict = Verdict.EVIDENCE_DISJOINT
    else:
        verdict = Verdict.INCONCLUSIVE
    return DisjointnessVerdict(
        verdict=verdict, p=p, q=q, q_result=q_result, p_result=p_result,
        similarity=similarity, notes=tuple(notes),
    )


# ------------------------------------------------- identity-mix / cascade

@dataclass(frozen=True)
class IdentityMix:
    """Decomposition L = (1 - m*eps)I + m*eps*P' of a fitted limit."""

    epsilon: float
    mix: LimitPolynomial


def match_identity_mix(
    L: LimitPolynomial, m: int, tol: float = DEFAULT_TOLERANCES.coeff_tol
) -> IdentityMix | None:
    """Recover eps from a limit of the shape (1 - m*eps)I + m*eps*P'.

    Fails (returns None) when the off-identity mass is below tol
    (eps = 0 is excluded) or exceeds 1 beyond tol.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a0 = L.a(0)
    off_mass = 1.0 - a0
    if off_mass <= tol or a0 < -tol:
        return None
    eps = off_mass / m
    coeffs = {z: a / off_mass for z, a in L.coeffs.items() if z != 0 and a > 0}
    mix = LimitPolynomial(
        window=L.window, coeffs=coeffs, theta=L.theta / off_mass,
        fit_residual=L.fit_residual,
    )
    return IdentityMix(epsilon=eps, mix=mix)


@dataclass(frozen=True)
class CascadeResult:
    """Divisibility chain supp(P_{1,m0+k}) within p^k * Z, k = 1..len."""

    p: int
    holds: tuple[bool, ...]

    @property
    def max_level(self) -> int:
        m = 0
        for ok in self.holds:
            if not ok:
                break
            m += 1
        return m


def divisibility_cascade(
    supports: Sequence[SupportSet | Iterable[int]], p: int
) -> CascadeResult:
    """Check the support-divisibility cascade: the k-th supplied
    support (k = 1-based) must lie in p^k * Z. The chain breaks at the
    first failure."""
    if p < 2:
        raise ValueError("p must be >= 2")
    if not supports:
        raise ValueError("need at least one support set")
    holds = []
    for k, sup in enumerate(supports, start=1):
        zs = sup.zs if isinstance(sup, SupportSet) else frozenset(sup)
        modulus = p**k
        holds.append(all(z % modulus == 0 for z in zs))
    return CascadeResult(p=p, holds=tuple(holds))


@dataclass(frozen=True)
class FlatnessRow:
    m: int
    cascade_holds: bool
    params_divide: bool
    max_abs_diff: int


@dataclass(frozen=True)
class FlatnessConsequence:
    """Cross-check of the fitted cascade against the parameter-side
    divisibility of spacer differences by p^m."""

    p: int
    rows: tuple[FlatnessRow, ...]
    consistent: bool
    all_flat: bool
    s_sup: int
    forced_flat_level: int


def flatness_consequence(
    params: ConstructionParams, windows: WindowSet, p: int,
    cascade: CascadeResult,
) -> FlatnessConsequence:
    """For each cascade level m, verify that p^m divides every spacer
    difference s_{j_k+m}(i) - s_{j_k+m}(i') over the first r-1 columns
    on the tail of the admissible stages; also reports the level at
    which bounded parameters force flat behavior (p^m > spacer bound).
    """
    if p != cascade.p:
        raise ValueError("cascade was computed for a different p")
    rows = []
    consistent = True
    all_flat = True
    s_sup = 0
    for m in range(1, len(cascade.holds) + 1):
        stages = windows.offset_stages(m)
        tail = stages[len(stages) // 2 :]
        diffs = set()
        for j in tail:
            st = params.stage(j)
            s_sup = max(s_sup, max(st.s))
            head = st.s[: st.r - 1]
            diffs.update(
                abs(a - b) for ii, a in enumerate(head) for b in head[ii + 1 :]
            )
        max_diff = max(diffs, default=0)
        if max_diff > 0:
            all_flat = False
        divides = all(dd % p**m == 0 for dd in diffs)
        if cascade.holds[m - 1] and m <= cascade.max_level and not divides:
            consistent = False
        rows.append(
            FlatnessRow(
                m=m, cascade_holds=cascade.holds[m - 1],
                params_divide=divides, max_abs_diff=max_diff,
            )
        )
    forced = 1
    while p**forced <= s_sup:
        forced += 1
    return FlatnessConsequence(
        p=p, rows=tuple(rows), consistent=consistent, all_flat=all_flat,
        s_sup=s_sup, forced_flat_level=forced,
    )
