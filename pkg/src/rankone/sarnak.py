"""Mobius-independence computations on rank-one towers.

Both the weighted Birkhoff sums S_N = sum_{i<=N} f(T^i x) mu(i) and
the telescoping identities of the prime-extension argument are
evaluated in exact integer arithmetic (rational observable
coefficients are cleared to a common denominator first): the
telescoping chain is an algebraic identity and its check must not
depend on rounding. Only the decay traces |S_N|/N are floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from . import _kernels
from .construction import ClassKind, ConstructionParams, classify, heights
from .errors import ConsistencyFailure, DepthTooShallow, OdometerCase
from .mobius import MobiusTable
from .tower import build_labels

_INT64_SAFE = 2**62


@dataclass(frozen=True)
class Observable:
    """Finite observable: one coefficient per stage-j level.

    Coefficients are exact (ints or Fractions); spacers evaluate to 0.
    """

    stage: int
    coeffs: tuple
    name: str = ""

    def __post_init__(self):
        for c in self.coeffs:
            if not isinstance(c, (int, Fraction)):
                raise ValueError("coefficients must be ints or Fractions")

    @property
    def sup_norm(self):
        return max((abs(c) for c in self.coeffs), default=0)

    @classmethod
    def indicator(cls, params: ConstructionParams, stage: int, indices,
                  name: str = "") -> "Observable":
        """Indicator of a set of stage-j levels."""
        n = heights(params, stage).L(stage)
        idx = set(indices)
        bad = [i for i in idx if not 0 <= i < n]
        if bad:
            raise ValueError(f"level indices {bad} outside 0..{n - 1}")
        return cls(stage, tuple(1 if i in idx else 0 for i in range(n)), name)

    @classmethod
    def constant(cls, params: ConstructionParams, stage: int, value,
                 name: str = "") -> "Observable":
        n = heights(params, stage).L(stage)
        return cls(stage, (value,) * n, name)

    def scaled_ints(self) -> tuple[np.ndarray, int]:
        """Coefficients cleared to a common denominator, as int64,
        with a trailing 0 slot for the spacer class."""
        denom = lcm(*(Fraction(c).denominator for c in self.coeffs)) if self.coeffs else 1
        ints = [int(Fraction(c) * denom) for c in self.coeffs]
        if ints and max(abs(v) for v in ints) >= _INT64_SAFE:
            raise ValueError("observable coefficients too large for exact int64 path")
        return np.array(ints + [0], dtype=np.int64), denom


def _orbit_values(params, obs: Observable, start: int, N: int, K: int):
    """int64 values f(T^i x) for i = 1..N, plus the denominator."""
    model = build_labels(params, obs.stage, K)
    if len(obs.coeffs) != model.n_levels:
        raise ValueError(
            f"observable has {len(obs.coeffs)} coefficients, stage "
            f"{obs.stage} has {model.n_levels} levels"
        )
    if start < 0 or start + N >= model.length:
        raise DepthTooShallow(
            f"orbit start={start}, N={N} exceeds L_K-1={model.length - 1}"
        )
    ext, denom = obs.scaled_ints()
    seg = model.labels[start + 1 : start + N + 1]
    cls = np.where(seg >= 0, seg, model.n_levels)
    vals = ext[cls]
    if int(np.abs(vals).max(initial=0)) * N >= _INT64_SAFE:
        raise ValueError("sum could overflow the exact int64 path")
    return vals, denom


def _exact(value: int, denom: int):
    f = Fraction(value, denom)
    return int(f) if f.denominator == 1 else f


# ------------------------------------------------------ weighted sums

@dataclass(frozen=True)
class MobiusSumResult:
    """S_N with intermediate checkpoints (exact values)."""

    N: int
    final: int | Fraction
    checkpoints: tuple

    def decay_rows(self):
        """(n, S_n, S_n/n) rows for the decay trace."""
        for n, s in self.checkpoints:
            yield (str(n), repr(float(s)), repr(float(s) / n))


def _checkpoint_grid(N: int) -> list[int]:
    grid = []
    n = 100
    while n < N:
        grid.append(n)
        n *= 10
    grid.append(N)
    return grid


def mobius_weighted_sum(
    params: ConstructionParams, obs: Observable, start: int, N: int,
    K: int, table: MobiusTable,
) -> MobiusSumResult:
    """S_N = sum_{i=1..N} f(T^i x) mu(i), exactly, for x the point at
    level ``start``; checkpoints at n = 100, 1000, ... and N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > table.n_max:
        raise ValueError(f"table covers mu up to {table.n_max}, need {N}")
    vals, denom = _orbit_values(params, obs, start, N, K)
    grid = _checkpoint_grid(N)
    sums = _kernels.weighted_mobius_sums(
        vals, table.values, np.array(grid, dtype=np.int64)
    )
    checkpoints = tuple(
        (n, _exact(int(s), denom)) for n, s in zip(grid, sums)
    )
    return MobiusSumResult(N=N, final=checkpoints[-1][1], checkpoints=checkpoints)


# ------------------------------------------------------ cyclic factor

@dataclass(frozen=True)
class FactorPartition:
    """Residue-class partition of stage-K levels: level l belongs to
    class l mod d, E = class 0, and T advances the class by 1."""

    d: int
    depth: int
    length: int
    checked_through_stage: int

    def class_of(self, level: int) -> int:
        if not 0 <= level < self.length:
            raise ValueError(f"level {level} outside 0..{self.length - 1}")
        return level % self.d

    def assignments(self) -> np.ndarray:
        return np.arange(self.length, dtype=np.int64) % self.d

    def base_levels(self) -> np.ndarray:
        """Levels of the base class E (residue 0)."""
        return np.arange(0, self.length, self.d, dtype=np.int64)


def _column_offsets(params: ConstructionParams, j: int, L_j: int) -> list[int]:
    st = params.stage(j)
    offs = []
    acc = 0
    for i in range(st.r - 1):
        acc += L_j + st.s[i]
        offs.append(acc)
    return offs


def _verify_offsets(params: ConstructionParams, d: int, j0: int, j1: int) -> None:
    """Column start offsets must all be divisible by d for levels to
    keep their residue class through restacking."""
    if d == 1:
        return
    table = heights(params, j1)
    for j in range(j0, j1 + 1):
        for off in _column_offsets(params, j, table.L(j)):
            if off % d != 0:
                raise ConsistencyFailure(
                    f"stage {j} column offset {off} not divisible by d={d}; "
                    "the residue partition is not T^d-invariant"
                )


def compact_factor(params: ConstructionParams, horizon: int, K: int) -> FactorPartition:
    """Cyclic factor E, TE, ..., T^{d-1}E at depth K, with d taken from
    the classification; verifies that every column offset through
    stage K+1 is divisible by d."""
    label = classify(params, horizon)
    if label.kind is ClassKind.ODOMETER:
        raise OdometerCase("odometer has no finite maximal cyclic factor")
    d = label.d
    checked = K + 1
    _verify_offsets(params, d, 1, checked)
    return FactorPartition(
        d=d, depth=K, length=heights(params, K).L(K),
        checked_through_stage=checked,
    )


def decompose_observable(F: Observable, partition: FactorPartition) -> list[Observable]:
    """Split F into f_0..f_{d-1} with supp f_i inside class i; the
    pieces sum back to F coefficientwise."""
    d = partition.d
    out = []
    for i in range(d):
        coeffs = tuple(
            c if a % d == i else 0 for a, c in enumerate(F.coeffs)
        )
        out.append(Observable(F.stage, coeffs, name=f"{F.name or 'F'}|class{i}"))
    return out


# ------------------------------------------------- telescoping identity

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _require_supported_on_base(obs: Observable, d: int, start: int) -> None:
    bad = [a for a, c in enumerate(obs.coeffs) if c != 0 and a % d != 0]
    if bad:
        raise ValueError(
            f"observable must be supported on E: levels {bad[:5]} have "
            f"residue != 0 mod {d}"
        )
    if start % d != 0:
        raise ValueError(f"start level {start} not in E (residue {start % d})")


def _prepare_exact_orbit(params, obs, d, start, N, K, table):
    if N > table.n_max:
        raise ValueError(f"table covers mu up to {table.n_max}, need {N}")
    _require_supported_on_base(obs, d, start)
    _verify_offsets(params, d, obs.stage, K)
    return _orbit_values(params, obs, start, N, K)


@dataclass(frozen=True)
class TelescopeResult:
    """Exact two-sided evaluation of one telescoping step."""

    d: int
    N: int
    lhs: int | Fraction
    rhs: int | Fraction
    first_term: int | Fraction
    second_term: int | Fraction
    n_first: int
    n_second: int

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def telescope_identity_check(
    params: ConstructionParams, obs: Observable, d: int, start: int,
    N: int, K: int, table: MobiusTable,
) -> TelescopeResult:
    """Verify, exactly, with S = T^d on E:

        sum_{i<=N} f(T^i x) mu(i)
          = sum_{0<k<=N/d} f(S^k x) mu(d) mu(k)
            - sum_{0<m<=N/d^2} f(S^{dm} x) mu(d) mu(dm)

    which holds because f vanishes off E (so only i = dk contribute),
    mu(dk) = mu(d)mu(k) for k coprime to d, and mu(d^2 k) = 0.
    """
    if not _is_prime(d):
        raise ValueError(f"d={d} must be prime")
    vals, denom = _prepare_exact_orbit(params, obs, d, start, N, K, table)
    mu = table.values
    mu_d = int(mu[d])

    lhs = int(_kernels.weighted_mobius_sums(vals, mu, np.array([N], np.int64))[0])
    n_first = N // d
    n_second = N // (d * d)
    sum_k = int(_kernels.strided_mobius_sum(vals, mu, d, n_first))
    # second sum: f(S^{dm} x) mu(dm) over m <= N/d^2, position stride d*d
    second_raw = 0
    for m in range(1, n_second + 1):
        second_raw += int(vals[d * d * m - 1]) * int(mu[d * m])
    first = mu_d * sum_k
    second = mu_d * second_raw
    rhs = first - second
    return TelescopeResult(
        d=d, N=N,
        lhs=_exact(lhs, denom), rhs=_exact(rhs, denom),
        first_term=_exact(first, denom), second_term=_exact(second, denom),
        n_first=n_first, n_second=n_second,
    )


@dataclass(frozen=True)
class ExtensionStep:
    """One unfolding of the telescoping chain."""

    depth: int
    prime: int
    stride: int
    n_terms: int
    term: int | Fraction
    crude_bound: Fraction


@dataclass(frozen=True)
class PrimeExtensionReport:
    """M-fold unfolding S_N = -sum_u C_u + remainder, with the crude
    tail bound N*||f||/d^M alongside the exact remainder."""

    d: int
    N: int
    M: int
    s_n: int | Fraction
    steps: tuple[ExtensionStep, ...]
    remainder: int | Fraction
    remainder_bound: Fraction
    identity_holds: bool
    triangle_holds: bool


def prime_extension_report(
    params: ConstructionParams, obs: Observable, d: int, start: int,
    N: int, M: int, K: int, table: MobiusTable,
) -> PrimeExtensionReport:
    """Iterate the telescoping M times for prime d.

    Step u contributes C_u = sum_{k<=N/d^u} f(S^{d^{u-1}k} x) mu(k) and
    the exact remainder after M steps is
    sum_{k<=N/d^{M+1}} f(S^{d^M k} x) mu(dk); for composite d the chain
    runs one unfolding per prime factor in nondecreasing order (M is
    then the number of prime factors).
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if d < 2:
        raise ValueError("d must be >= 2")
    if not _is_prime(d):
        return _composite_extension_report(params, obs, d, start, N, K, table)
    vals, denom = _prepare_exact_orbit(params, obs, d, start, N, K, table)
    mu = table.values
    norm = obs.sup_norm

    s_n = int(_kernels.weighted_mobius_sums(vals, mu, np.array([N], np.int64))[0])
    steps = []
    terms_raw = []
    for u in range(1, M + 1):
        stride = d**u
        n_terms = N // stride
        c_u = int(_kernels.strided_mobius_sum(vals, mu, stride, n_terms))
        terms_raw.append(-c_u)
        steps.append(
            ExtensionStep(
                depth=u, prime=d, stride=stride, n_terms=n_terms,
                term=_exact(-c_u, denom),
                crude_bound=Fraction(N) * Fraction(norm) / d**u,
            )
        )
    rem_stride = d ** (M + 1)
    rem = 0
    for k in range(1, N // rem_stride + 1):
        rem += int(vals[rem_stride * k - 1]) * int(mu[d * k])

    identity = s_n == sum(terms_raw) + rem
    bound = Fraction(N) * Fraction(norm) / d**M
    triangle = abs(Fraction(s_n, denom)) <= sum(
        abs(Fraction(st.term)) for st in steps
    ) + bound
    return PrimeExtensionReport(
        d=d, N=N, M=M, s_n=_exact(s_n, denom), steps=tuple(steps),
        remainder=_exact(rem, denom), remainder_bound=bound,
        identity_holds=identity, triangle_holds=triangle,
    )


def _composite_extension_report(
    params, obs, d: int, start: int, N: int, K: int, table: MobiusTable
) -> PrimeExtensionReport:
    """Chain one telescoping step per prime factor of d (nondecreasing):
    sum over T^{sigma}-orbits unfolds through T^{sigma*p} until the
    stride reaches d itself."""
    factors = []
    rest = d
    f = 2
    while f * f <= rest:
        while rest % f == 0:
            factors.append(f)
            rest //= f
        f += 1
    if rest > 1:
        factors.append(rest)

    vals, denom = _prepare_exact_orbit(params, obs, d, start, N, K, table)
    mu = table.values
    norm = obs.sup_norm
    s_n = int(_kernels.weighted_mobius_sums(vals, mu, np.array([N], np.int64))[0])

    steps = []
    stride = 1
    n_cur = N
    cur = s_n  # current sum: sum_{k<=n_cur} f(T^{stride*k} x) mu(k)
    identity = True
    for p in factors:
        n_next = n_cur // p
        c_v = int(_kernels.strided_mobius_sum(vals, mu, stride * p, n_next))
        t2 = 0
        for m in range(1, n_cur // (p * p) + 1):
            t2 += int(vals[stride * p * p * m - 1]) * int(mu[p * m])
        if cur != int(mu[p]) * (c_v - t2):
            identity = False
        steps.append(
            ExtensionStep(
                depth=len(steps) + 1, prime=p, stride=stride * p,
                n_terms=n_next, term=_exact(int(mu[p]) * c_v, denom),
                crude_bound=Fraction(n_next) * Fraction(norm),
            )
        )
        stride *= p
        n_cur = n_next
        cur = c_v
    bound = Fraction(N) * Fraction(norm) / d
    return PrimeExtensionReport(
        d=d, N=N, M=len(factors), s_n=_exact(s_n, denom), steps=tuple(steps),
        remainder=_exact(cur, denom),
        remainder_bound=Fraction(n_cur) * Fraction(norm),
        identity_holds=identity,
        triangle_holds=abs(Fraction(s_n, denom))
        <= sum(abs(Fraction(st.term)) for st in steps) + bound,
    )
