"""Rank-one construction parameters and their combinatorial structure.

A construction is given by an initial height h1 and, for each stage j,
a number of columns r_j >= 2 and spacer heights s_j(1..r_j). The
stage-j tower has L_j = h_j + 1 levels, with

    L_{j+1} = L_j * r_j + sum_i s_j(i).

All height arithmetic is exact (python ints). "Eventually ..." style
conditions are evaluated on a finite horizon H by requiring the
property on the tail window [ceil(H/2), H]; no claim is made beyond
the horizon.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

from .errors import NotBounded, OdometerCase, StageUnavailable

MIN_COLUMNS = 2


@dataclass(frozen=True)
class StageParams:
    """One cutting stage: r columns, spacer heights s(1..r)."""

    r: int
    s: tuple[int, ...]

    def __post_init__(self):
        if self.r < MIN_COLUMNS:
            raise ValueError(f"r must be >= {MIN_COLUMNS}, got {self.r}")
        if len(self.s) != self.r:
            raise ValueError(f"need {self.r} spacer heights, got {len(self.s)}")
        if any(x < 0 for x in self.s):
            raise ValueError("spacer heights must be >= 0")

    @property
    def s_min_first(self) -> int:
        """min over the first r-1 columns (the last column is excluded
        from the minimum used by the return-power sequences)."""
        return min(self.s[:-1])

    def is_constant(self) -> bool:
        return len(set(self.s)) == 1

    def is_flat_first(self) -> bool:
        """Spacers equal over the first r-1 columns."""
        return len(set(self.s[:-1])) == 1

    def is_flat_strict(self) -> bool:
        """Spacers equal over all r columns."""
        return self.is_constant()


class _Kind(str, enum.Enum):
    PERIODIC = "periodic"
    EXPLICIT = "explicit"
    RANDOM = "random"


@dataclass(frozen=True)
class ConstructionParams:
    """Defining data of a rank-one construction.

    ``stages`` semantics depend on ``kind``: a repeating pattern
    (periodic), a finite list (explicit, later stages unavailable), or
    ignored (random, which draws stage j from a seed-and-index RNG with
    r_j in [2, r_max] and s_j(i) in [0, s_max]).
    """

    h1: int
    kind: _Kind
    stages: tuple[StageParams, ...] = ()
    r_max: int = 0
    s_max: int = 0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.h1 < 0:
            raise ValueError("h1 must be >= 0")
        if self.kind in (_Kind.PERIODIC, _Kind.EXPLICIT) and not self.stages:
            raise ValueError("need at least one stage")
        if self.kind is _Kind.RANDOM and self.r_max < MIN_COLUMNS:
            raise ValueError(f"r_max must be >= {MIN_COLUMNS}")

    # -- constructors -------------------------------------------------

    @classmethod
    def periodic(cls, h1, pattern, name="") -> "ConstructionParams":
        return cls(h1=h1, kind=_Kind.PERIODIC, stages=tuple(pattern), name=name)

    @classmethod
    def explicit(cls, h1, stages, name="") -> "ConstructionParams":
        return cls(h1=h1, kind=_Kind.EXPLICIT, stages=tuple(stages), name=name)

    @classmethod
    def random_bounded(cls, h1, r_max, s_max, seed, name="") -> "ConstructionParams":
        return cls(
            h1=h1, kind=_Kind.RANDOM, r_max=r_max, s_max=s_max, seed=seed,
            name=name or f"random(r<={r_max},s<={s_max},seed={seed})",
        )

    # -- stage access --------------------------------------------------

    def stage(self, j: int) -> StageParams:
        if j < 1:
            raise ValueError("stage index starts at 1")
        if self.kind is _Kind.PERIODIC:
            return self.stages[(j - 1) % len(self.stages)]
        if self.kind is _Kind.EXPLICIT:
            if j > len(self.stages):
                raise StageUnavailable(
                    f"explicit construction has {len(self.stages)} stages, "
                    f"stage {j} requested"
                )
            return self.stages[j - 1]
        rng = random.Random(self.seed * 1_000_003 + j)
        r = rng.randint(MIN_COLUMNS, self.r_max)
        s = tuple(rng.randint(0, self.s_max) for _ in range(r))
        return StageParams(r, s)

    def stage_range(self, j0: int, j1: int) -> list[StageParams]:
        return [self.stage(j) for j in range(j0, j1 + 1)]

    def describe(self) -> str:
        if self.name:
            return self.name
        if self.kind is _Kind.RANDOM:
            return f"random(h1={self.h1},r<={self.r_max},s<={self.s_max},seed={self.seed})"
        body = ";".join(f"r={st.r},s={','.join(map(str, st.s))}" for st in self.stages)
        return f"{self.kind.value}(h1={self.h1},{body})"


# ------------------------------------------------------------- presets

def odometer(p: int) -> ConstructionParams:
    """p-adic odometer: p columns, no spacers."""
    return ConstructionParams.periodic(
        0, [StageParams(p, (0,) * p)], name=f"odometer{p}"
    )


def chacon() -> ConstructionParams:
    """Classical weakly mixing construction: r=3, spacers (0,1,0)."""
    return ConstructionParams.periodic(0, [StageParams(3, (0, 1, 0))], name="chacon")


def flat3() -> ConstructionParams:
    """Flat spacers over the first two of three columns: (1,1,0)."""
    return ConstructionParams.periodic(0, [StageParams(3, (1, 1, 0))], name="flat3")


def cyclic_factor_preset(d: int) -> ConstructionParams:
    """Construction whose powers keep a cyclic factor of order d:
    h1 = d-1 and spacers (0, d), so every return time is divisible by d."""
    if d < 2:
        raise ValueError("d must be >= 2")
    name = "class4" if d == 2 else f"cyclic{d}"
    return ConstructionParams.periodic(d - 1, [StageParams(2, (0, d))], name=name)


def class4() -> ConstructionParams:
    """The order-2 cyclic-factor preset (h1=1, r=2, s=(0,2))."""
    return cyclic_factor_preset(2)


PRESETS = {
    "chacon": chacon,
    "odometer2": lambda: odometer(2),
    "odometer3": lambda: odometer(3),
    "flat3": flat3,
    "class4": class4,
}


def preset(name: str) -> ConstructionParams:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; valid: {sorted(PRESETS)}"
        ) from None


# -------------------------------------------------------------- heights

@dataclass(frozen=True)
class HeightTable:
    """Level counts L_j = h_j + 1 for stages 1..max_stage, exact ints."""

    levels: tuple[int, ...]

    @property
    def max_stage(self) -> int:
        return len(self.levels)

    def L(self, j: int) -> int:
        if not 1 <= j <= self.max_stage:
            raise ValueError(f"stage {j} outside 1..{self.max_stage}")
        return self.levels[j - 1]

    def h(self, j: int) -> int:
        return self.L(j) - 1


@lru_cache(maxsize=256)
def _levels_through(params: ConstructionParams, J: int) -> tuple[int, ...]:
    levels = [params.h1 + 1]
    for j in range(1, J):
        st = params.stage(j)
        levels.append(levels[-1] * st.r + sum(st.s))
    return tuple(levels)


def heights(params: ConstructionParams, J: int) -> HeightTable:
    """Level counts through stage J via the exact recursion
    L_{j+1} = L_j r_j + sum_i s_j(i)."""
    if J < 1:
        raise ValueError("J must be >= 1")
    return HeightTable(_levels_through(params, J))


# ---------------------------------------------------- bounded / windows

@dataclass(frozen=True)
class BoundedProfile:
    r_sup: int
    s_sup: int
    is_bounded_on_horizon: bool
    horizon: int
    bound: int | None = None


def bounded_profile(params, J, bound=None) -> BoundedProfile:
    """Suprema of r_j and s_j(i) over j <= J; when ``bound`` is given,
    also whether both stay within it."""
    if J < 1:
        raise ValueError("J must be >= 1")
    r_sup = 0
    s_sup = 0
    for st in params.stage_range(1, J):
        r_sup = max(r_sup, st.r)
        s_sup = max(s_sup, max(st.s))
    ok = True if bound is None else (r_sup <= bound and s_sup <= bound)
    return BoundedProfile(r_sup, s_sup, ok, J, bound)


@dataclass(frozen=True)
class Window:
    """Inclusive stage interval [start, end]."""

    start: int
    end: int

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"bad window [{self.start},{self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, j) -> bool:
        return self.start <= j <= self.end


@dataclass(frozen=True)
class WindowSet:
    windows: tuple[Window, ...]

    def __post_init__(self):
        prev_end = 0
        for w in self.windows:
            if w.start <= prev_end:
                raise ValueError("windows must be increasing and disjoint")
            prev_end = w.end

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(w.length for w in self.windows)

    def lengths_non_decreasing(self) -> bool:
        """Finite-horizon hint for the "arbitrarily long intervals"
        condition; never a proof."""
        ls = self.lengths
        return all(a <= b for a, b in zip(ls, ls[1:]))

    def offset_stages(self, m: int) -> tuple[int, ...]:
        """All stages j + m such that [j, j+m] lies inside one window,
        in increasing order. These index the power sequences at offset m."""
        if m < 0:
            raise ValueError("offset must be >= 0")
        out = []
        for w in self.windows:
            out.extend(range(w.start + m, w.end + 1))
        return tuple(out)


def find_windows(params, J, B) -> WindowSet:
    """Maximal runs of stages j <= J with r_j <= B and max_i s_j(i) <= B."""
    if J < 1 or B < 1:
        raise ValueError("J and B must be >= 1")
    windows = []
    run_start = None
    for j in range(1, J + 1):
        st = params.stage(j)
        ok = st.r <= B and max(st.s) <= B
        if ok and run_start is None:
            run_start = j
        elif not ok and run_start is not None:
            windows.append(Window(run_start, j - 1))
            run_start = None
    if run_start is not None:
        windows.append(Window(run_start, J))
    return WindowSet(tuple(windows))


# ------------------------------------------------------------- flatness

@dataclass(frozen=True)
class FlatnessReport:
    flat_first: bool
    flat_strict: bool
    s_value: int | None


def flatness(params, window) -> FlatnessReport:
    """Spacer flatness over a stage window.

    flat_first: every stage has s_j(1) = ... = s_j(r_j - 1);
    flat_strict: equality extends through the last column;
    s_value: the common first-block value when it is also constant
    across the window.
    """
    lo, hi = (window.start, window.end) if isinstance(window, Window) else window
    if lo < 1 or hi < lo:
        raise ValueError(f"bad window [{lo},{hi}]")
    flat_first = True
    flat_strict = True
    values = set()
    for st in params.stage_range(lo, hi):
        flat_first &= st.is_flat_first()
        flat_strict &= st.is_flat_strict()
        values.add(st.s[0])
    s_value = values.pop() if flat_first and len(values) == 1 else None
    return FlatnessReport(flat_first, flat_strict, s_value)


# ------------------------------------------------- return times / order

def return_times(params, j: int) -> tuple[int, ...]:
    """First-return contributions of the stage-j columns, in column
    order: L_j + s_j(i). (Level-count convention: the base recurs after
    exactly L_j + s_j(i) steps through column i.)"""
    table = heights(params, j)
    st = params.stage(j)
    L = table.L(j)
    return tuple(L + x for x in st.s)


def _tail_start(horizon: int) -> int:
    return max(1, horizon // 2)


def is_odometer_like(params, horizon: int) -> bool:
    """Spacers constant across all columns on the tail window - the
    parameter-level odometer criterion (rational discrete spectrum)."""
    return all(
        st.is_constant()
        for st in params.stage_range(_tail_start(horizon), horizon)
    )


@dataclass(frozen=True)
class EigenvalueOrder:
    """gcd of return times over stages [j0, J], with how early it
    stabilized (the gcd is unchanged from ``stabilized_at`` on)."""

    d: int
    j0: int
    J: int
    stabilized_at: int

    @property
    def stable_margin(self) -> int:
        return self.J - self.stabilized_at


def eigenvalue_order(params, j0: int, J: int) -> EigenvalueOrder:
    """Order d of the rational eigenvalue group, estimated as
    gcd{L_j + s_j(i) : j0 <= j <= J, 1 <= i <= r_j}.

    Raises OdometerCase for odometer-like parameters, where the
    eigenvalue group is infinite and no finite d generates it.
    """
    if not 1 <= j0 <= J:
        raise ValueError("need 1 <= j0 <= J")
    if is_odometer_like(params, J):
        raise OdometerCase(
            "odometer-like parameters: rational spectrum is infinite"
        )
    g = 0
    stabilized_at = j0
    for j in range(j0, J + 1):
        for t in return_times(params, j):
            g2 = gcd(g, t)
            if g2 != g:
                g = g2
                stabilized_at = j
    return EigenvalueOrder(d=g, j0=j0, J=J, stabilized_at=stabilized_at)


# --------------------------------------------------------------- labels

class ClassKind(str, enum.Enum):
    ODOMETER = "Odometer"
    FLAT_WEAKLY_MIXING = "FlatWeaklyMixing"
    NON_FLAT_WEAKLY_MIXING = "NonFlatWeaklyMixing"
    NON_FLAT_COMPACT_FACTOR = "NonFlatCompactFactor"


@dataclass(frozen=True)
class ClassLabel:
    kind: ClassKind
    d: int = 1

    def __str__(self):
        if self.kind is ClassKind.NON_FLAT_COMPACT_FACTOR:
            return f"{self.kind.value}({self.d})"
        return self.kind.value


def classify(params, horizon: int, bound: int | None = None) -> ClassLabel:
    """Four-way classification of a bounded construction on a horizon.

    Odometer when spacers are constant across columns on the tail;
    otherwise split by the eigenvalue order d (compact factor when
    d >= 2) and by tail flatness when d = 1. Labels are horizon-level
    evidence, not proofs.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    profile = bounded_profile(params, horizon, bound)
    if not profile.is_bounded_on_horizon:
        raise NotBounded(
            f"parameters exceed bound {bound} on horizon {horizon}: "
            f"r_sup={profile.r_sup}, s_sup={profile.s_sup}"
        )
    if is_odometer_like(params, horizon):
        return ClassLabel(ClassKind.ODOMETER)
    tail = (_tail_start(horizon), horizon)
    d = eigenvalue_order(params, tail[0], horizon).d
    if d >= 2:
        return ClassLabel(ClassKind.NON_FLAT_COMPACT_FACTOR, d)
    if flatness(params, tail).flat_first:
        return ClassLabel(ClassKind.FLAT_WEAKLY_MIXING)
    return ClassLabel(ClassKind.NON_FLAT_WEAKLY_MIXING)
