"""Dependent Bernoulli schemes checked against an independent comparison row.

A dependent model exposes joint success probabilities over index sets
(0-based).  The k-fold sums of those joints drive the same inclusion-
exclusion PMF formula as the independent case.  The scheme diagnostics
quantify, per k, how far the model sits from the comparison row:

* B1: worst relative deviation of a joint from the matching product of
  comparison entries, over tuples outside the declared rare set.
* B2: full k-fold joint sum over its non-rare part.
* B3: the same ratio for the independent comparison row.

All three sit near 1 (or 0 for B1) exactly when the dependence is confined
to the rare sets, which is the regime where the dependent count inherits
the independent row's Poisson-type behavior.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SizeError, ValidationError
from .exact import (
    Pmf,
    SymmetricSums,
    elementary_symmetric,
    pmf_dp,
    pmf_inclusion_exclusion,
)
from .profiles import BernoulliProfile

# Generic joint enumeration walks all k-subsets; hard-guarded like brute force.
_GENERIC_MAX_N = 25
# Exhaustive B1 sweeps when the tuple count stays within this.
_EXHAUSTIVE_MAX = 10**6


class DependentModel(ABC):
    """Joint-probability evaluator over index sets {0..n-1}.

    joint(()) must be 1 and adding an index must never increase the value;
    set-valued input keeps it symmetric by construction.  Subclasses may
    provide closed-form k-fold sums to dodge the subset enumeration.
    """

    @property
    @abstractmethod
    def n(self) -> int: ...

    @abstractmethod
    def joint(self, indices) -> float:
        """P(all variables at the given distinct 0-based indices equal 1)."""

    @property
    def marginals(self) -> tuple[float, ...]:
        return tuple(self.joint((i,)) for i in range(self.n))

    def fast_sums(self, k_max: int) -> tuple[float, ...] | None:
        return None

    def fast_sums_fraction(self, k_max: int) -> tuple[Fraction, ...] | None:
        return None

    @abstractmethod
    def restrict(self, keep) -> "DependentModel":
        """The model of the subvector at the kept indices (ascending order)."""


def _check_keep(keep, n: int) -> tuple[int, ...]:
    kept = tuple(sorted(set(int(i) for i in keep)))
    if any(i < 0 or i >= n for i in kept):
        raise ValidationError(f"restricted indices must lie in 0..{n - 1}")
    return kept


@dataclass(frozen=True)
class ProductModel(DependentModel):
    """Independent product model; the degenerate scheme with no dependence."""

    profile: BernoulliProfile

    @property
    def n(self) -> int:
        return self.profile.n

    def joint(self, indices) -> float:
        ps = self.profile.probs
        return math.prod(ps[i] for i in indices)

    @property
    def marginals(self) -> tuple[float, ...]:
        return self.profile.probs

    def fast_sums(self, k_max: int) -> tuple[float, ...]:
        return elementary_symmetric(self.profile.probs, k_max).values

    def fast_sums_fraction(self, k_max: int) -> tuple[Fraction, ...]:
        sums = elementary_symmetric(self.profile.probs, k_max, high_precision=True)
        return sums.high_precision_values

    def restrict(self, keep) -> "ProductModel":
        kept = _check_keep(keep, self.n)
        if not kept:
            raise ValidationError("restriction needs at least one index")
        return ProductModel(BernoulliProfile(tuple(self.profile.probs[i] for i in kept)))


@dataclass(frozen=True)
class MixtureModel(DependentModel):
    """Two-component mixture of product rows: an exchangeable-dependence toy.

    With probability 1-eps the row behaves as the p profile, with
    probability eps as the q profile.  Joints, k-fold sums, and the full PMF
    all have closed forms, which makes the model an end-to-end oracle for
    the inclusion-exclusion route.
    """

    eps: float
    p_profile: BernoulliProfile
    q_profile: BernoulliProfile

    def __post_init__(self) -> None:
        eps = float(self.eps)
        if not 0.0 <= eps <= 1.0:
            raise ValidationError(f"mixture weight must lie in [0, 1], got {eps!r}")
        if self.p_profile.n != self.q_profile.n:
            raise ValidationError("mixture components must have equal length")
        object.__setattr__(self, "eps", eps)

    @property
    def n(self) -> int:
        return self.p_profile.n

    def joint(self, indices) -> float:
        idx = tuple(indices)
        ps = self.p_profile.probs
        qs = self.q_profile.probs
        return (1.0 - self.eps) * math.prod(ps[i] for i in idx) + self.eps * math.prod(
            qs[i] for i in idx
        )

    @property
    def marginals(self) -> tuple[float, ...]:
        return tuple(
            (1.0 - self.eps) * p + self.eps * q
            for p, q in zip(self.p_profile.probs, self.q_profile.probs)
        )

    def fast_sums(self, k_max: int) -> tuple[float, ...]:
        ep = elementary_symmetric(self.p_profile.probs, k_max).values
        eq = elementary_symmetric(self.q_profile.probs, k_max).values
        return tuple((1.0 - self.eps) * a + self.eps * b for a, b in zip(ep, eq))

    def fast_sums_fraction(self, k_max: int) -> tuple[Fraction, ...]:
        ep = elementary_symmetric(
            self.p_profile.probs, k_max, high_precision=True
        ).high_precision_values
        eq = elementary_symmetric(
            self.q_profile.probs, k_max, high_precision=True
        ).high_precision_values
        w = Fraction(self.eps)
        return tuple((1 - w) * a + w * b for a, b in zip(ep, eq))

    def closed_form_pmf(self) -> Pmf:
        """Exact PMF as the eps-weighted mixture of the two product PMFs."""
        lp = np.array(pmf_dp(self.p_profile).log_probs)
        lq = np.array(pmf_dp(self.q_profile).log_probs)
        if self.eps == 0.0:
            mixed = lp
        elif self.eps == 1.0:
            mixed = lq
        else:
            mixed = np.logaddexp(
                math.log1p(-self.eps) + lp, math.log(self.eps) + lq
            )
        np.minimum(mixed, 0.0, out=mixed)
        return Pmf(tuple(mixed.tolist()), self.n, "mixture_closed_form")

    def restrict(self, keep) -> "MixtureModel":
        kept = _check_keep(keep, self.n)
        if not kept:
            raise ValidationError("restriction needs at least one index")
        return MixtureModel(
            self.eps,
            BernoulliProfile(tuple(self.p_profile.probs[i] for i in kept)),
            BernoulliProfile(tuple(self.q_profile.probs[i] for i in kept)),
        )


class CallableModel(DependentModel):
    """Wrap a plain function of a frozen index set as a model (no fast path)."""

    def __init__(self, n: int, fn, marginals=None):
        if n < 1:
            raise ValidationError("model needs n >= 1")
        self._n = int(n)
        self._fn = fn
        self._marginals = (
            tuple(float(x) for x in marginals) if marginals is not None else None
        )

    @property
    def n(self) -> int:
        return self._n

    def joint(self, indices) -> float:
        return float(self._fn(frozenset(indices)))

    @property
    def marginals(self) -> tuple[float, ...]:
        if self._marginals is not None:
            return self._marginals
        return tuple(self.joint((i,)) for i in range(self._n))

    def restrict(self, keep) -> "CallableModel":
        kept = _check_keep(keep, self._n)
        if not kept:
            raise ValidationError("restriction needs at least one index")
        fn = self._fn

        def sub_fn(local_set):
            return fn(frozenset(kept[i] for i in local_set))

        return CallableModel(len(kept), sub_fn)


@dataclass(frozen=True)
class RareSetSpec:
    """Which k-tuples are exempt from the closeness conditions.

    kinds: empty (no exemptions); contains_any (tuples touching a fixed
    index set J); explicit (a literal list of tuples, small n only).
    Membership costs O(k) per tuple.  Indices are 0-based.
    """

    kind: str
    indices: frozenset = frozenset()
    tuples: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.kind not in ("empty", "contains_any", "explicit"):
            raise ValidationError(f"unknown rare-set kind {self.kind!r}")
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        object.__setattr__(
            self,
            "tuples",
            frozenset(tuple(sorted(int(i) for i in t)) for t in self.tuples),
        )

    @classmethod
    def empty(cls) -> "RareSetSpec":
        return cls("empty")

    @classmethod
    def contains_any(cls, indices) -> "RareSetSpec":
        return cls("contains_any", indices=frozenset(indices))

    @classmethod
    def explicit(cls, tuples) -> "RareSetSpec":
        return cls("explicit", tuples=frozenset(tuple(t) for t in tuples))

    def is_rare(self, t) -> bool:
        if self.kind == "empty":
            return False
        if self.kind == "contains_any":
            return any(i in self.indices for i in t)
        return tuple(sorted(t)) in self.tuples

    def spec_string(self) -> str:
        if self.kind == "empty":
            return "empty"
        if self.kind == "contains_any":
            inner = ",".join(str(i) for i in sorted(self.indices))
            return f"contains_any:{inner}"
        inner = ";".join(",".join(str(i) for i in t) for t in sorted(self.tuples))
        return f"explicit:{inner}"


def _guard_generic(n: int) -> None:
    if n > _GENERIC_MAX_N:
        raise SizeError(
            f"generic subset enumeration is guarded at n <= {_GENERIC_MAX_N}, got {n}"
        )


def s_tilde(
    model: DependentModel, k_max: int, high_precision: bool = False
) -> SymmetricSums:
    """k-fold joint sums S_0..S_k_max of the model.

    Uses the model's closed form when it has one; otherwise sums the joint
    over every k-subset (guarded at n <= 25).  In high-precision mode the
    sums are carried as exact rationals over the binary float joints and the
    float column is their correctly rounded image.
    """
    if not 0 <= k_max <= model.n:
        raise ValidationError(f"k_max={k_max} outside 0..{model.n}")
    if high_precision:
        hp = model.fast_sums_fraction(k_max)
        if hp is None:
            _guard_generic(model.n)
            hp = tuple(
                sum(
                    (Fraction(model.joint(c)) for c in itertools.combinations(range(model.n), k)),
                    Fraction(0),
                )
                for k in range(k_max + 1)
            )
        return SymmetricSums(tuple(float(x) for x in hp), tuple(hp))
    vals = model.fast_sums(k_max)
    if vals is None:
        _guard_generic(model.n)
        vals = tuple(
            math.fsum(model.joint(c) for c in itertools.combinations(range(model.n), k))
            for k in range(k_max + 1)
        )
    return SymmetricSums(tuple(vals))


def pmf_dependent(model: DependentModel, k: int, high_precision: bool = False) -> float:
    """P(count = k) for the dependent model via inclusion-exclusion.

    Same alternating-sum contract as the independent case: compensated
    summation with a conditioning guard, or exact rationals on request.
    Each call rebuilds the sums; batch via s_tilde + pmf_inclusion_exclusion
    when evaluating many k.
    """
    sums = s_tilde(model, model.n, high_precision)
    return pmf_inclusion_exclusion(sums, k, model.n)


@dataclass(frozen=True)
class RatioReport:
    """Dependent-over-independent PMF ratios for k = 0..k_max.

    entries lists (k, ratio) where the independent probability is positive;
    omitted_k lists the k skipped for a zero denominator.
    """

    k_values: tuple[int, ...]
    dep_probs: tuple[float, ...]
    indep_probs: tuple[float, ...]
    entries: tuple[tuple[int, float], ...]
    omitted_k: tuple[int, ...]

    @property
    def max_abs_dev(self) -> float:
        return max((abs(r - 1.0) for _, r in self.entries), default=0.0)


def ratio_report(
    model: DependentModel,
    indep: BernoulliProfile,
    k_max: int,
    high_precision: bool = False,
) -> RatioReport:
    """Compare the dependent PMF to the independent comparison row entrywise."""
    if indep.n != model.n:
        raise ValidationError(
            f"comparison row has n={indep.n}, model has n={model.n}"
        )
    if not 0 <= k_max <= model.n:
        raise ValidationError(f"k_max={k_max} outside 0..{model.n}")
    sums = s_tilde(model, model.n, high_precision)
    dep = tuple(
        pmf_inclusion_exclusion(sums, k, model.n) for k in range(k_max + 1)
    )
    ind_pmf = pmf_dp(indep, k_max)
    ind = tuple(math.exp(lp) for lp in ind_pmf.log_probs)
    entries = []
    omitted = []
    for k in range(k_max + 1):
        if ind_pmf.log_probs[k] > -math.inf:
            entries.append((k, dep[k] / ind[k]))
        else:
            omitted.append(k)
    return RatioReport(
        k_values=tuple(range(k_max + 1)),
        dep_probs=dep,
        indep_probs=ind,
        entries=tuple(entries),
        omitted_k=tuple(omitted),
    )


@dataclass(frozen=True)
class SchemeDiagnostics:
    """Per-k closeness diagnostics of a model to its comparison row.

    b1_max_dev[j] is the worst |joint/product - 1| seen at k = k_values[j]
    over non-rare tuples (inf when a product vanished under a positive
    joint; zero_product flags those k).  b2_ratio and b3_ratio divide the
    full k-fold sums by their non-rare parts, computed exactly from
    restriction identities, so they sit at exactly 1.0 for empty rare sets.
    modes records whether B1 swept every tuple or a seeded sample.
    """

    k_values: tuple[int, ...]
    b1_max_dev: tuple[float, ...]
    b2_ratio: tuple[float, ...]
    b3_ratio: tuple[float, ...]
    modes: tuple[str, ...]
    checked_counts: tuple[int, ...]
    zero_product: tuple[bool, ...]
    seed: int
    sample_budget: int
    rare: str

    @property
    def b1_overall(self) -> float:
        return max(self.b1_max_dev, default=0.0)

    @property
    def b2_max_dev(self) -> float:
        return max((abs(r - 1.0) for r in self.b2_ratio), default=0.0)

    @property
    def b3_max_dev(self) -> float:
        return max((abs(r - 1.0) for r in self.b3_ratio), default=0.0)


def _ratio_or_inf(num: float, den: float) -> float:
    if den > 0.0:
        return num / den
    return 1.0 if num == 0.0 else math.inf


def _nonrare_sums(
    full: tuple[float, ...],
    rare: RareSetSpec,
    k_max: int,
    n: int,
    joint_fn,
    restricted_sums: tuple[float, ...] | None,
) -> list[float]:
    """Sum of joints over non-rare k-tuples, for k = 0..k_max, exactly.

    empty: the full sums.  contains_any(J): non-rare tuples avoid J
    entirely, so the sum IS the k-fold sum of the model restricted to the
    complement (passed in).  explicit: subtract the listed tuples' joints.
    """
    if rare.kind == "empty":
        return list(full[: k_max + 1])
    if rare.kind == "contains_any":
        out = []
        for k in range(k_max + 1):
            if restricted_sums is not None and k < len(restricted_sums):
                out.append(restricted_sums[k])
            else:
                out.append(0.0)
        return out
    out = list(full[: k_max + 1])
    for t in rare.tuples:
        if 1 <= len(t) <= k_max and len(set(t)) == len(t) and all(0 <= i < n for i in t):
            out[len(t)] = max(0.0, out[len(t)] - joint_fn(t))
    return out


def check_scheme(
    model: DependentModel,
    indep: BernoulliProfile,
    rare: RareSetSpec,
    k_max: int,
    sample_budget: int = 2000,
    seed: int = 0,
) -> SchemeDiagnostics:
    """Measure, per k = 1..k_max, how close the model is to the comparison row.

    B1 enumerates every non-rare k-tuple when there are at most 10^6 of
    them, otherwise draws sample_budget distinct tuples with a per-k seed
    derived from the given one (deterministic run to run).  B2 and B3 use
    closed restriction identities rather than sampling, so they carry no
    Monte Carlo noise at all.
    """
    if indep.n != model.n:
        raise ValidationError(f"comparison row has n={indep.n}, model has n={model.n}")
    if not 1 <= k_max <= model.n:
        raise ValidationError(f"k_max={k_max} outside 1..{model.n}")
    if sample_budget < 1:
        raise ValidationError("sample_budget must be >= 1")
    n = model.n
    probs = indep.probs

    model_sums = s_tilde(model, k_max).values
    indep_sums = elementary_symmetric(probs, k_max).values

    restricted_model_sums: tuple[float, ...] | None = None
    restricted_indep_sums: tuple[float, ...] | None = None
    if rare.kind == "contains_any":
        if any(i < 0 or i >= n for i in rare.indices):
            raise ValidationError(f"rare indices must lie in 0..{n - 1}")
        comp = tuple(i for i in range(n) if i not in rare.indices)
        if comp:
            cap = min(k_max, len(comp))
            restricted_model_sums = s_tilde(model.restrict(comp), cap).values
            restricted_indep_sums = elementary_symmetric(
                [probs[i] for i in comp], cap
            ).values
        else:
            restricted_model_sums = (1.0,)
            restricted_indep_sums = (1.0,)

    b2_parts = _nonrare_sums(
        model_sums, rare, k_max, n, model.joint, restricted_model_sums
    )
    b3_parts = _nonrare_sums(
        indep_sums,
        rare,
        k_max,
        n,
        lambda t: math.prod(probs[i] for i in t),
        restricted_indep_sums,
    )

    ks = []
    b1 = []
    b2 = []
    b3 = []
    modes = []
    counts = []
    zero_flags = []
    for k in range(1, k_max + 1):
        total = math.comb(n, k)
        if total <= _EXHAUSTIVE_MAX:
            tuples = itertools.combinations(range(n), k)
            mode = "exhaustive"
        else:
            rng = random.Random(f"{seed}:{k}")
            seen = set()
            attempts = 0
            while len(seen) < sample_budget and attempts < 20 * sample_budget:
                seen.add(tuple(sorted(rng.sample(range(n), k))))
                attempts += 1
            tuples = sorted(seen)
            mode = "sampled"
        worst = 0.0
        checked = 0
        zero_hit = False
        for t in tuples:
            if rare.is_rare(t):
                continue
            checked += 1
            bt = model.joint(t)
            pb = math.prod(probs[i] for i in t)
            if pb == 0.0:
                if bt > 0.0:
                    worst = math.inf
                    zero_hit = True
                continue
            dev = abs(bt / pb - 1.0)
            if dev > worst:
                worst = dev
        if rare.kind == "empty":
            b2_k = 1.0
            b3_k = 1.0
        else:
            b2_k = _ratio_or_inf(model_sums[k], b2_parts[k])
            b3_k = _ratio_or_inf(indep_sums[k], b3_parts[k])
        ks.append(k)
        b1.append(worst)
        b2.append(b2_k)
        b3.append(b3_k)
        modes.append(mode)
        counts.append(checked)
        zero_flags.append(zero_hit)
    return SchemeDiagnostics(
        k_values=tuple(ks),
        b1_max_dev=tuple(b1),
        b2_ratio=tuple(b2),
        b3_ratio=tuple(b3),
        modes=tuple(modes),
        checked_counts=tuple(counts),
        zero_product=tuple(zero_flags),
        seed=seed,
        sample_budget=sample_budget,
        rare=rare.spec_string(),
    )


_MODEL_KEYS = {
    "mixture": {"kind", "eps", "p", "q"},
    "product": {"kind", "p"},
}


def model_from_dict(data: dict) -> DependentModel:
    """Build a model from its JSON form.

    {"kind": "mixture", "eps": e, "p": [...], "q": [...]} or
    {"kind": "product", "p": [...]}.  Unknown kinds and stray keys are
    rejected so a typo cannot silently change the model.
    """
    if not isinstance(data, dict):
        raise ValidationError("model spec must be a JSON object")
    kind = data.get("kind")
    if kind not in _MODEL_KEYS:
        raise ValidationError(f"unknown model kind {kind!r}")
    extra = set(data) - _MODEL_KEYS[kind]
    if extra:
        raise ValidationError(f"unknown model keys {sorted(extra)}")
    missing = _MODEL_KEYS[kind] - set(data)
    if missing:
        raise ValidationError(f"model spec missing keys {sorted(missing)}")
    if kind == "product":
        return ProductModel(BernoulliProfile(tuple(data["p"])))
    return MixtureModel(
        float(data["eps"]),
        BernoulliProfile(tuple(data["p"])),
        BernoulliProfile(tuple(data["q"])),
    )


def load_model(path: str) -> DependentModel:
    """Read a model spec JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(data)
