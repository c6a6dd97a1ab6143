"""Exact distribution engines for sums of independent Bernoulli variables.

Four mutually checking routes to the same PMF:

* pmf_dp: the convolution recurrence in log domain, exact under truncation.
* pmf_dc: divide-and-conquer polynomial multiplication, subquadratic.
* pmf_bruteforce: literal sum over all 2^n outcomes, the oracle (n <= 25).
* pmf_inclusion_exclusion: the alternating symmetric-sum formula, with a
  conditioning contract and an exact-rational mode.

Plus the k-fold symmetric sums, the log zero-probability, a truncated
Poisson reference, and the sup-of-CDF-differences distance to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import log_factorial, neumaier_sum
from .errors import ConditioningError, HypothesisError, SizeError, ValidationError
from .profiles import BernoulliProfile

PROVENANCES = (
    "dp",
    "divide_conquer",
    "brute_force",
    "inclusion_exclusion",
    "mixture_closed_form",
)

# Direct quadratic convolution below this length; split and multiply above.
_DC_BASE = 64
# np.convolve up to this output length; FFT beyond it.
_FFT_MIN = 4096
# Hard guard for the 2^n enumeration.
_BRUTE_MAX_N = 25
# Relative cancellation allowed in the alternating sum before giving up.
_IE_COND_LIMIT = 1e-6

_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class Pmf:
    """Distribution of the count, stored as log probabilities.

    log_probs[k] = log P(V = k) for k = 0..support_max, with -inf marking
    exact zeros.  Log storage keeps tails usable where linear probabilities
    underflow (a zero-probability anchor near e^-745 is still a number we
    can divide by).
    """

    log_probs: tuple[float, ...]
    n: int
    provenance: str

    def __post_init__(self) -> None:
        lp = tuple(float(x) for x in self.log_probs)
        if len(lp) < 1:
            raise ValidationError("pmf needs at least the k=0 entry")
        if len(lp) - 1 > self.n:
            raise ValidationError("pmf support exceeds n")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        for k, x in enumerate(lp):
            if math.isnan(x) or x > 0.0:
                raise ValidationError(f"log_probs[{k}] = {x!r} is not a log probability")
        object.__setattr__(self, "log_probs", lp)

    @property
    def support_max(self) -> int:
        return len(self.log_probs) - 1

    def probs(self) -> np.ndarray:
        return np.exp(np.array(self.log_probs, dtype=np.float64))

    def prob(self, k: int) -> float:
        return math.exp(self.log_probs[k])

    def log_prob(self, k: int) -> float:
        return self.log_probs[k]

    def total_mass(self) -> float:
        return float(math.fsum(self.probs().tolist()))


def _finish_log(log_f: np.ndarray, n: int, provenance: str) -> Pmf:
    # Rounding can push a log probability a hair above 0; the invariant says <= 0.
    np.minimum(log_f, 0.0, out=log_f)
    return Pmf(tuple(log_f.tolist()), n, provenance)


def pmf_dp(profile: BernoulliProfile, k_max: int | None = None) -> Pmf:
    """Convolution recurrence f_i(k) = f_{i-1}(k)(1-p_i) + f_{i-1}(k-1)p_i.

    Runs in log domain, so it stays exact-to-rounding even when the
    probabilities underflow linearly.  Truncation at k_max is exact: the
    recurrence never reads entries above k, so the prefix equals the prefix
    of the full run bit for bit.
    """
    n = profile.n
    if k_max is None:
        k_max = n
    if not 0 <= k_max <= n:
        raise ValidationError(f"k_max={k_max} outside 0..{n}")
    size = k_max + 1
    log_f = np.full(size, -np.inf)
    log_f[0] = 0.0
    stay = np.empty(size)
    shift = np.empty(size)
    hi = 0  # highest attainable count so far, bounds the active slice
    for p in profile.probs:
        if p == 0.0:
            continue
        hi = min(hi + 1, k_max)
        s = hi + 1
        lq = math.log1p(-p)
        lp = math.log(p)
        np.add(log_f[: s - 1], lp, out=shift[1:s])
        shift[0] = -np.inf
        np.add(log_f[:s], lq, out=stay[:s])
        np.logaddexp(stay[:s], shift[:s], out=log_f[:s])
    return _finish_log(log_f, n, "dp")


def _poly_direct(p: np.ndarray) -> np.ndarray:
    """PMF coefficients of a short profile by the quadratic recurrence."""
    out = np.zeros(len(p) + 1)
    out[0] = 1.0
    for i, pi in enumerate(p):
        out[1 : i + 2] = out[1 : i + 2] * (1.0 - pi) + out[: i + 1] * pi
        out[0] *= 1.0 - pi
    return out


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = len(a) + len(b) - 1
    if m < _FFT_MIN:
        return np.convolve(a, b)
    size = 1 << (m - 1).bit_length()
    out = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)[:m]
    # FFT round-off can produce tiny negatives where the true value is ~0.
    np.clip(out, 0.0, None, out=out)
    return out


def _dc_coeffs(p: np.ndarray) -> np.ndarray:
    if len(p) <= _DC_BASE:
        return _poly_direct(p)
    mid = len(p) // 2
    return _conv(_dc_coeffs(p[:mid]), _dc_coeffs(p[mid:]))


def pmf_dc(profile: BernoulliProfile) -> Pmf:
    """Divide-and-conquer product of the per-variable polynomials (1-p) + p z.

    The merge tree is fixed by the input length, so results are reproducible
    run to run.  Subquadratic for large n thanks to FFT merges at the top of
    the tree; small merges stay with direct convolution for accuracy.
    """
    coeffs = _dc_coeffs(profile.as_array())
    with np.errstate(divide="ignore"):
        log_f = np.log(coeffs)
    return _finish_log(log_f, profile.n, "divide_conquer")


def pmf_bruteforce(profile: BernoulliProfile) -> Pmf:
    """Literal sum over all 2^n outcomes; the oracle everything else faces.

    Vectorized over chunks of bitmasks, but still exponential: guarded at
    n <= 25 where it costs tens of millions of multiplies at most.
    """
    n = profile.n
    if n > _BRUTE_MAX_N:
        raise SizeError(f"brute force is guarded at n <= {_BRUTE_MAX_N}, got {n}")
    p = profile.as_array()
    q = 1.0 - p
    acc = np.zeros(n + 1)
    chunk = 1 << 16
    bit_cols = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        bits = (masks[:, None] >> bit_cols) & 1
        weights = np.where(bits == 1, p, q).prod(axis=1)
        acc += np.bincount(bits.sum(axis=1), weights=weights, minlength=n + 1)
    with np.errstate(divide="ignore"):
        log_f = np.log(acc)
    return _finish_log(log_f, n, "brute_force")


@dataclass(frozen=True)
class SymmetricSums:
    """The k-fold sums S_0..S_K over all k-subsets of a value sequence.

    S_0 = 1 by the empty-product convention.  high_precision_values, when
    present, mirrors values as exact rationals computed from the same
    (binary) inputs; it feeds the exact inclusion-exclusion path.
    """

    values: tuple[float, ...]
    high_precision_values: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        vals = tuple(float(x) for x in self.values)
        if len(vals) < 1 or vals[0] != 1.0:
            raise ValidationError("symmetric sums must start with S_0 = 1")
        for k, v in enumerate(vals):
            if math.isnan(v) or v < 0.0:
                raise ValidationError(f"S_{k} = {v!r} must be a nonnegative real")
        if self.high_precision_values is not None:
            hp = tuple(Fraction(x) for x in self.high_precision_values)
            if len(hp) != len(vals):
                raise ValidationError("rational mirror must match values in length")
            object.__setattr__(self, "high_precision_values", hp)
        object.__setattr__(self, "values", vals)

    @property
    def k_max(self) -> int:
        return len(self.values) - 1


def elementary_symmetric(
    values, k_max: int, high_precision: bool = False
) -> SymmetricSums:
    """Elementary symmetric polynomials e_0..e_{k_max} of the given values.

    Newton-triangle recurrence E_i(k) = E_{i-1}(k) + v_i E_{i-1}(k-1).  The
    first-order sum is overwritten with the exactly-rounded fsum so it agrees
    bit for bit with the profile mean computed elsewhere.  With
    high_precision the whole triangle is mirrored in exact rationals over
    the same binary inputs.
    """
    vals = [float(v) for v in values]
    if any(math.isnan(v) or v < 0.0 for v in vals):
        raise ValidationError("symmetric sums need nonnegative values")
    if not 0 <= k_max <= len(vals):
        raise ValidationError(f"k_max={k_max} outside 0..{len(vals)}")
    e = np.zeros(k_max + 1)
    e[0] = 1.0
    arr = np.asarray(vals)
    for i, v in enumerate(arr):
        top = min(i + 1, k_max)
        if top >= 1:
            e[1 : top + 1] = e[1 : top + 1] + v * e[:top]
    if k_max >= 1:
        e[1] = math.fsum(vals)
    hp: tuple[Fraction, ...] | None = None
    if high_precision:
        he = [Fraction(0)] * (k_max + 1)
        he[0] = Fraction(1)
        for i, v in enumerate(vals):
            fv = Fraction(v)
            top = min(i + 1, k_max)
            for k in range(top, 0, -1):
                he[k] += fv * he[k - 1]
        hp = tuple(he)
    return SymmetricSums(tuple(e.tolist()), hp)


def pmf_inclusion_exclusion(sums: SymmetricSums, k: int, n: int) -> float:
    """P(V = k) = sum over l of (-1)^l C(k+l, k) S_{k+l}.

    Alternating sums of huge binomial-weighted terms cancel catastrophically
    as n grows, so the float path tracks its own rounding noise (machine
    epsilon times the sum of absolute terms) and refuses to return a value
    whose noise exceeds 1e-6 of its magnitude.  The rational path is exact
    and rounds once at the end.  Use beyond n of about 25 is an oracle-only
    affair; the dp and divide-and-conquer engines are the production routes.
    """
    if not 0 <= k <= n:
        raise ValidationError(f"k={k} outside 0..{n}")
    if sums.k_max < n:
        raise ValidationError(
            f"sums cover k <= {sums.k_max}, need the full range up to n={n}"
        )
    if sums.high_precision_values is not None:
        total = Fraction(0)
        for l in range(0, n - k + 1):
            term = math.comb(k + l, k) * sums.high_precision_values[k + l]
            total += -term if l & 1 else term
        return min(1.0, max(0.0, float(total)))

    def terms():
        for l in range(0, n - k + 1):
            c = math.comb(k + l, k)
            try:
                t = float(c) * sums.values[k + l]
            except OverflowError as exc:
                raise ConditioningError(
                    f"binomial weight C({k + l},{k}) overflows float range"
                ) from exc
            yield -t if l & 1 else t

    total, total_abs = neumaier_sum(terms())
    noise = _EPS * total_abs
    if noise > _IE_COND_LIMIT * abs(total):
        raise ConditioningError(
            f"alternating sum at k={k} lost too much precision "
            f"(noise estimate {noise:.3g} vs magnitude {abs(total):.3g}); "
            "use the rational mode or a convolution engine"
        )
    return min(1.0, max(0.0, total))


def prob_zero_log(profile: BernoulliProfile) -> float:
    """log P(V = 0) = sum of log(1 - p_i), the exactly-rounded log1p sum."""
    return math.fsum(math.log1p(-p) for p in profile.probs)


@dataclass(frozen=True)
class PoissonRef:
    """Poisson reference with log-domain evaluation and tail truncation.

    The CDF is materialized up to the point where the remaining tail mass
    drops below tail_mass (default 1e-15), certified by the geometric-ratio
    tail bound rather than by summing to machine-limited cumulative values.
    """

    lam: float
    tail_mass: float = 1e-15

    def __post_init__(self) -> None:
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0.0):
            raise HypothesisError(f"Poisson reference needs lambda > 0, got {lam!r}")
        if not 0.0 < self.tail_mass < 1.0:
            raise ValidationError("tail_mass must lie in (0, 1)")
        object.__setattr__(self, "lam", lam)

    def log_pmf(self, k: int) -> float:
        if k < 0:
            raise ValidationError("k must be nonnegative")
        return -self.lam + k * math.log(self.lam) - log_factorial(k)

    def truncation_k(self, tail_mass: float | None = None) -> int:
        """Smallest K (up to stride) with certified tail mass below the cap.

        For K+1 > lam the terms decay at least geometrically with ratio
        lam/(K+1), so tail(K) <= pmf(K) / (1 - lam/(K+1)).
        """
        cap = self.tail_mass if tail_mass is None else tail_mass
        lam = self.lam
        k = int(math.ceil(lam + 10.0 * math.sqrt(lam) + 20.0))
        log_cap = math.log(cap)
        while True:
            ratio = lam / (k + 1.0)
            bound = self.log_pmf(k) - math.log1p(-ratio)
            if bound < log_cap:
                return k
            k = int(k * 1.25) + 10

    def pmf_points(self, k_hi: int) -> np.ndarray:
        ks = np.arange(k_hi + 1, dtype=np.float64)
        log_terms = -self.lam + ks * math.log(self.lam) - np.array(
            [log_factorial(int(k)) for k in range(k_hi + 1)]
        )
        return np.exp(log_terms)

    def cdf_points(self, k_hi: int) -> np.ndarray:
        return np.cumsum(self.pmf_points(k_hi))


def sup_cdf_distance(pmf: Pmf, ref: PoissonRef) -> float:
    """sup over k >= 0 of |CDF(pmf)(k) - CDF(ref)(k)|.

    The supremum is evaluated out to where both CDFs provably exceed
    1 - 1e-12; beyond that the difference is below reporting precision.
    The pmf must carry essentially all of its mass: full support, or a
    truncated support whose cumulative mass reaches 1 - 1e-12.
    """
    probs = pmf.probs()
    cdf_v = np.cumsum(probs)
    total = float(cdf_v[-1])
    if pmf.support_max < pmf.n and total < 1.0 - 1e-12:
        raise ValidationError(
            f"pmf covers mass {total:.17g} on 0..{pmf.support_max}; "
            "need full support or cumulative mass >= 1 - 1e-12"
        )
    k_hi = max(pmf.support_max, ref.truncation_k(1e-12))
    cdf_t = ref.cdf_points(k_hi)
    if k_hi > pmf.support_max:
        pad = np.full(k_hi - pmf.support_max, cdf_v[-1])
        cdf_v = np.concatenate([cdf_v, pad])
    return float(np.max(np.abs(cdf_v - cdf_t)))


def tv_distance(pmf: Pmf, ref: PoissonRef) -> float:
    """Total-variation distance (1/2) sum over k of |pmf(k) - ref(k)|.

    Evaluated out to where the reference tail is certified below 1e-12,
    so the omitted contribution is below reporting precision.  Same mass
    requirement on the pmf as sup_cdf_distance.
    """
    probs = pmf.probs()
    total = float(probs.sum())
    if pmf.support_max < pmf.n and total < 1.0 - 1e-12:
        raise ValidationError(
            f"pmf covers mass {total:.17g} on 0..{pmf.support_max}; "
            "need full support or cumulative mass >= 1 - 1e-12"
        )
    k_hi = max(pmf.support_max, ref.truncation_k(1e-12))
    terms = ref.pmf_points(k_hi)
    padded = np.zeros(k_hi + 1)
    padded[: pmf.support_max + 1] = probs
    return 0.5 * float(np.abs(padded - terms).sum())
