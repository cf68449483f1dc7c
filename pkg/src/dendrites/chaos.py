"""Distributional-chaos evidence for orbit pairs of the skew product.

Given the stream of distances between two orbits, the lower/upper
distribution values at a threshold s are the min/max over a set of
checkpoint horizons N of (1/N) * #{0 <= i < N : d_i < s}.  These are
explicitly finite-horizon estimates: the checkpoint list travels with
every result, and no limit is claimed.

A pair is flagged as DC3 evidence when the upper and lower estimates
stay separated by more than a configurable gap across a whole threshold
interval.  Li-Yorke proximality, by contrast, can be ruled out exactly:
both word coordinates move by isometries, so the distance between two
orbits never drops below the initial word distances.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import DendritesError
from .spaces import BadParams
from .odometer import (
    MAX_COLUMN,
    OmegaWord,
    SequenceParams,
    SkewState,
    ZERO_WORD,
    d_omega,
    default_params,
    orbit_distance_chunks,
    top_time,
)


class ShortStream(DendritesError):
    """The distance stream ended before the largest checkpoint."""


class CountTooLarge(DendritesError):
    """The coding positions within the stated depth cannot host the family."""


@dataclass(frozen=True, eq=False)
class DistributionProfile:
    """Empirical distance-distribution estimates at several horizons.

    ``freqs[k, j]`` is the fraction of times i < checkpoints[k] with
    d_i < thresholds[j] (strict inequality).  ``lower``/``upper`` are the
    min/max over checkpoints at each threshold.
    """

    thresholds: tuple[float, ...]
    checkpoints: tuple[int, ...]
    counts: np.ndarray
    freqs: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return self.freqs.min(axis=0)

    @property
    def upper(self) -> np.ndarray:
        return self.freqs.max(axis=0)


@dataclass(frozen=True)
class DC3Evidence:
    """A threshold interval where the estimate envelopes stay separated.

    ``gap`` is the smallest upper-lower separation observed across the
    interval; ``checkpoints`` echoes the horizons the estimate used.
    """

    s_lo: float
    s_hi: float
    gap: float
    checkpoints: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PairVerdict:
    """Classification of one orbit pair.

    ``proximal_lower_bound`` is an exact lower bound on every orbit
    distance (None when classifying a bare distance stream, where the
    word coordinates are unknown).  ``li_yorke_possible`` is False
    whenever that bound is positive or the states are identical.
    """

    proximal_lower_bound: float | None
    li_yorke_possible: bool | None
    dc3: DC3Evidence | None
    profile: DistributionProfile


def distribution_profile(
    distances: Iterable, thresholds: Iterable[float], checkpoints: Iterable[int]
) -> DistributionProfile:
    """Count d_i < s over i < N for every threshold s and checkpoint N.

    ``distances`` may yield floats or numpy blocks (block boundaries are
    irrelevant); it must supply at least max(checkpoints) values.
    """
    thr = tuple(float(s) for s in thresholds)
    cps = tuple(int(n) for n in checkpoints)
    if not thr or any(b <= a for a, b in zip(thr, thr[1:])):
        raise BadParams("thresholds must be nonempty and strictly ascending")
    if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
        raise BadParams("checkpoints must be positive and strictly ascending")

    counts = np.zeros((len(cps), len(thr)), dtype=np.int64)
    cum = np.zeros(len(thr), dtype=np.int64)

    def absorb(segment: np.ndarray):
        for j, s in enumerate(thr):
            cum[j] += np.count_nonzero(segment < s)

    t = 0
    ci = 0
    for item in distances:
        if ci >= len(cps):
            break
        block = np.atleast_1d(np.asarray(item, dtype=np.float64))
        m = block.shape[0]
        off = 0
        while ci < len(cps) and cps[ci] <= t + m:
            cut = cps[ci] - t
            absorb(block[off:cut])
            off = cut
            counts[ci] = cum
            ci += 1
        if ci < len(cps):
            absorb(block[off:])
        t += m
    if ci < len(cps):
        raise ShortStream(f"stream ended at {t} values; checkpoint {cps[ci]} unreached")

    freqs = counts / np.array(cps, dtype=np.float64)[:, None]
    counts.setflags(write=False)
    freqs.setflags(write=False)
    return DistributionProfile(thr, cps, counts, freqs)


def default_dc3_interval(params: SequenceParams | None = None) -> tuple[float, float]:
    """Threshold interval where opposite-half rows are separable.

    Opposite-half y-rows sit at fiber distance 2*y_j <= 2*y(1) while
    opposite-half z-rows stay above 2*lim z; the interval between those
    envelopes is where the agree/disagree column structure shows.  The
    limit of z is estimated at a deep probe index.  Defaults to (2, 4)
    up to the probe error.
    """
    params = params if params is not None else default_params()
    lo = max(1.0, 2.0 * float(params.y(1)))
    hi = 2.0 * float(params.z(10**9))
    return lo, hi


def evidence_from_profile(profile: DistributionProfile, gap: float = 0.5) -> DC3Evidence | None:
    """Widest threshold run where upper - lower exceeds ``gap``; None if none."""
    spread = profile.upper - profile.lower
    above = spread > gap
    best: tuple[float, int, int] | None = None
    i = 0
    thr = profile.thresholds
    while i < len(thr):
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(thr) and above[j + 1]:
            j += 1
        width = thr[j] - thr[i]
        if best is None or width > best[0]:
            best = (width, i, j)
        i = j + 1
    if best is None:
        return None
    _, i, j = best
    return DC3Evidence(
        s_lo=thr[i],
        s_hi=thr[j],
        gap=float(spread[i : j + 1].min()),
        checkpoints=profile.checkpoints,
    )


def column_checkpoints(horizon: int) -> tuple[int, ...]:
    """All column top-times T_n that fit in a window of ``horizon`` steps."""
    cps = []
    for n in range(1, MAX_COLUMN + 1):
        if top_time(n) > horizon:
            break
        cps.append(top_time(n))
    return tuple(cps)


def classify_pair(
    a: SkewState,
    b: SkewState,
    horizon: int | None = None,
    thresholds: Iterable[float] | None = None,
    checkpoints: Iterable[int] | None = None,
    *,
    params: SequenceParams | None = None,
    gap: float = 0.5,
) -> PairVerdict:
    """Run the orbit pair and classify it.

    Defaults: checkpoints are every column top-time within the horizon
    (horizon itself defaults to the column-7 top); thresholds are a grid
    over :func:`default_dc3_interval`.  The proximal lower bound is the
    max of the two initial word distances, exact for every step because
    both word maps are isometries.
    """
    params = params if params is not None else default_params()
    if checkpoints is None:
        if horizon is None:
            horizon = top_time(7)
        cps = column_checkpoints(horizon)
        if not cps:
            raise BadParams(f"horizon {horizon} is below the first column top")
    else:
        cps = tuple(int(n) for n in checkpoints)
        if horizon is None:
            horizon = max(cps)
    if horizon < max(cps):
        raise BadParams("horizon shorter than the largest checkpoint")
    if thresholds is None:
        lo, hi = default_dc3_interval(params)
        thresholds = tuple(np.linspace(lo, hi, 9).tolist())

    bound = max(d_omega(a.omega, b.omega), d_omega(a.eta, b.eta))
    profile = distribution_profile(
        orbit_distance_chunks(a, b, horizon, params), thresholds, cps
    )
    return PairVerdict(
        proximal_lower_bound=bound,
        li_yorke_possible=(bound == 0.0 and a != b),
        dc3=evidence_from_profile(profile, gap),
        profile=profile,
    )


def verdict_to_json(verdict: PairVerdict) -> dict:
    dc3 = None
    if verdict.dc3 is not None:
        dc3 = {
            "s_lo": verdict.dc3.s_lo,
            "s_hi": verdict.dc3.s_hi,
            "gap": verdict.dc3.gap,
            "checkpoints": list(verdict.dc3.checkpoints),
        }
    return {
        "proximal_lower_bound": verdict.proximal_lower_bound,
        "li_yorke_possible": verdict.li_yorke_possible,
        "dc3": dc3,
    }


def _verify_family(words: list[OmegaWord], coding: list[int], depth: int) -> bool:
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            wi, wj = words[i], words[j]
            if all(wi.bit(p) == wj.bit(p) for p in coding):
                return False
            agreements = sum(wi.bit(p) == wj.bit(p) for p in range(depth))
            disagreements = sum(wi.bit(p) != wj.bit(p) for p in range(depth))
            if agreements == 0 or disagreements == 0:
                return False
    return True


def scrambled_family(
    pattern: Callable[[int], bool], count: int, depth: int = 64
) -> tuple[OmegaWord, ...]:
    """Control words equal off the coding positions, distinct on them.

    ``pattern(p)`` marks position p as coding; all words are 0 on shared
    positions and beyond ``depth``, so any two members agree there.  For
    two words the second takes 1 on every coding position (disagreement
    at every coding slot).  For more, the coding positions split into
    consecutive blocks of ceil(log2 count) + 2 slots holding the bits of
    the member index, its parity, and a constant 0, repeated across the
    depth: each pair then disagrees at least twice and agrees at least
    once inside every full block.  Pairwise agreement/disagreement within
    the depth is re-verified after construction.
    """
    if count < 1:
        raise BadParams("family size must be >= 1")
    if depth < 1:
        raise BadParams("verification depth must be >= 1")
    if count == 1:
        return (ZERO_WORD,)

    coding = [p for p in range(depth) if pattern(p)]
    if not coding:
        raise CountTooLarge("no coding positions within the verification depth")

    def word_from_slots(slot_bits: Callable[[int], int]) -> OmegaWord:
        bits = [0] * depth
        for slot, pos in enumerate(coding):
            bits[pos] = slot_bits(slot)
        return OmegaWord.from_bits(bits)

    if count == 2:
        words = [ZERO_WORD, word_from_slots(lambda slot: 1)]
        if _verify_family(words, coding, depth):
            return tuple(words)

    width = (count - 1).bit_length()
    block = width + 2
    if len(coding) < block:
        raise CountTooLarge(
            f"{count} members need {block} coding positions within depth {depth}, "
            f"found {len(coding)}"
        )

    def member(k: int) -> OmegaWord:
        pattern_bits = [(k >> i) & 1 for i in range(width)] + [bin(k).count("1") & 1, 0]
        return word_from_slots(lambda slot: pattern_bits[slot % block] if slot // block < len(coding) // block else 0)

    words = [member(k) for k in range(count)]
    if not _verify_family(words, coding, depth):
        raise CountTooLarge("family verification failed at the stated depth")
    return tuple(words)
