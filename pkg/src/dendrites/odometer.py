"""Binary odometer, planar fiber comb, and the skew-product system.

States are triples (omega, eta, c): two eventually-zero binary sequences
(least significant bit first) and a fiber point.  One step applies the
odometer to omega, keeps eta, and moves c by the fiber map phi, which
climbs an enumerated comb of points P(t) (or its mirror Q(t)), consults a
timer and one bit of eta at the top of each column, and otherwise walks
limit points along the vertical axis toward their rest positions.

The comb enumerates, column by column from the right, the points with
x-coordinate x_n: first the y-rows (x_n, y_n) .. (x_n, y_1) bottom to top,
then the z-rows (x_n, z_{10^n}) .. (x_n, z_1).  Column n therefore holds
n + 10^n points and ends at the top index T_n; T_1 = 10, T_2 = 112.

Orbit distance streams are produced in vectorized blocks so that horizons
in the tens of millions stay cheap; the block engine emits bit-for-bit the
same float64 values as stepping one state at a time.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import DendritesError
from .spaces import BadParams, MetricSpace, validate_metric

#: Largest column index the 64-bit-safe enumeration supports.
MAX_COLUMN = 18


class IndexOverflow(DendritesError):
    """A fiber index left the 64-bit-safe range (columns beyond 18)."""


def top_time(n: int) -> int:
    """Index of the top point of column n; -1 for n = 0."""
    if n < 0:
        raise BadParams("column index must be nonnegative")
    if n > MAX_COLUMN:
        raise IndexOverflow(f"column {n} exceeds the safe range (max {MAX_COLUMN})")
    return n * (n + 1) // 2 + (10 ** (n + 1) - 10) // 9 - 1


_TOPS = [top_time(n) for n in range(MAX_COLUMN + 1)]


def column_of(t: int) -> int:
    """Column containing enumeration index t."""
    if t < 0:
        raise BadParams("fiber index must be nonnegative")
    if t > _TOPS[-1]:
        raise IndexOverflow(f"fiber index {t} exceeds the safe range")
    lo, hi = 1, MAX_COLUMN
    while lo < hi:
        mid = (lo + hi) // 2
        if _TOPS[mid] >= t:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class OmegaWord:
    """Eventually-zero binary sequence, least significant bit first.

    Stored bits are canonical (no trailing zeros), so equality and hashing
    agree with the semantic sequence.
    """

    bits: tuple[int, ...] = ()

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise BadParams("word bits must be 0 or 1")
        while bits and bits[-1] == 0:
            bits = bits[:-1]
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "OmegaWord":
        return cls(tuple(bits))

    @classmethod
    def from_string(cls, text: str) -> "OmegaWord":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise BadParams(f"not a bit string: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_int(cls, value: int) -> "OmegaWord":
        if value < 0:
            raise BadParams("words encode nonnegative values")
        bits = []
        while value:
            bits.append(value & 1)
            value >>= 1
        return cls(tuple(bits))

    def bit(self, i: int) -> int:
        return self.bits[i] if 0 <= i < len(self.bits) else 0

    def to_int(self) -> int:
        value = 0
        for i, b in enumerate(self.bits):
            value |= b << i
        return value

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits) or "0"


ZERO_WORD = OmegaWord(())


def tau(word: OmegaWord) -> OmegaWord:
    """The odometer: add one with carry, least significant bit first."""
    return OmegaWord.from_int(word.to_int() + 1)


def tau_power(word: OmegaWord, k: int) -> OmegaWord:
    """k-fold odometer application (k >= 0)."""
    if k < 0:
        raise BadParams("tau_power needs k >= 0")
    return OmegaWord.from_int(word.to_int() + k)


def d_omega(a: OmegaWord, b: OmegaWord) -> float:
    """2 ** -(first differing bit index); 0 for equal words."""
    diff = a.to_int() ^ b.to_int()
    if diff == 0:
        return 0.0
    return 2.0 ** -((diff & -diff).bit_length() - 1)


@dataclass(frozen=True)
class SequenceParams:
    """The three coordinate sequences of the comb.

    ``x``, ``y`` and ``z`` must accept integer numpy arrays (and plain
    ints) of indices i >= 1.  Constraints checked on the first 10_000
    indices: x(1) = y(1) = 1, z(1) = 3, all three strictly decreasing,
    x and y positive, z > 2.
    """

    x: Callable
    y: Callable
    z: Callable

    def __post_init__(self):
        idx = np.arange(1, 10_001, dtype=np.int64)
        for name, fn, first, floor in (("x", self.x, 1.0, 0.0), ("y", self.y, 1.0, 0.0), ("z", self.z, 3.0, 2.0)):
            vals = np.asarray(fn(idx), dtype=np.float64)
            if vals.shape != idx.shape:
                raise BadParams(f"sequence {name} must map index arrays elementwise")
            if vals[0] != first:
                raise BadParams(f"sequence {name} must start at {first}, got {vals[0]}")
            if not (np.diff(vals) < 0).all():
                raise BadParams(f"sequence {name} must be strictly decreasing")
            if not (vals > floor).all():
                raise BadParams(f"sequence {name} must stay above {floor}")

    @classmethod
    def default(cls) -> "SequenceParams":
        return cls(x=lambda i: 1.0 / i, y=lambda i: 1.0 / i, z=lambda i: 2.0 + 1.0 / i)


_DEFAULT_PARAMS: SequenceParams | None = None


def default_params() -> SequenceParams:
    global _DEFAULT_PARAMS
    if _DEFAULT_PARAMS is None:
        _DEFAULT_PARAMS = SequenceParams.default()
    return _DEFAULT_PARAMS


def _params(params: SequenceParams | None) -> SequenceParams:
    return params if params is not None else default_params()


@dataclass(frozen=True)
class FiberDecode:
    """Decoded comb point: coordinates, column, and top flag."""

    coords: tuple[float, float]
    column: int
    is_top: bool


def fiber_point(t: int, params: SequenceParams | None = None) -> FiberDecode:
    """Coordinates of the comb point with enumeration index t."""
    params = _params(params)
    n = column_of(t)
    base = _TOPS[n - 1] + 1
    r = t - base
    x = float(params.x(n))
    if r < n:
        y = float(params.y(n - r))
    else:
        y = float(params.z(10**n - (r - n)))
    return FiberDecode((x, y), n, t == _TOPS[n])


_FIBER_KINDS = ("P", "Q", "origin", "y", "two", "z")


@dataclass(frozen=True)
class FiberPoint:
    """A point of the fiber space: comb point, mirror point, or axis point.

    ``P``/``Q`` carry an enumeration index; axis kinds ``y`` and ``z``
    carry a sign and a sequence index j >= 1 (z with j = 1 is (0, +-3));
    ``two`` is (0, +-2) and ``origin`` the fixed origin.
    """

    kind: str
    index: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.kind not in _FIBER_KINDS:
            raise BadParams(f"unknown fiber kind {self.kind!r}")
        if self.sign not in (-1, 1):
            raise BadParams("fiber sign must be +-1")
        if self.kind in ("P", "Q"):
            if self.index < 0:
                raise BadParams("enumeration index must be nonnegative")
            object.__setattr__(self, "sign", 1 if self.kind == "P" else -1)
        elif self.kind in ("y", "z"):
            if self.index < 1:
                raise BadParams("axis sequence index must be >= 1")
        else:
            object.__setattr__(self, "index", 0)
            if self.kind == "origin":
                object.__setattr__(self, "sign", 1)

    def coords(self, params: SequenceParams | None = None) -> tuple[float, float]:
        params = _params(params)
        if self.kind in ("P", "Q"):
            x, y = fiber_point(self.index, params).coords
            return (x, y) if self.kind == "P" else (x, -y)
        if self.kind == "origin":
            return (0.0, 0.0)
        if self.kind == "two":
            return (0.0, self.sign * 2.0)
        if self.kind == "y":
            return (0.0, self.sign * float(params.y(self.index)))
        return (0.0, self.sign * float(params.z(self.index)))

    def __str__(self) -> str:
        if self.kind in ("P", "Q"):
            return f"{self.kind}:{self.index}"
        if self.kind == "origin":
            return "origin"
        s = "+" if self.sign > 0 else "-"
        if self.kind == "two":
            return f"two{s}"
        return f"{self.kind}{s}:{self.index}"


ORIGIN = FiberPoint("origin")

_FIBER_RE = re.compile(r"^(?:(P|Q):(\d+)|origin|(y|z)([+-]):(\d+)|two([+-]))$", re.IGNORECASE)


def parse_fiber(text: str) -> FiberPoint:
    """Parse fiber literals such as ``P:0``, ``origin``, ``y+:2``, ``two-``."""
    m = _FIBER_RE.match(text.strip())
    if not m:
        raise BadParams(f"cannot parse fiber point {text!r}")
    if m.group(1):
        return FiberPoint(m.group(1).upper(), int(m.group(2)))
    if m.group(3):
        return FiberPoint(m.group(3).lower(), int(m.group(5)), 1 if m.group(4) == "+" else -1)
    if m.group(6):
        return FiberPoint("two", sign=1 if m.group(6) == "+" else -1)
    return ORIGIN


def timer_matches(omega: OmegaWord, n: int) -> bool:
    """Do bits 0..n of omega agree with the binary expansion of T_n?

    Equivalent to d_omega(omega, tau^{T_n}(zero)) < 2**-n.
    """
    mask = (1 << (n + 1)) - 1
    return (omega.to_int() & mask) == (_TOPS[n] & mask)


def phi(
    omega: OmegaWord, eta: OmegaWord, c: FiberPoint, params: SequenceParams | None = None
) -> FiberPoint:
    """One move of the fiber map.

    Comb points advance along the enumeration.  At the top of column n the
    orbit continues into column n + 1, on the half selected by eta's bit n,
    only if the timer matches (bits 0..n of omega equal those of T_n);
    otherwise it drops to the origin.  Axis points walk down their sequence
    index toward (0, +-2) (y-points) or the origin (z-points); the origin
    and (0, +-2) stay fixed.
    """
    if c.kind in ("P", "Q"):
        t = c.index
        n = column_of(t)
        if t != _TOPS[n]:
            return FiberPoint(c.kind, t + 1)
        if not timer_matches(omega, n):
            return ORIGIN
        if n + 1 > MAX_COLUMN:
            raise IndexOverflow(f"orbit leaves column {n} but column {n + 1} is out of range")
        return FiberPoint("Q" if eta.bit(n) else "P", t + 1)
    if c.kind == "y":
        return FiberPoint("y", c.index - 1, c.sign) if c.index >= 2 else FiberPoint("two", sign=c.sign)
    if c.kind == "z":
        return FiberPoint("z", c.index - 1, c.sign) if c.index >= 2 else ORIGIN
    return c


@dataclass(frozen=True)
class SkewState:
    """A state (omega, eta, c) of the skew product."""

    omega: OmegaWord
    eta: OmegaWord
    c: FiberPoint

    def __str__(self) -> str:
        return f"({self.omega}, {self.eta}, {self.c})"


def step(state: SkewState, params: SequenceParams | None = None) -> SkewState:
    """One application of the skew map: advance omega, move the fiber."""
    return SkewState(tau(state.omega), state.eta, phi(state.omega, state.eta, state.c, params))


def skew_distance(a: SkewState, b: SkewState, params: SequenceParams | None = None) -> float:
    """max of the two word distances and the max-coordinate fiber distance."""
    params = _params(params)
    xa, ya = a.c.coords(params)
    xb, yb = b.c.coords(params)
    dc = max(abs(xa - xb), abs(ya - yb))
    return max(d_omega(a.omega, b.omega), d_omega(a.eta, b.eta), dc)


class _FiberTrack:
    """Vectorized coordinate stream of one state's fiber orbit."""

    def __init__(self, state: SkewState, params: SequenceParams):
        self.params = params
        self.omega0 = state.omega.to_int()
        self.eta = state.eta
        self.kind = state.c.kind
        self.index = state.c.index
        self.sign = state.c.sign
        self.t = 0  # absolute time of the next emission

    def _transition_at_top(self, n: int):
        """Apply the top-of-column rule; the top was emitted at time t-1."""
        omega_then = OmegaWord.from_int(self.omega0 + self.t - 1)
        if not timer_matches(omega_then, n):
            self.kind, self.index, self.sign = "origin", 0, 1
            return
        if n + 1 > MAX_COLUMN:
            raise IndexOverflow(f"orbit leaves column {n} but column {n + 1} is out of range")
        self.kind = "Q" if self.eta.bit(n) else "P"
        self.sign = 1 if self.kind == "P" else -1
        self.index = _TOPS[n] + 1

    def _emit(self, xs: np.ndarray, ys: np.ndarray, at: int, need: int) -> int:
        p = self.params
        if self.kind == "origin":
            xs[at : at + need] = 0.0
            ys[at : at + need] = 0.0
            self.t += need
            return need
        if self.kind == "two":
            xs[at : at + need] = 0.0
            ys[at : at + need] = self.sign * 2.0
            self.t += need
            return need
        if self.kind in ("y", "z"):
            run = min(need, self.index)
            j = np.arange(self.index, self.index - run, -1, dtype=np.int64)
            vals = np.asarray((p.y if self.kind == "y" else p.z)(j), dtype=np.float64)
            xs[at : at + run] = 0.0
            ys[at : at + run] = vals * self.sign if self.sign < 0 else vals
            self.index -= run
            self.t += run
            if self.index == 0:
                if self.kind == "y":
                    self.kind = "two"
                else:
                    self.kind, self.sign = "origin", 1
                self.index = 0
            return run
        # comb walk on half P or Q
        n = column_of(self.index)
        top = _TOPS[n]
        run = min(need, top - self.index + 1)
        base = _TOPS[n - 1] + 1
        r = np.arange(self.index - base, self.index - base + run, dtype=np.int64)
        yvals = np.empty(run, dtype=np.float64)
        y_rows = r < n
        if y_rows.any():
            yvals[y_rows] = np.asarray(p.y(n - r[y_rows]), dtype=np.float64)
        z_rows = ~y_rows
        if z_rows.any():
            yvals[z_rows] = np.asarray(p.z(10**n - (r[z_rows] - n)), dtype=np.float64)
        xs[at : at + run] = float(p.x(n))
        ys[at : at + run] = -yvals if self.kind == "Q" else yvals
        self.index += run
        self.t += run
        if self.index > top:
            self._transition_at_top(n)
        return run

    def take(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        xs = np.empty(count, dtype=np.float64)
        ys = np.empty(count, dtype=np.float64)
        filled = 0
        while filled < count:
            filled += self._emit(xs, ys, filled, count - filled)
        return xs, ys


def orbit_distance_chunks(
    a: SkewState,
    b: SkewState,
    horizon: int,
    params: SequenceParams | None = None,
    chunk: int = 1 << 18,
) -> Iterator[np.ndarray]:
    """The first ``horizon`` orbit distances, yielded as float64 blocks.

    Block boundaries are an implementation detail; concatenated, the blocks
    equal the per-step distances of repeated :func:`step` application.
    """
    if horizon < 0:
        raise BadParams("horizon must be nonnegative")
    params = _params(params)
    base = max(d_omega(a.omega, b.omega), d_omega(a.eta, b.eta))
    track_a = _FiberTrack(a, params)
    track_b = _FiberTrack(b, params)
    remaining = horizon
    while remaining > 0:
        m = min(chunk, remaining)
        xa, ya = track_a.take(m)
        xb, yb = track_b.take(m)
        dc = np.maximum(np.abs(xa - xb), np.abs(ya - yb))
        yield np.maximum(dc, base)
        remaining -= m


def orbit_distances(
    a: SkewState,
    b: SkewState,
    horizon: int,
    params: SequenceParams | None = None,
) -> Iterator[float]:
    """Stream of distances between the two orbits at times 0..horizon-1."""
    for block in orbit_distance_chunks(a, b, horizon, params):
        yield from block.tolist()


@dataclass(frozen=True)
class TruncatedSystem:
    """A finite truncation of the skew product, as a metric space + map."""

    space: MetricSpace
    f: tuple[int, ...]
    states: tuple[SkewState, ...]


def truncated_state_space(
    omega_bits: int = 2,
    eta_bits: int = 2,
    columns: int = 1,
    params: SequenceParams | None = None,
) -> TruncatedSystem:
    """Finite prefixes of both word coordinates times a comb prefix.

    The omega factor becomes a cyclic odometer on ``2**omega_bits`` words
    (the carry out of the highest bit is dropped), the fiber keeps the comb
    points of columns 1..``columns`` plus the origin, and any continuation
    past the last retained column falls to the origin.  The product metric
    is the max of the three factor metrics.
    """
    if omega_bits < 1 or eta_bits < 1 or columns < 1:
        raise BadParams("truncation sizes must be >= 1")
    params = _params(params)
    top = top_time(columns)
    fibers: list[FiberPoint] = [FiberPoint("P", t) for t in range(top + 1)]
    fibers += [FiberPoint("Q", t) for t in range(top + 1)]
    fibers.append(ORIGIN)

    n_w, n_e, n_c = 2**omega_bits, 2**eta_bits, len(fibers)

    def word_table(bits: int) -> np.ndarray:
        size = 2**bits
        table = np.zeros((size, size))
        for i in range(size):
            for j in range(i + 1, size):
                diff = i ^ j
                table[i, j] = table[j, i] = 2.0 ** -((diff & -diff).bit_length() - 1)
        return table

    coords = np.array([f.coords(params) for f in fibers])
    dc = np.maximum(
        np.abs(coords[:, 0][:, None] - coords[:, 0][None, :]),
        np.abs(coords[:, 1][:, None] - coords[:, 1][None, :]),
    )
    matrix = np.zeros((1, 1))
    for factor in (word_table(omega_bits), word_table(eta_bits), dc):
        k = factor.shape[0]
        matrix = np.maximum(
            np.repeat(np.repeat(matrix, k, axis=0), k, axis=1), np.tile(factor, matrix.shape)
        )

    def bit_label(value: int, width: int) -> str:
        return "".join(str((value >> i) & 1) for i in range(width))

    states: list[SkewState] = []
    labels: list[str] = []
    for w in range(n_w):
        for e in range(n_e):
            for fiber in fibers:
                states.append(SkewState(OmegaWord.from_int(w), OmegaWord.from_int(e), fiber))
                labels.append(f"w{bit_label(w, omega_bits)}|e{bit_label(e, eta_bits)}|{fiber}")

    fiber_index = {f: i for i, f in enumerate(fibers)}
    images: list[int] = []
    for w in range(n_w):
        w_next = (w + 1) % n_w
        for e in range(n_e):
            eta = OmegaWord.from_int(e)
            omega = OmegaWord.from_int(w)
            for fiber in fibers:
                nxt = phi(omega, eta, fiber, params)
                if nxt.kind in ("P", "Q") and nxt.index > top:
                    nxt = ORIGIN
                images.append((w_next * n_e + e) * n_c + fiber_index[nxt])

    space = validate_metric(labels, matrix)
    return TruncatedSystem(space, tuple(images), tuple(states))
