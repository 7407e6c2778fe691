"""Difference-bound matrices over integer clock constants.

A bound ``(c, <=)`` or ``(c, <)`` on ``x_i - x_j`` is packed into one int,
``2*c + 1`` for non-strict and ``2*c`` for strict, so that a smaller packed
value is always the tighter bound and addition stays cheap.  Clock 0 is the
constant-zero reference clock.  A zone of ``dim`` clocks is a flat row-major
tuple of ``dim*dim`` packed bounds; ``Zone`` wraps one for the public API.
"""

from __future__ import annotations

from dataclasses import dataclass

INF = 1 << 62
LE_ZERO = 1
LT_ZERO = 0


def bound(value: int, strict: bool = False) -> int:
    return 2 * value + (0 if strict else 1)


def bound_value(b: int) -> int:
    return b >> 1


def is_strict(b: int) -> bool:
    return not (b & 1)


def add(a: int, b: int) -> int:
    if a >= INF or b >= INF:
        return INF
    return a + b - ((a | b) & 1)


def negate_bound(b: int) -> int:
    """Bound of the complement: not (x <= c) is (-x < -c)."""
    return 1 - b


def fmt_bound(b: int) -> str:
    if b >= INF:
        return "inf"
    return f"{'<' if is_strict(b) else '<='}{bound_value(b)}"


# --- raw tuple operations (hot path) ----------------------------------------

def zero(dim: int) -> tuple:
    return (LE_ZERO,) * (dim * dim)


def universe(dim: int) -> tuple:
    d = [INF] * (dim * dim)
    for i in range(dim):
        d[i * dim + i] = LE_ZERO
        d[i] = LE_ZERO  # 0 - x_i <= 0: clocks are non-negative
    return tuple(d)


def close(d, dim: int):
    """Floyd-Warshall closure; returns None when the zone is empty."""
    d = list(d)
    for k in range(dim):
        rk = k * dim
        for i in range(dim):
            ri = i * dim
            dik = d[ri + k]
            if dik >= INF:
                continue
            for j in range(dim):
                dkj = d[rk + j]
                if dkj >= INF:
                    continue
                s = dik + dkj - ((dik | dkj) & 1)
                if s < d[ri + j]:
                    d[ri + j] = s
        for i in range(dim):
            if d[i * dim + i] < LE_ZERO:
                return None
    return tuple(d)


def is_canonical(d, dim: int) -> bool:
    c = close(d, dim)
    return c is not None and c == tuple(d)


def up(d, dim: int) -> tuple:
    d = list(d)
    for i in range(1, dim):
        d[i * dim] = INF
    return tuple(d)


def constrain(d, dim: int, i: int, j: int, b: int):
    """Intersect canonical ``d`` with ``x_i - x_j (b)``; None when empty."""
    if b >= d[i * dim + j]:
        return d
    if add(d[j * dim + i], b) < LE_ZERO:
        return None
    d = list(d)
    d[i * dim + j] = b
    # Incremental closure through the tightened edge i -> j.
    col_i = [d[k * dim + i] for k in range(dim)]
    row_j = d[j * dim: j * dim + dim]
    for k in range(dim):
        dki = col_i[k]
        if dki >= INF:
            continue
        via = add(dki, b)
        rk = k * dim
        for m in range(dim):
            djm = row_j[m]
            if djm >= INF:
                continue
            s = add(via, djm)
            if s < d[rk + m]:
                d[rk + m] = s
    return tuple(d)


def reset(d, dim: int, x: int) -> tuple:
    d = list(d)
    rx = x * dim
    for j in range(dim):
        d[rx + j] = d[j]          # x - x_j := 0 - x_j
        d[j * dim + x] = d[j * dim]  # x_j - x := x_j - 0
    d[rx + x] = LE_ZERO
    return tuple(d)


def includes(big, small) -> bool:
    """True iff zone ``small`` is a subset of ``big`` (both canonical)."""
    for a, b in zip(small, big):
        if a > b:
            return False
    return True


def extrapolate(d, dim: int, maxc) -> tuple:
    """Classic max-constant abstraction, then re-close.

    Bounds above ``(M_i, <=)`` are dropped and bounds below ``(-M_j, <)``
    are relaxed to ``(-M_j, <)``.  Sound and complete for location
    reachability when no guard compares two clocks.
    """
    out = list(d)
    changed = False
    for i in range(dim):
        ri = i * dim
        for j in range(dim):
            if i == j:
                continue
            b = out[ri + j]
            if b >= INF:
                continue
            if i != 0 and b > 2 * maxc[i] + 1:
                out[ri + j] = INF
                changed = True
            elif j != 0 and b < -2 * maxc[j]:
                out[ri + j] = -2 * maxc[j]
                changed = True
    if not changed:
        return tuple(d)
    return close(out, dim)


def delay_closed_point(dim: int, values) -> tuple:
    """Zone ``{x_i == values[i-1]}`` for integer values (used by tests)."""
    d = list(zero(dim))
    for i in range(1, dim):
        d[i * dim] = bound(values[i - 1])
        d[i] = bound(-values[i - 1])
    return close(d, dim)


# --- public value type --------------------------------------------------------

@dataclass(frozen=True)
class Zone:
    """A convex set of clock valuations, as a difference-bound matrix.

    ``bounds`` is ``None`` for the empty zone.  Clock indices run from 1;
    index 0 is the reference clock.
    """

    dim: int
    bounds: tuple | None
    canonical: bool = True

    @classmethod
    def zero(cls, nclocks: int) -> "Zone":
        return cls(nclocks + 1, zero(nclocks + 1))

    @classmethod
    def universe(cls, nclocks: int) -> "Zone":
        return cls(nclocks + 1, universe(nclocks + 1))

    @classmethod
    def empty(cls, nclocks: int) -> "Zone":
        return cls(nclocks + 1, None)

    @classmethod
    def from_constraints(cls, nclocks: int, constraints) -> "Zone":
        """Build a raw (uncanonical) zone from ``(i, j, packed_bound)`` triples."""
        dim = nclocks + 1
        d = list(universe(dim))
        for i, j, b in constraints:
            if b < d[i * dim + j]:
                d[i * dim + j] = b
        return cls(dim, tuple(d), canonical=False)

    @property
    def is_empty(self) -> bool:
        return self.bounds is None

    def get(self, i: int, j: int) -> int:
        return self.bounds[i * self.dim + j]

    def canonical_form(self) -> "Zone":
        return zone_canonical(self)

    def __le__(self, other: "Zone") -> bool:
        if self.bounds is None:
            return True
        if other.bounds is None:
            return False
        return includes(other.bounds, self.bounds)

    def __str__(self) -> str:
        if self.bounds is None:
            return "{empty}"
        parts = []
        for i in range(self.dim):
            for j in range(self.dim):
                b = self.get(i, j)
                if i == j or b >= INF:
                    continue
                if j == 0 and i != 0:
                    parts.append(f"x{i}{fmt_bound(b)}")
                elif i == 0:
                    if b != LE_ZERO:
                        parts.append(f"-x{j}{fmt_bound(b)}")
                else:
                    parts.append(f"x{i}-x{j}{fmt_bound(b)}")
        return "{" + ", ".join(parts) + "}"


def zone_canonical(z: Zone) -> Zone:
    """All-pairs shortest-path closure; an inconsistent zone comes back empty."""
    if z.bounds is None:
        return z
    c = close(z.bounds, z.dim)
    return Zone(z.dim, c)


def zone_delay(z: Zone) -> Zone:
    """Time successors: drop every clock's upper bound, keep differences."""
    if z.bounds is None:
        return z
    return Zone(z.dim, up(z.bounds, z.dim))


def zone_constrain(z: Zone, i: int, j: int, b: int) -> Zone:
    """Intersect with ``x_i - x_j`` bounded by packed bound ``b``."""
    if z.bounds is None:
        return z
    return Zone(z.dim, constrain(z.bounds, z.dim, i, j, b))


def zone_reset(z: Zone, clocks) -> Zone:
    if z.bounds is None:
        return z
    d = z.bounds
    for x in clocks:
        d = reset(d, z.dim, x)
    return Zone(z.dim, d)
