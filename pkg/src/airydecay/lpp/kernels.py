"""
Compiled dynamic-programming kernels for exponential last passage percolation.

Weights are never drawn from a stream: the weight of cell ``(x, y)`` in replicate
``r`` is a pure function of ``(seed, r, x, y)`` obtained by SplitMix64 mixing, so
any kernel can regenerate any cell in any order with O(N) memory.

Sweeps run along anti-diagonals ``x + y = t``. A sweep from sources on ``x + y = t0``
with ``x`` in ``[k_lo, k_hi]`` holds the diagonal ``t`` at indices ``j = x - k_lo``.
Predecessor codes: 0 came from below (``-e2``), 1 came from the left (``-e1``),
2 was a tie and resolved to below.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_COORDINATE_SHIFT = 1 << 32
_UNIT = 2.0 ** -53

FROM_BELOW = 0
FROM_LEFT = 1
TIE = 2

_jit = dict(cache=True, nogil=True)


@nb.njit(**_jit)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


@nb.njit(**_jit)
def cell_weight(seed, replicate, x, y):
    """Exp(1) weight of cell ``(x, y)``, strictly positive"""

    h = _mix(np.uint64(seed) ^ _GOLDEN)
    h = _mix(h + np.uint64(replicate))
    h = _mix(h + np.uint64(x + _COORDINATE_SHIFT))
    h = _mix(h + np.uint64(y + _COORDINATE_SHIFT))
    # midpoint of a 2^-53 bin, so U is never 0 or 1
    uniform = (np.float64(h >> np.uint64(11)) + 0.5) * _UNIT
    return -np.log(uniform)


@nb.njit(parallel=True, **_jit)
def fill_weights(seed, replicate, x0, y0, nx, ny):
    """Materialises the block ``[x0, x0 + nx) x [y0, y0 + ny)`` indexed ``[x - x0, y - y0]``"""

    out = np.empty((nx, ny))
    for i in nb.prange(nx):
        for j in range(ny):
            out[i, j] = cell_weight(seed, replicate, x0 + i, y0 + j)
    return out


@nb.njit(**_jit)
def _diagonal_step(previous, current, codes, seed, replicate, x_lo, t, width):
    # previous holds `width` values of diagonal t - 1; current receives width + 1 values
    for j in range(width + 1):
        below = previous[j] if j < width else -np.inf
        left = previous[j - 1] if j > 0 else -np.inf
        if below >= left:
            best = below
            codes[j] = TIE if below == left else FROM_BELOW
        else:
            best = left
            codes[j] = FROM_LEFT
        x = x_lo + j
        current[j] = cell_weight(seed, replicate, x, t - x) + best


@nb.njit(**_jit)
def line_sweep(seed, replicate, k_lo, k_hi, t0, t1):
    """Point-to-line (or interval-to-line) passage time

    Sources are the cells ``(k, t0 - k)`` for ``k`` in ``[k_lo, k_hi]``, the target is
    the line ``x + y = t1``. Returns the passage time and the first maximising ``x``.
    """

    width = k_hi - k_lo + 1
    size = width + t1 - t0
    previous = np.empty(size)
    current = np.empty(size)
    codes = np.empty(size, dtype=np.uint8)
    for j in range(width):
        x = k_lo + j
        previous[j] = cell_weight(seed, replicate, x, t0 - x)

    for t in range(t0 + 1, t1 + 1):
        _diagonal_step(previous, current, codes, seed, replicate, k_lo, t, width)
        previous, current = current, previous
        width += 1

    best = -np.inf
    x_end = k_lo
    for j in range(width):
        if previous[j] > best:
            best = previous[j]
            x_end = k_lo + j
    return best, x_end


@nb.njit(**_jit)
def point_sweep(seed, replicate, x0, y0, x1, y1):
    """Point-to-point passage time from ``(x0, y0)`` to ``(x1, y1)``, row by row"""

    width = x1 - x0 + 1
    row = np.empty(width)
    for y in range(y0, y1 + 1):
        for i in range(width):
            if y == y0:
                best = row[i - 1] if i > 0 else 0.0
            elif i == 0:
                best = row[0]
            else:
                below = row[i]
                left = row[i - 1]
                best = below if below >= left else left
            row[i] = cell_weight(seed, replicate, x0 + i, y) + best
    return row[width - 1]


@nb.njit(**_jit)
def line_geodesic(seed, replicate, k, t0, t1):
    """Geodesic from ``(k, t0 - k)`` to the line ``x + y = t1``

    Returns the path value summed along the path in sweep order, the ``x`` of the path
    on every diagonal ``t0..t1`` and the number of tied steps on the path.
    """

    steps = t1 - t0
    codes = np.zeros((steps + 1, steps + 1), dtype=np.uint8)
    previous = np.empty(steps + 1)
    current = np.empty(steps + 1)
    previous[0] = cell_weight(seed, replicate, k, t0 - k)
    width = 1
    for s in range(1, steps + 1):
        _diagonal_step(previous, current, codes[s], seed, replicate, k, t0 + s, width)
        previous, current = current, previous
        width += 1

    j = 0
    for i in range(width):
        if previous[i] > previous[j]:
            j = i

    xs = np.empty(steps + 1, dtype=np.int64)
    xs[steps] = k + j
    ties = 0
    for s in range(steps, 0, -1):
        code = codes[s, j]
        if code == TIE:
            ties += 1
        elif code == FROM_LEFT:
            j -= 1
        xs[s - 1] = k + j

    value = 0.0
    for s in range(steps + 1):
        value = cell_weight(seed, replicate, xs[s], t0 + s - xs[s]) + value
    return value, xs, ties


@nb.njit(parallel=True, **_jit)
def line_batch(seed, first, count, sources, t1):
    """``L_{(k, -k), x + y = t1}`` for every ``k`` in `sources`, one row per replicate"""

    out = np.empty((count, sources.size))
    for r in nb.prange(count):
        for m in range(sources.size):
            out[r, m] = line_sweep(seed, first + r, sources[m], sources[m], 0, t1)[0]
    return out


@nb.njit(parallel=True, **_jit)
def source_line_batch(seed, first, count, x0, y0, t1):
    out = np.empty(count)
    for r in nb.prange(count):
        out[r] = line_sweep(seed, first + r, x0, x0, x0 + y0, t1)[0]
    return out


@nb.njit(parallel=True, **_jit)
def interval_batch(seed, first, count, k_lo, k_hi, t1):
    """Interval-to-line passage times from the sources ``(k, -k)``, ``k_lo <= k <= k_hi``"""

    out = np.empty(count)
    for r in nb.prange(count):
        out[r] = line_sweep(seed, first + r, k_lo, k_hi, 0, t1)[0]
    return out


@nb.njit(parallel=True, **_jit)
def point_batch(seed, first, count, x0, y0, x1, y1):
    out = np.empty(count)
    for r in nb.prange(count):
        out[r] = point_sweep(seed, first + r, x0, y0, x1, y1)
    return out


@nb.njit(parallel=True, **_jit)
def endpoint_batch(seed, first, count, t1):
    """``x`` of the line endpoint of the geodesic from the origin"""

    out = np.empty(count, dtype=np.int64)
    for r in nb.prange(count):
        out[r] = line_sweep(seed, first + r, 0, 0, 0, t1)[1]
    return out


@nb.njit(parallel=True, **_jit)
def transversal_batch(seed, first, count, t1):
    """Largest position ``x - t / 2`` of the geodesic from the origin over ``0 <= t <= t1``"""

    out = np.empty(count)
    for r in nb.prange(count):
        xs = line_geodesic(seed, first + r, 0, 0, t1)[1]
        top = 0.0
        for t in range(t1 + 1):
            position = xs[t] - 0.5 * t
            if position > top:
                top = position
        out[r] = top
    return out


@nb.njit(parallel=True, **_jit)
def coalescence_batch(seed, first, count, k, t1):
    """1 where the geodesics from ``(0, 0)`` and ``(k, -k)`` to ``x + y = t1`` share a cell"""

    out = np.zeros(count, dtype=np.uint8)
    for r in nb.prange(count):
        left = line_geodesic(seed, first + r, 0, 0, t1)[1]
        right = line_geodesic(seed, first + r, k, 0, t1)[1]
        for t in range(t1 + 1):
            if left[t] == right[t]:
                out[r] = 1
                break
    return out
