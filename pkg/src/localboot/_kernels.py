"""Numba kernels shared by the lattice engine, the rectangle process and the
Monte Carlo drivers.

Grids are ``uint8`` arrays indexed ``grid[x - xmin, y - ymin]`` holding
EMPTY / OCCUPIED / ACTIVE.  Everything here is ``nogil`` so the experiment
drivers can fan trial ranges out over threads.
"""
import numpy as np
from numba import njit

EMPTY = 0
OCCUPIED = 1
ACTIVE = 2
ORIGIN_SAMPLED = -1

# run() stop codes
FIXATED = 0
THRESHOLD = 1
STEP_CAP = 2
NOT_RECTANGLE = -1
COORD_OVERFLOW = -2

COORD_LIMIT = 1 << 62

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KX = np.uint64(0xD1B54A32D192ED03)
_KY = np.uint64(0xABC98388FB8FAC03)
_KT = np.uint64(0x8CB92BA72F3D8DD7)
_TRIAL_SALT = np.uint64(0x5851F42D4C957F2D)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)

# First 4: l1 = 1.  Next 4: diagonals (linf = 1).  Last 4: l1 = 2 on axes.
OFFSETS = np.array(
    [[1, 0], [-1, 0], [0, 1], [0, -1],
     [1, 1], [1, -1], [-1, 1], [-1, -1],
     [2, 0], [-2, 0], [0, 2], [0, -2]],
    dtype=np.int64,
)


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(nogil=True, cache=True)
def field_key(seed):
    return mix64(seed ^ _GOLDEN)


@njit(nogil=True, cache=True)
def trial_seed(master, index):
    return mix64(mix64(master ^ _TRIAL_SALT) + np.uint64(index) * _KT)


@njit(inline="always")
def _column_hash(key, x):
    return mix64(key ^ (np.uint64(x) * _KX))


@njit(inline="always")
def _finish_hash(hx, y):
    return mix64(hx ^ (np.uint64(y) * _KY))


@njit(nogil=True, cache=True)
def site_hash(key, x, y):
    return _finish_hash(_column_hash(key, x), y)


@njit(inline="always")
def _hit(h, thr, full):
    return full or h < thr


@njit(nogil=True, cache=True)
def site_code(key, thr, full, origin, x, y):
    if x == 0 and y == 0:
        if origin != ORIGIN_SAMPLED:
            return origin
        return ACTIVE if _hit(site_hash(key, x, y), thr, full) else EMPTY
    return OCCUPIED if _hit(site_hash(key, x, y), thr, full) else EMPTY


@njit(nogil=True, cache=True)
def materialize(key, thr, full, origin, xmin, ymin, nx, ny):
    grid = np.empty((nx, ny), dtype=np.uint8)
    for i in range(nx):
        hx = _column_hash(key, xmin + i)
        for j in range(ny):
            grid[i, j] = OCCUPIED if _hit(_finish_hash(hx, ymin + j), thr, full) else EMPTY
    oi = -xmin
    oj = -ymin
    if 0 <= oi < nx and 0 <= oj < ny:
        if origin != ORIGIN_SAMPLED:
            grid[oi, oj] = origin
        else:
            grid[oi, oj] = ACTIVE if grid[oi, oj] == OCCUPIED else EMPTY
    return grid


@njit(nogil=True, cache=True)
def materialize_many(seeds, thr, full, origin, xmin, ymin, nx, ny):
    out = np.empty((seeds.shape[0], nx, ny), dtype=np.uint8)
    for k in range(seeds.shape[0]):
        out[k] = materialize(field_key(seeds[k]), thr, full, origin, xmin, ymin, nx, ny)
    return out


@njit(inline="always")
def _activates(grid, ci, cj, s, n_reach):
    nx, ny = grid.shape
    if s == OCCUPIED:
        for o in range(n_reach):
            ai = ci + OFFSETS[o, 0]
            aj = cj + OFFSETS[o, 1]
            if 0 <= ai < nx and 0 <= aj < ny and grid[ai, aj] == ACTIVE:
                return True
        return False
    count = 0
    for o in range(4):
        ai = ci + OFFSETS[o, 0]
        aj = cj + OFFSETS[o, 1]
        if 0 <= ai < nx and 0 <= aj < ny and grid[ai, aj] == ACTIVE:
            count += 1
    return count >= 2


@njit(nogil=True, cache=True)
def step_full(grid, n_reach):
    """One synchronous update by full rescan. Returns (new grid, #changed)."""
    nx, ny = grid.shape
    out = grid.copy()
    changed = 0
    for i in range(nx):
        for j in range(ny):
            s = grid[i, j]
            if s != ACTIVE and _activates(grid, i, j, s, n_reach):
                out[i, j] = ACTIVE
                changed += 1
    return out, changed


@njit(nogil=True, cache=True)
def relax_frontier(grid, n_reach, fx, fy, nfront):
    """Relax ``grid`` in place to its fixed point.

    ``fx``/``fy`` (length >= grid.size) hold the initial frontier: every
    Active site whose neighbourhood may still hold an activatable site.
    Returns the number of steps applied, counting the final idle pass.
    """
    nx, ny = grid.shape
    stamp = np.zeros((nx, ny), dtype=np.int64)
    newx = np.empty(nx * ny, dtype=np.int64)
    newy = np.empty(nx * ny, dtype=np.int64)
    n_cand = max(4, n_reach)
    steps = 0
    while True:
        steps += 1
        nnew = 0
        for k in range(nfront):
            i = fx[k]
            j = fy[k]
            for o in range(n_cand):
                ci = i + OFFSETS[o, 0]
                cj = j + OFFSETS[o, 1]
                if ci < 0 or ci >= nx or cj < 0 or cj >= ny:
                    continue
                s = grid[ci, cj]
                if s == ACTIVE or stamp[ci, cj] == steps:
                    continue
                stamp[ci, cj] = steps
                if _activates(grid, ci, cj, s, n_reach):
                    newx[nnew] = ci
                    newy[nnew] = cj
                    nnew += 1
        if nnew == 0:
            return steps
        for k in range(nnew):
            grid[newx[k], newy[k]] = ACTIVE
            fx[k] = newx[k]
            fy[k] = newy[k]
        nfront = nnew


@njit(nogil=True, cache=True)
def relax(grid, n_reach):
    nx, ny = grid.shape
    fx = np.empty(nx * ny, dtype=np.int64)
    fy = np.empty(nx * ny, dtype=np.int64)
    n = 0
    for i in range(nx):
        for j in range(ny):
            if grid[i, j] == ACTIVE:
                fx[n] = i
                fy[n] = j
                n += 1
    return relax_frontier(grid, n_reach, fx, fy, n)


@njit(nogil=True, cache=True)
def active_bbox(grid):
    """(count, imin, imax, jmin, jmax) of the Active set; count 0 if none."""
    nx, ny = grid.shape
    count = 0
    imin = nx
    imax = -1
    jmin = ny
    jmax = -1
    for i in range(nx):
        for j in range(ny):
            if grid[i, j] == ACTIVE:
                count += 1
                imin = min(imin, i)
                imax = max(imax, i)
                jmin = min(jmin, j)
                jmax = max(jmax, j)
    return count, imin, imax, jmin, jmax


@njit(nogil=True, cache=True)
def advance(key, thr, full, origin, n_reach, pad, x0, x1, y0, y1):
    """One rectangle-process step from [x0..x1]x[y0..y1].

    Returns (status, x0', x1', y0', y1') with status 0 or NOT_RECTANGLE.
    """
    w = x1 - x0 + 1
    h = y1 - y0 + 1
    nx = w + 2 * pad
    ny = h + 2 * pad
    X0 = x0 - pad
    Y0 = y0 - pad
    grid = np.empty((nx, ny), dtype=np.uint8)
    for i in range(nx):
        inside_x = pad <= i < pad + w
        hx = _column_hash(key, X0 + i)
        for j in range(ny):
            if inside_x and pad <= j < pad + h:
                grid[i, j] = ACTIVE
                continue
            x = X0 + i
            y = Y0 + j
            if x == 0 and y == 0 and origin != ORIGIN_SAMPLED:
                grid[i, j] = origin
            elif _hit(_finish_hash(hx, y), thr, full):
                grid[i, j] = ACTIVE if (x == 0 and y == 0) else OCCUPIED
            else:
                grid[i, j] = EMPTY
    # Only the rim of the rectangle can see outside it.
    fx = np.empty(nx * ny, dtype=np.int64)
    fy = np.empty(nx * ny, dtype=np.int64)
    n = 0
    for i in range(w):
        for j in range(h):
            if i < 2 or i >= w - 2 or j < 2 or j >= h - 2:
                fx[n] = pad + i
                fy[n] = pad + j
                n += 1
    relax_frontier(grid, n_reach, fx, fy, n)
    count, imin, imax, jmin, jmax = active_bbox(grid)
    if count != (imax - imin + 1) * (jmax - jmin + 1):
        return NOT_RECTANGLE, X0 + imin, X0 + imax, Y0 + jmin, Y0 + jmax
    return 0, X0 + imin, X0 + imax, Y0 + jmin, Y0 + jmax


@njit(nogil=True, cache=True)
def run(key, thr, full, origin, n_reach, pad, success_semi, step_cap, record):
    """Rectangle process from the origin.

    Returns (stop code, rects[n, 4], n).  With ``record`` False only the
    last rectangle is kept.
    """
    rects = np.empty((64 if record else 1, 4), dtype=np.int64)
    if site_code(key, thr, full, origin, 0, 0) != ACTIVE:
        return FIXATED, rects, 0
    x0 = 0
    x1 = 0
    y0 = 0
    y1 = 0
    rects[0, 0] = 0
    rects[0, 1] = 0
    rects[0, 2] = 0
    rects[0, 3] = 0
    n = 1
    if 2 >= success_semi:
        return THRESHOLD, rects, n
    steps = 0
    while True:
        if steps >= step_cap:
            return STEP_CAP, rects, n
        status, a0, a1, b0, b1 = advance(key, thr, full, origin, n_reach, pad, x0, x1, y0, y1)
        steps += 1
        if status != 0:
            return status, rects, n
        if a0 == x0 and a1 == x1 and b0 == y0 and b1 == y1:
            return FIXATED, rects, n
        x0 = a0
        x1 = a1
        y0 = b0
        y1 = b1
        if max(-x0, x1, -y0, y1) >= COORD_LIMIT - 2 * pad:
            return COORD_OVERFLOW, rects, n
        k = n if record else 0
        if record and n == rects.shape[0]:
            bigger = np.empty((2 * n, 4), dtype=np.int64)
            bigger[:n] = rects
            rects = bigger
        rects[k, 0] = x0
        rects[k, 1] = x1
        rects[k, 2] = y0
        rects[k, 3] = y1
        n += 1
        if (x1 - x0 + 1) + (y1 - y0 + 1) >= success_semi:
            return THRESHOLD, rects, n


@njit(nogil=True, cache=True)
def growth_counts(master, start, stop, thr, full, origin, n_reach, pad, success_semi, step_cap):
    """[successes, failures, capped, errors] over trials start..stop-1."""
    counts = np.zeros(4, dtype=np.int64)
    for t in range(start, stop):
        key = field_key(trial_seed(master, t))
        code, _, _ = run(key, thr, full, origin, n_reach, pad, success_semi, step_cap, False)
        if code == THRESHOLD:
            counts[0] += 1
        elif code == FIXATED:
            counts[1] += 1
        elif code == STEP_CAP:
            counts[2] += 1
        else:
            counts[3] += 1
    return counts


@njit(nogil=True, cache=True)
def growth_counts_window(master, start, stop, thr, full, origin, n_reach, pad, success_semi, half):
    """Same contract as growth_counts, but relaxing the full automaton on
    the window [-half..half]^2; a censored window counts as growth."""
    counts = np.zeros(4, dtype=np.int64)
    n = 2 * half + 1
    for t in range(start, stop):
        key = field_key(trial_seed(master, t))
        grid = materialize(key, thr, full, origin, -half, -half, n, n)
        if grid[half, half] != ACTIVE:
            counts[1] += 1
            continue
        relax(grid, n_reach)
        count, imin, imax, jmin, jmax = active_bbox(grid)
        touched = imin < pad or jmin < pad or imax >= n - pad or jmax >= n - pad
        if touched or (imax - imin + 1) + (jmax - jmin + 1) >= success_semi:
            counts[0] += 1
        else:
            counts[1] += 1
    return counts


@njit(nogil=True, cache=True)
def window_event_counts(master, start, stop, thr, full, n_reach, sx, sy, xmin, ymin, nx, ny,
                        tx0, tx1, ty0, ty1):
    """Active origin, sampled Occupied states on the listed sites, Empty
    elsewhere; counts trials where the target rectangle ends up Active."""
    hits = 0
    for t in range(start, stop):
        key = field_key(trial_seed(master, t))
        grid = np.zeros((nx, ny), dtype=np.uint8)
        grid[-xmin, -ymin] = ACTIVE
        for k in range(sx.shape[0]):
            if _hit(site_hash(key, sx[k], sy[k]), thr, full):
                grid[sx[k] - xmin, sy[k] - ymin] = OCCUPIED
        relax(grid, n_reach)
        ok = True
        for x in range(tx0, tx1 + 1):
            for y in range(ty0, ty1 + 1):
                if grid[x - xmin, y - ymin] != ACTIVE:
                    ok = False
        if ok:
            hits += 1
    return hits


@njit(nogil=True, cache=True)
def bp_grid(key, thr, full, L):
    grid = np.empty((L, L), dtype=np.uint8)
    for i in range(L):
        hx = _column_hash(key, i + 1)
        for j in range(L):
            grid[i, j] = ACTIVE if _hit(_finish_hash(hx, j + 1), thr, full) else EMPTY
    return grid


@njit(nogil=True, cache=True)
def bp_spanned(key, thr, full, L):
    grid = bp_grid(key, thr, full, L)
    relax(grid, 0)
    for i in range(L):
        for j in range(L):
            if grid[i, j] != ACTIVE:
                return False
    return True


@njit(nogil=True, cache=True)
def bp_counts(master, start, stop, thr, full, L):
    hits = 0
    for t in range(start, stop):
        if bp_spanned(field_key(trial_seed(master, t)), thr, full, L):
            hits += 1
    return hits
