"""Compiled Monte Carlo kernels.

Everything here is numba-compiled and operates on the flat array bundles
prepared by `transport.CompiledScene` (`scene`, `cfg`, `tables` tuples; see
that module for the field layout). Each path owns a counter-based RNG stream
keyed by (master seed, pixel index, sample index), and each pixel is
accumulated by exactly one parallel iteration, so rasters are bit-identical
for a fixed seed regardless of thread count or scheduling.

Ray queries march the horizontal grid cell by cell, skipping open space with
the distance field, and test exact surface candidates inside each visited
cell: the cell's facade chord (a vertical plane bounded by the building
height), the roof plane over building cells, and the ground plane. The
distance-field skip is shortened by one cell diagonal so interpolation error
can never step across a wall.
"""

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53

# Hit kinds
SKY, FACADE, ROOF, GROUND, TRACE_BUDGET = 0, 1, 2, 3, 4
# Surface kinds carried by a path
S_FACADE, S_ROOF, S_GROUND = 1, 2, 3
# Path outcomes
END_INITIAL, END_DIRICHLET, END_FLUID, END_SKY, END_DISCARD = 0, 1, 2, 3, 4

# scene tuple layout (built by transport.CompiledScene)
#  0 ox  1 oy  2 cell  3 width  4 height
#  5 ids[H,W] i32          6 heights[H,W] f64     7 sdf[H,W] f64
#  8 seg_idx[H,W] i32
#  9 sx0 10 sy0 11 sx1 12 sy1 13 snx 14 sny  (f64[S])
# 15 scum0 16 slen (f64[S])  17 sbidx i32[S]  18 sheight f64[S]
# 19 b_first i64[B] 20 b_count i64[B] 21 b_perimeter f64[B] 22 b_height f64[B]
# 23 rects f64[B,2,18]  24 rmats i32[B,2,4]
# 25 roof_mat[H,W] i32  26 ground_mat[H,W] i32
# 27 eps_override[H,W] f64 (NaN = none)  28 init_temp[H,W] f64
# 29 mat_eps f64[M] 30 mat_hcond f64[M] (k/delta) 31 mat_rewind f64[M]
# 32 mat_specular u8[M] 33 dirichlet_temp f64[M] (NaN = not Dirichlet)
# 34 ceiling f64
#
# cfg tuple layout
#  0 delta  1 h_conv  2 hr_coef (4*sigma*t_ref^3)  3 eps_hit  4 trace_budget
#  5 pattern_w  6 pattern_h  7 max_bounces  8 cond_steps  9 max_transitions
# 10 tau_horizon  11 table_dt  12 diffuse_fraction  13 cos_half_angle
#
# tables tuple layout
#  0 sun_x 1 sun_y 2 sun_z 3 sun_do 4 sun_iod 5 air_t 6 sky_t   (f64[T])


# ---------------------------------------------------------------------------
# counter-based RNG (splitmix64 stream per path)
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(inline="always", cache=True)
def path_seed(master, pixel, sample):
    h = _mix64(U64(master) + _GAMMA)
    h = _mix64(h ^ (U64(pixel) * _MIX1))
    h = _mix64(h ^ (U64(sample) * _MIX2))
    return h


@njit(inline="always", cache=True)
def rand01(state):
    """Advance the stream; returns (state, uniform in [0, 1))."""
    state = state + _GAMMA
    z = _mix64(state)
    return state, float(z >> U64(11)) * _INV53


@njit(inline="always", cache=True)
def rand_exponential(state, mean):
    state, u = rand01(state)
    return state, -mean * math.log(1.0 - u)


@njit(inline="always", cache=True)
def cosine_hemisphere(state, nx, ny, nz):
    """Cosine-distributed direction about the unit normal (nx, ny, nz)."""
    state, u1 = rand01(state)
    state, u2 = rand01(state)
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    lx = r * math.cos(phi)
    ly = r * math.sin(phi)
    lz = math.sqrt(1.0 - u1)
    # orthonormal frame about n (Duff et al. branchless form)
    if nz < -0.9999999:
        tx, ty, tz = 0.0, -1.0, 0.0
        bx, by, bz = -1.0, 0.0, 0.0
    else:
        a = 1.0 / (1.0 + nz)
        b = -nx * ny * a
        tx, ty, tz = 1.0 - nx * nx * a, b, -nx
        bx, by, bz = b, 1.0 - ny * ny * a, -ny
    dx = lx * tx + ly * bx + lz * nx
    dy = lx * ty + ly * by + lz * ny
    dz = lx * tz + ly * bz + lz * nz
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    return state, dx / norm, dy / norm, dz / norm


# ---------------------------------------------------------------------------
# scene queries
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _bilinear(layer, ox, oy, cell, w, h, x, y):
    fx = (x - ox) / cell - 0.5
    fy = (y - oy) / cell - 0.5
    c0 = int(math.floor(fx))
    r0 = int(math.floor(fy))
    tx = fx - c0
    ty = fy - r0
    if c0 < 0:
        c0 = 0
        tx = 0.0
    if r0 < 0:
        r0 = 0
        ty = 0.0
    if c0 > w - 1:
        c0 = w - 1
        tx = 0.0
    if r0 > h - 1:
        r0 = h - 1
        ty = 0.0
    c1 = c0 + 1 if c0 + 1 < w else c0
    r1 = r0 + 1 if r0 + 1 < h else r0
    return (layer[r0, c0] * (1.0 - tx) * (1.0 - ty)
            + layer[r0, c1] * tx * (1.0 - ty)
            + layer[r1, c0] * (1.0 - tx) * ty
            + layer[r1, c1] * tx * ty)


@njit(cache=True)
def trace(px, py, pz, dx, dy, dz, scene, budget):
    """March one ray; returns (kind, hx, hy, hz, nx, ny, nz, seg, travel).

    kind: 0 sky/domain edge, 1 facade, 2 roof, 3 ground, 4 budget exhausted.
    """
    ox = scene[0]
    oy = scene[1]
    cell = scene[2]
    width = scene[3]
    height = scene[4]
    ids = scene[5]
    heights = scene[6]
    sdf = scene[7]
    seg_idx = scene[8]
    sx0 = scene[9]
    sy0 = scene[10]
    sx1 = scene[11]
    sy1 = scene[12]
    snx = scene[13]
    sny = scene[14]
    sheight = scene[18]
    ceiling = scene[34]

    slack = 1e-7 * cell + 1e-9
    hnorm = math.hypot(dx, dy)
    x_max = ox + width * cell
    y_max = oy + height * cell

    t_cur = 0.0
    for _ in range(budget):
        x = px + dx * t_cur
        y = py + dy * t_cur
        z = pz + dz * t_cur
        if z >= ceiling and dz >= 0.0:
            return SKY, x, y, z, 0.0, 0.0, 0.0, -1, t_cur
        if x < ox or x >= x_max or y < oy or y >= y_max:
            return SKY, x, y, z, 0.0, 0.0, 0.0, -1, t_cur

        col = int((x - ox) / cell)
        row = int((y - oy) / cell)
        if col >= width:
            col = width - 1
        if row >= height:
            row = height - 1

        if hnorm < 1e-12:
            # vertical ray: resolve within the current column
            if dz >= 0.0:
                return SKY, x, y, ceiling, 0.0, 0.0, 0.0, -1, ceiling - pz
            h_c = heights[row, col]
            if ids[row, col] > 0 and z > h_c:
                return ROOF, x, y, h_c, 0.0, 0.0, 1.0, -1, (h_c - pz) / dz
            return GROUND, x, y, 0.0, 0.0, 0.0, 1.0, -1, (0.0 - pz) / dz

        # open-space skip via the distance field
        s_val = _bilinear(sdf, ox, oy, cell, width, height, x, y)
        if s_val > 1.5 * cell:
            jump = (s_val - 0.75 * cell) / hnorm
            if dz < 0.0:
                t_g = (0.0 - pz) / dz
                if t_g <= t_cur + jump:
                    hx = px + dx * t_g
                    hy = py + dy * t_g
                    if ox <= hx < x_max and oy <= hy < y_max:
                        return GROUND, hx, hy, 0.0, 0.0, 0.0, 1.0, -1, t_g
                    return SKY, hx, hy, 0.0, 0.0, 0.0, 0.0, -1, t_g
            t_cur += jump
            continue

        # exact candidates within this cell's ray interval
        t_exit = 1e30
        if dx > 1e-15:
            t_exit = (ox + (col + 1) * cell - px) / dx
        elif dx < -1e-15:
            t_exit = (ox + col * cell - px) / dx
        if dy > 1e-15:
            ty_ = (oy + (row + 1) * cell - py) / dy
            if ty_ < t_exit:
                t_exit = ty_
        elif dy < -1e-15:
            ty_ = (oy + row * cell - py) / dy
            if ty_ < t_exit:
                t_exit = ty_
        if t_exit < t_cur:
            t_exit = t_cur

        best_t = 1e30
        best_kind = -1
        b_nx = 0.0
        b_ny = 0.0
        b_nz = 0.0
        b_seg = -1
        b_z = 0.0

        si = seg_idx[row, col]
        if si >= 0:
            nx_ = snx[si]
            ny_ = sny[si]
            denom = dx * nx_ + dy * ny_
            if denom < -1e-15:  # approaching the wall from the front
                t_s = ((sx0[si] - px) * nx_ + (sy0[si] - py) * ny_) / denom
                if -slack <= t_s <= t_exit + slack and t_s >= t_cur - 4.0 * slack:
                    z_hit = pz + dz * t_s
                    if 0.0 < z_hit < sheight[si]:
                        hx = px + dx * t_s
                        hy = py + dy * t_s
                        ex = sx1[si] - sx0[si]
                        ey = sy1[si] - sy0[si]
                        ll = ex * ex + ey * ey
                        q = ((hx - sx0[si]) * ex + (hy - sy0[si]) * ey) / ll
                        ptol = slack / math.sqrt(ll)
                        if -ptol <= q <= 1.0 + ptol:
                            best_t = t_s
                            best_kind = FACADE
                            b_nx = nx_
                            b_ny = ny_
                            b_seg = si
                            b_z = z_hit

        if dz < -1e-15:
            # roof plane: full cells of a building, or the interior-side
            # sliver of a boundary cell the overlap rule assigned to ground
            h_c = 0.0
            if ids[row, col] > 0:
                h_c = heights[row, col]
            elif si >= 0:
                h_c = sheight[si]
            if h_c > 0.0:
                t_r = (h_c - pz) / dz
                if t_cur - slack <= t_r <= t_exit + slack and t_r < best_t:
                    hx = px + dx * t_r
                    hy = py + dy * t_r
                    on_roof = True
                    if si >= 0:
                        side = (hx - sx0[si]) * snx[si] + (hy - sy0[si]) * sny[si]
                        on_roof = side <= 0.0  # interior side of the facade
                    if on_roof:
                        best_t = t_r
                        best_kind = ROOF
                        b_nx = 0.0
                        b_ny = 0.0
                        b_nz = 1.0
                        b_seg = si if ids[row, col] == 0 else -1
                        b_z = h_c
            t_g = (0.0 - pz) / dz
            if t_cur - slack <= t_g <= t_exit + slack and t_g < best_t:
                hx = px + dx * t_g
                hy = py + dy * t_g
                on_ground = ids[row, col] == 0
                if not on_ground and si >= 0:
                    side = (hx - sx0[si]) * snx[si] + (hy - sy0[si]) * sny[si]
                    on_ground = side >= 0.0  # exterior side of the facade
                if on_ground:
                    best_t = t_g
                    best_kind = GROUND
                    b_nx = 0.0
                    b_ny = 0.0
                    b_nz = 1.0
                    b_seg = -1
                    b_z = 0.0

        if best_kind >= 0:
            hx = px + dx * best_t
            hy = py + dy * best_t
            return best_kind, hx, hy, b_z, b_nx, b_ny, b_nz, b_seg, best_t

        t_cur = t_exit + 1e-9

    return TRACE_BUDGET, px, py, pz, 0.0, 0.0, 0.0, -1, t_cur


@njit(inline="always", cache=True)
def facade_material(s_abs, z, b, scene, pw, ph):
    """Material id at (arc length, height) on the facade of building index b."""
    bheight = scene[22][b]
    rects = scene[23]
    rmats = scene[24]
    zz = z
    if zz >= bheight:
        zz = bheight - 1e-12
    if zz < 0.0:
        zz = 0.0
    floor = int(zz / ph)
    level = 0 if floor == 0 else 1
    ts = s_abs % pw
    if ts < 0.0:
        ts += pw
    tz = zz - floor * ph
    r = rects[b, level]
    m = rmats[b, level]
    if level == 0 and r[0] <= ts <= r[1] and r[2] <= tz <= r[3]:
        return m[3]  # door
    if r[4] <= ts <= r[5] and r[6] <= tz <= r[7]:
        return m[1]  # window
    if r[8] <= ts <= r[9] and r[10] <= tz <= r[11]:
        return m[2]  # frame
    if level == 1 and r[16] <= tz <= r[17] and \
            ((r[12] <= ts <= r[13]) or (r[14] <= ts <= r[15])):
        return m[3]  # shutter
    return m[0]


@njit(inline="always", cache=True)
def segment_of_arclength(b, s_abs, scene):
    """Index of the building-b segment containing arc length s_abs."""
    first = scene[19][b]
    count = scene[20][b]
    cum0 = scene[15]
    lo = first
    hi = first + count - 1
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if cum0[mid] <= s_abs:
            lo = mid
        else:
            hi = mid - 1
    return lo


@njit(inline="always", cache=True)
def _cell_of(scene, x, y):
    col = int((x - scene[0]) / scene[2])
    row = int((y - scene[1]) / scene[2])
    if col < 0:
        col = 0
    elif col >= scene[3]:
        col = scene[3] - 1
    if row < 0:
        row = 0
    elif row >= scene[4]:
        row = scene[4] - 1
    return row, col


@njit(inline="always", cache=True)
def _table_interp(values, time, dt):
    ft = time / dt
    n = values.shape[0]
    i0 = int(ft)
    if i0 >= n - 1:
        return values[n - 1]
    if i0 < 0:
        return values[0]
    f = ft - i0
    return values[i0] * (1.0 - f) + values[i0 + 1] * f


@njit(inline="always", cache=True)
def _table_index(time, dt, n):
    i = int(time / dt + 0.5)
    if i < 0:
        i = 0
    elif i >= n:
        i = n - 1
    return i


# ---------------------------------------------------------------------------
# solar accumulation (one Robin-visit contribution, unscaled by 1/h_total)
# ---------------------------------------------------------------------------

@njit(cache=True)
def solar_visit(state, vx, vy, vz, nx, ny, nz, eps0, time, scene, cfg, tables):
    """Per-visit solar weight at the interface point (vx, vy, vz).

    Adds the sunlit direct term, then follows one indirect path: Lambertian
    hits add their sunlit direct term and continue with a cosine bounce,
    specular hits mirror the ray, and sky termination adds the isotropic
    diffuse term, plus the solar-disc term when a mirrored ray escapes inside
    the sun cone. The caller scales the result by 1/h_total of the visited
    material.
    """
    table_dt = cfg[11]
    sun_do = tables[3]
    idx = _table_index(time, table_dt, sun_do.shape[0])
    d_o = sun_do[idx]
    if d_o <= 0.0:
        return state, 0.0
    i_od = tables[4][idx]
    wx = tables[0][idx]
    wy = tables[1][idx]
    wz = tables[2][idx]
    eps_hit = cfg[3]
    budget = cfg[4]
    diffuse_fraction = cfg[12]
    cos_half_angle = cfg[13]
    max_bounces = cfg[7]
    pw = cfg[5]
    ph = cfg[6]

    w = 0.0
    cosv = wx * nx + wy * ny + wz * nz
    if cosv > 0.0:
        k, _, _, _, _, _, _, _, _ = trace(
            vx + nx * eps_hit, vy + ny * eps_hit, vz + nz * eps_hit,
            wx, wy, wz, scene, budget)
        if k == SKY:
            w += eps0 * cosv * d_o

    state, dx, dy, dz = cosine_hemisphere(state, nx, ny, nz)
    cx = vx + nx * eps_hit
    cy = vy + ny * eps_hit
    cz = vz + nz * eps_hit
    prev_specular = False
    for _ in range(max_bounces):
        k, hx, hy, hz, hnx, hny, hnz, seg, _ = trace(
            cx, cy, cz, dx, dy, dz, scene, budget)
        if k == SKY:
            if dz > 0.0:
                w += eps0 * diffuse_fraction * i_od  # eps*pi*(df/pi)*I_od
            if prev_specular and dx * wx + dy * wy + dz * wz >= cos_half_angle:
                w += eps0 * math.pi * i_od
            return state, w
        if k == TRACE_BUDGET:
            return state, w

        if k == FACADE:
            b = scene[17][seg]
            ex = scene[11][seg] - scene[9][seg]
            ey = scene[12][seg] - scene[10][seg]
            ll = math.sqrt(ex * ex + ey * ey)
            q = ((hx - scene[9][seg]) * ex + (hy - scene[10][seg]) * ey) / (ll * ll)
            if q < 0.0:
                q = 0.0
            elif q > 1.0:
                q = 1.0
            s_abs = scene[15][seg] + q * ll
            mat = facade_material(s_abs, hz, b, scene, pw, ph)
        elif k == ROOF:
            row, col = _cell_of(scene, hx, hy)
            mat = scene[25][row, col]
        else:
            row, col = _cell_of(scene, hx, hy)
            mat = scene[26][row, col]

        if scene[32][mat] != 0:
            dot = dx * hnx + dy * hny + dz * hnz
            dx = dx - 2.0 * dot * hnx
            dy = dy - 2.0 * dot * hny
            dz = dz - 2.0 * dot * hnz
            prev_specular = True
        else:
            cosb = wx * hnx + wy * hny + wz * hnz
            if cosb > 0.0:
                k2, _, _, _, _, _, _, _, _ = trace(
                    hx + hnx * eps_hit, hy + hny * eps_hit, hz + hnz * eps_hit,
                    wx, wy, wz, scene, budget)
                if k2 == SKY:
                    w += eps0 * cosb * d_o
            state, dx, dy, dz = cosine_hemisphere(state, hnx, hny, hnz)
            prev_specular = False
        cx = hx + hnx * eps_hit
        cy = hy + hny * eps_hit
        cz = hz + hnz * eps_hit
    return state, w


# ---------------------------------------------------------------------------
# conductive chains (fixed-radius 2D surface walks with time rewind)
# ---------------------------------------------------------------------------

@njit(cache=True)
def chain_flat(state, x, y, time, same_building, bid, scene, cfg):
    """Conductive walk on a roof (same_building=True) or the ground.

    Moves in the horizontal plane, bouncing back at roof rims / footprints
    and mirroring at the domain edge; every step rewinds time by an
    exponential draw with the local material's mean. Returns
    (state, x, y, time, reached_horizon).
    """
    ids = scene[5]
    roof_mat = scene[25]
    ground_mat = scene[26]
    rewind = scene[31]
    delta = cfg[0]
    steps = cfg[8]
    tau = cfg[10]
    ox = scene[0]
    oy = scene[1]
    x_max = ox + scene[3] * scene[2]
    y_max = oy + scene[4] * scene[2]

    for _ in range(steps):
        state, u = rand01(state)
        theta = 2.0 * math.pi * u
        sx = delta * math.cos(theta)
        sy = delta * math.sin(theta)
        nx = x + sx
        ny = y + sy
        # mirror at the domain edge (adiabatic)
        if nx < ox:
            nx = 2.0 * ox - nx
        elif nx > x_max:
            nx = 2.0 * x_max - nx
        if ny < oy:
            ny = 2.0 * oy - ny
        elif ny > y_max:
            ny = 2.0 * y_max - ny
        row, col = _cell_of(scene, nx, ny)
        ok = (ids[row, col] == bid) if same_building else (ids[row, col] == 0)
        if ok:
            x = nx
            y = ny
        else:
            # bounce the step back; stay put when that is blocked too
            bx = x - sx
            by = y - sy
            if bx < ox:
                bx = 2.0 * ox - bx
            elif bx > x_max:
                bx = 2.0 * x_max - bx
            if by < oy:
                by = 2.0 * oy - by
            elif by > y_max:
                by = 2.0 * y_max - by
            row, col = _cell_of(scene, bx, by)
            ok = (ids[row, col] == bid) if same_building else (ids[row, col] == 0)
            if ok:
                x = bx
                y = by
        row, col = _cell_of(scene, x, y)
        mat = roof_mat[row, col] if same_building else ground_mat[row, col]
        state, dt_r = rand_exponential(state, rewind[mat])
        time += dt_r
        if time >= tau:
            return state, x, y, time, True
    return state, x, y, time, False


@njit(cache=True)
def chain_facade(state, s, z, b, time, scene, cfg):
    """Conductive walk in the unrolled facade plane (arc length, height).

    Mirrors at the perimeter seam and at the ground/rooftop edges. Returns
    (state, s, z, time, reached_horizon).
    """
    rewind = scene[31]
    delta = cfg[0]
    steps = cfg[8]
    tau = cfg[10]
    pw = cfg[5]
    ph = cfg[6]
    perimeter = scene[21][b]
    height = scene[22][b]

    for _ in range(steps):
        state, u = rand01(state)
        theta = 2.0 * math.pi * u
        s = s + delta * math.cos(theta)
        z = z + delta * math.sin(theta)
        if s < 0.0:
            s = -s
        if s > perimeter:
            s = 2.0 * perimeter - s
            if s < 0.0:
                s = 0.0
        if z < 0.0:
            z = -z
        if z > height:
            z = 2.0 * height - z
            if z < 0.0:
                z = 0.0
        mat = facade_material(s, z, b, scene, pw, ph)
        state, dt_r = rand_exponential(state, rewind[mat])
        time += dt_r
        if time >= tau:
            return state, s, z, time, True
    return state, s, z, time, False


# ---------------------------------------------------------------------------
# one path of the coupled transport
# ---------------------------------------------------------------------------

@njit(cache=True)
def sample_path(state, row, col, scene, cfg, tables):
    """One Monte Carlo realization started at a pixel centroid.

    Returns (state, weight, outcome). `weight` is a Kelvin temperature (the
    terminal temperature plus the accumulated solar contribution); outcome
    END_DISCARD means the path exhausted a budget and must not enter the
    pixel average.
    """
    ids = scene[5]
    heights = scene[6]
    eps_override = scene[27]
    init_temp = scene[28]
    mat_eps = scene[29]
    mat_hcond = scene[30]
    dirichlet = scene[33]
    h_conv = cfg[1]
    hr_coef = cfg[2]
    eps_hit = cfg[3]
    budget = cfg[4]
    pw = cfg[5]
    ph = cfg[6]
    max_transitions = cfg[9]
    table_dt = cfg[11]
    air_t = tables[5]
    sky_t = tables[6]

    cell = scene[2]
    x = scene[0] + (col + 0.5) * cell
    y = scene[1] + (row + 0.5) * cell
    if ids[row, col] > 0:
        kind = S_ROOF
        z = heights[row, col]
        bid = ids[row, col]
    else:
        kind = S_GROUND
        z = 0.0
        bid = 0
    nx = 0.0
    ny = 0.0
    nz = 1.0
    b = -1       # compact building index (facade state)
    s_abs = 0.0  # arc length along the facade (facade state)

    time = 0.0
    w_solar = 0.0
    transitions = 0

    while True:
        # local material and emissivity at the interface
        if kind == S_FACADE:
            mat = facade_material(s_abs, z, b, scene, pw, ph)
            eps = mat_eps[mat]
        else:
            if kind == S_ROOF:
                mat = scene[25][row, col]
            else:
                mat = scene[26][row, col]
            ov = eps_override[row, col]
            eps = ov if ov == ov else mat_eps[mat]

        td = dirichlet[mat]
        if td == td:  # Dirichlet surface: known temperature, path ends
            return state, td + w_solar, END_DIRICHLET

        if transitions >= max_transitions:
            return state, 0.0, END_DISCARD
        transitions += 1

        h_rad = hr_coef * eps
        h_total = h_rad + h_conv + mat_hcond[mat]

        state, wv = solar_visit(state, x, y, z, nx, ny, nz, eps, time,
                                scene, cfg, tables)
        if wv != 0.0:
            w_solar += wv / h_total

        state, u = rand01(state)
        hu = u * h_total
        if hu < h_rad:
            # radiative: cosine ray, re-sample at whatever it hits
            state, dx, dy, dz = cosine_hemisphere(state, nx, ny, nz)
            k, hx, hy, hz, hnx, hny, hnz, seg, _ = trace(
                x + nx * eps_hit, y + ny * eps_hit, z + nz * eps_hit,
                dx, dy, dz, scene, budget)
            if k == SKY:
                return state, _table_interp(sky_t, time, table_dt) + w_solar, END_SKY
            if k == TRACE_BUDGET:
                return state, 0.0, END_DISCARD
            if k == FACADE:
                kind = S_FACADE
                b = scene[17][seg]
                ex = scene[11][seg] - scene[9][seg]
                ey = scene[12][seg] - scene[10][seg]
                ll = math.sqrt(ex * ex + ey * ey)
                q = ((hx - scene[9][seg]) * ex + (hy - scene[10][seg]) * ey) / (ll * ll)
                if q < 0.0:
                    q = 0.0
                elif q > 1.0:
                    q = 1.0
                s_abs = scene[15][seg] + q * ll
                x = hx
                y = hy
                z = hz
                nx = hnx
                ny = hny
                nz = 0.0
                row, col = _cell_of(scene, hx, hy)
            elif k == ROOF:
                kind = S_ROOF
                x = hx
                y = hy
                z = hz
                nx = 0.0
                ny = 0.0
                nz = 1.0
                row, col = _cell_of(scene, hx, hy)
                bid = ids[row, col]
                if bid == 0 and seg >= 0:
                    # sliver roof in a ground-assigned boundary cell: step to
                    # the interior side so the visit keys to the building
                    x2 = hx - scene[13][seg] * eps_hit
                    y2 = hy - scene[14][seg] * eps_hit
                    r2, c2 = _cell_of(scene, x2, y2)
                    if ids[r2, c2] > 0:
                        x = x2
                        y = y2
                        row = r2
                        col = c2
                        bid = ids[r2, c2]
            else:
                kind = S_GROUND
                x = hx
                y = hy
                z = 0.0
                nx = 0.0
                ny = 0.0
                nz = 1.0
                row, col = _cell_of(scene, hx, hy)
        elif hu < h_rad + h_conv:
            # convective: the path ends in the fluid at the local time
            return state, _table_interp(air_t, time, table_dt) + w_solar, END_FLUID
        else:
            # conductive: walk the surface, then re-sample the mode
            if kind == S_FACADE:
                state, s_abs, z, time, reached = chain_facade(
                    state, s_abs, z, b, time, scene, cfg)
                seg = segment_of_arclength(b, s_abs, scene)
                q = s_abs - scene[15][seg]
                ll = scene[16][seg]
                if q < 0.0:
                    q = 0.0
                elif q > ll:
                    q = ll
                f = q / ll
                x = scene[9][seg] + f * (scene[11][seg] - scene[9][seg])
                y = scene[10][seg] + f * (scene[12][seg] - scene[10][seg])
                nx = scene[13][seg]
                ny = scene[14][seg]
                nz = 0.0
                row, col = _cell_of(scene, x, y)
                if reached:
                    return state, init_temp[row, col] + w_solar, END_INITIAL
            else:
                state, x, y, time, reached = chain_flat(
                    state, x, y, time, kind == S_ROOF, bid, scene, cfg)
                row, col = _cell_of(scene, x, y)
                if reached:
                    return state, init_temp[row, col] + w_solar, END_INITIAL
                if kind == S_ROOF:
                    z = heights[row, col]


@njit(parallel=True, cache=True)
def simulate_grid(master_seed, spp, scene, cfg, tables,
                  temps, stderr, valid, discarded):
    """Estimate every pixel: mean path weight, standard error, and counts.

    Pixels are independent prange iterations; the per-pixel sample loop is
    sequential, so results do not depend on the thread count.
    """
    width = scene[3]
    height = scene[4]
    npix = width * height
    for pix in prange(npix):
        row = pix // width
        col = pix % width
        sum_w = 0.0
        sum_w2 = 0.0
        n_valid = 0
        n_disc = 0
        for k in range(spp):
            state = path_seed(master_seed, pix, k)
            state, w, outcome = sample_path(state, row, col, scene, cfg, tables)
            if outcome == END_DISCARD:
                n_disc += 1
            else:
                sum_w += w
                sum_w2 += w * w
                n_valid += 1
        if n_valid > 0:
            mean = sum_w / n_valid
            temps[row, col] = mean
            if n_valid > 1:
                var = (sum_w2 - sum_w * sum_w / n_valid) / (n_valid - 1)
                if var < 0.0:
                    var = 0.0
                stderr[row, col] = math.sqrt(var / n_valid)
            else:
                stderr[row, col] = 0.0
        else:
            temps[row, col] = np.nan
            stderr[row, col] = np.nan
        valid[row, col] = n_valid
        discarded[row, col] = n_disc


@njit(cache=True)
def pixel_paths(master_seed, pixel, n, scene, cfg, tables, weights, outcomes,
                first_sample=0):
    """All path weights of one pixel, for inspection and single-pixel runs."""
    width = scene[3]
    row = pixel // width
    col = pixel % width
    for k in range(n):
        state = path_seed(master_seed, pixel, first_sample + k)
        state, w, outcome = sample_path(state, row, col, scene, cfg, tables)
        weights[k] = w
        outcomes[k] = outcome


# ---------------------------------------------------------------------------
# batch draws for distribution tests
# ---------------------------------------------------------------------------

@njit(cache=True)
def cosine_batch(seed, n, nx, ny, nz):
    out = np.empty((n, 3), dtype=np.float64)
    state = path_seed(seed, 0, 0)
    for i in range(n):
        state, dx, dy, dz = cosine_hemisphere(state, nx, ny, nz)
        out[i, 0] = dx
        out[i, 1] = dy
        out[i, 2] = dz
    return out


@njit(cache=True)
def exponential_batch(seed, n, mean):
    out = np.empty(n, dtype=np.float64)
    state = path_seed(seed, 0, 0)
    for i in range(n):
        state, v = rand_exponential(state, mean)
        out[i] = v
    return out


@njit(cache=True)
def uniform_batch(seed, n):
    out = np.empty(n, dtype=np.float64)
    state = path_seed(seed, 0, 0)
    for i in range(n):
        state, v = rand01(state)
        out[i] = v
    return out


# ---------------------------------------------------------------------------
# standalone fixed-radius walk for the conduction cross-validation
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def plate_walk(master_seed, n_nodes_x, n_nodes_y, step_x, step_y,
               size_x, size_y, delta, walks_per_node,
               t_top, t_bottom, t_left, t_right, out):
    """Dirichlet plate: average the edge temperature reached by fixed-radius
    walks from every grid node. Nodes are edge-registered: node (0, j) sits on
    the left boundary. Boundary nodes return their pinned edge value; corner
    nodes average their two edges."""
    n_total = n_nodes_x * n_nodes_y
    for node in prange(n_total):
        j = node // n_nodes_x
        i = node % n_nodes_x
        x0 = i * step_x
        y0 = j * step_y
        on_lr = i == 0 or i == n_nodes_x - 1
        on_tb = j == 0 or j == n_nodes_y - 1
        if on_lr and on_tb:
            lr = t_left if i == 0 else t_right
            tb = t_bottom if j == 0 else t_top
            out[j, i] = 0.5 * (lr + tb)
            continue
        if on_lr:
            out[j, i] = t_left if i == 0 else t_right
            continue
        if on_tb:
            out[j, i] = t_bottom if j == 0 else t_top
            continue
        acc = 0.0
        for w in range(walks_per_node):
            state = path_seed(master_seed, node, w)
            x = x0
            y = y0
            for _ in range(10_000_000):
                state, u = rand01(state)
                theta = 2.0 * math.pi * u
                nx = x + delta * math.cos(theta)
                ny = y + delta * math.sin(theta)
                if 0.0 < nx < size_x and 0.0 < ny < size_y:
                    x = nx
                    y = ny
                    continue
                # first boundary crossing along the step decides the edge
                t_best = 2.0
                value = 0.0
                if nx <= 0.0:
                    t = (0.0 - x) / (nx - x)
                    if t < t_best:
                        t_best = t
                        value = t_left
                elif nx >= size_x:
                    t = (size_x - x) / (nx - x)
                    if t < t_best:
                        t_best = t
                        value = t_right
                if ny <= 0.0:
                    t = (0.0 - y) / (ny - y)
                    if t < t_best:
                        t_best = t
                        value = t_bottom
                elif ny >= size_y:
                    t = (size_y - y) / (ny - y)
                    if t < t_best:
                        t_best = t
                        value = t_top
                acc += value
                break
        out[j, i] = acc / walks_per_node
