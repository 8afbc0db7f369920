"""Numpy implementations of the hot kernels.

These are the fallback used when the compiled ``_ckernels`` extension is not
available. Every kernel here has a twin in ``_ckernels.pyx`` with the same
signature; the two must agree bit for bit (floating-point operations are
performed in the same order on the same operands).
"""
import numpy as np


def vector_median(u, v, n):
    """Vector median filter over clipped ``n x n`` neighbourhoods.

    Returns new ``(u, v)`` arrays. Each output vector is the neighbourhood
    member with the smallest summed Euclidean distance to all other members;
    ties keep the centre, then the first candidate in raster order.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    h, w = u.shape
    r = n // 2
    up = np.pad(u, r)
    vp = np.pad(v, r)
    inside = np.pad(np.ones((h, w), dtype=bool), r)

    offsets = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    k = len(offsets)
    center = k // 2

    def view(a, off):
        dy, dx = off
        return a[r + dy:r + dy + h, r + dx:r + dx + w]

    uu = [view(up, o) for o in offsets]
    vv = [view(vp, o) for o in offsets]
    ok = [view(inside, o) for o in offsets]

    # Pairs are visited in lexicographic (i, j) order, which feeds every
    # energy accumulator its terms in raster order of j.
    energy = [np.zeros((h, w)) for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            du = uu[i] - uu[j]
            dv = vv[i] - vv[j]
            d = np.sqrt(du * du + dv * dv)
            both = ok[i] & ok[j]
            np.add(energy[i], d, out=energy[i], where=both)
            np.add(energy[j], d, out=energy[j], where=both)

    best = energy[center].copy()
    out_u = u.copy()
    out_v = v.copy()
    for i in range(k):
        if i == center:
            continue
        take = ok[i] & (energy[i] < best)
        best[take] = energy[i][take]
        out_u[take] = uu[i][take]
        out_v[take] = vv[i][take]
    return out_u, out_v


def _box_sum(a, block):
    """Sum of ``a`` over clipped ``block x block`` windows, plus window sizes."""
    h, w = a.shape
    r = block // 2
    integral = np.zeros((h + 1, w + 1))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=integral[1:, 1:])
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.maximum(ys - r, 0)[:, None]
    y1 = np.minimum(ys + r + 1, h)[:, None]
    x0 = np.maximum(xs - r, 0)[None, :]
    x1 = np.minimum(xs + r + 1, w)[None, :]
    s = integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
    count = ((y1 - y0) * (x1 - x0)).astype(np.float64)
    return s, count


def sad_search(i0, i1, base_u, base_v, off_x, off_y, block, weight):
    """Integer block-matching search around a per-pixel prediction.

    For each candidate offset ``o`` the cost at pixel ``p`` is the mean
    absolute difference between ``i0`` and ``i1`` displaced by
    ``base(p) + o`` (edge-clamped) over a clipped ``block x block`` window,
    plus ``weight * (|o_x| + |o_y|)``. Candidates are visited in the given
    order; a later candidate replaces the incumbent only if its cost is
    lower, or equal with a strictly shorter total vector.
    """
    i0 = np.ascontiguousarray(i0, dtype=np.float64)
    i1 = np.ascontiguousarray(i1, dtype=np.float64)
    h, w = i0.shape
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    best_cost = None
    best_u = None
    best_v = None
    for ox, oy in zip(off_x.tolist(), off_y.tolist()):
        tu = base_u + ox
        tv = base_v + oy
        tx = np.clip(xs + tu, 0, w - 1)
        ty = np.clip(ys + tv, 0, h - 1)
        diff = np.abs(i0 - i1[ty, tx])
        sad, count = _box_sum(diff, block)
        cost = sad / count + weight * float(abs(ox) + abs(oy))
        if best_cost is None:
            best_cost = cost
            best_u = tu.astype(np.int64)
            best_v = tv.astype(np.int64)
            continue
        mag = tu * tu + tv * tv
        best_mag = best_u * best_u + best_v * best_v
        take = (cost < best_cost) | ((cost == best_cost) & (mag < best_mag))
        best_cost = np.where(take, cost, best_cost)
        best_u = np.where(take, tu, best_u)
        best_v = np.where(take, tv, best_v)
    return best_u, best_v


def trajectory_residual(u0, v0, u1, v1):
    """Distance between each vector of the first field and the second field
    sampled (bilinearly) where that vector lands.

    Returns ``(values, valid)``; landing points outside the frame are marked
    invalid and carry value 0.
    """
    h, w = u0.shape
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    px = xs + u0
    py = ys + v0
    valid = (px >= 0.0) & (px <= w - 1.0) & (py >= 0.0) & (py <= h - 1.0)
    px = np.where(valid, px, 0.0)
    py = np.where(valid, py, 0.0)
    x0 = np.floor(px).astype(np.intp)
    y0 = np.floor(py).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = px - x0
    fy = py - y0
    gx = 1.0 - fx
    gy = 1.0 - fy

    def sample(a):
        top = gx * a[y0, x0] + fx * a[y0, x1]
        bottom = gx * a[y1, x0] + fx * a[y1, x1]
        return gy * top + fy * bottom

    du = u0 - sample(u1)
    dv = v0 - sample(v1)
    values = np.sqrt(du * du + dv * dv)
    values[~valid] = 0.0
    return values, valid


def divergence(u, v):
    """|du/dx + dv/dy| with central differences inside, one-sided at borders."""
    return np.abs(np.gradient(u, axis=1) + np.gradient(v, axis=0))


def divergence_mean(u, v):
    h, w = u.shape
    # interior: twice the central-difference divergence, halved after summing
    t = u[1:-1, 2:] - u[1:-1, :-2]
    s = v[2:, 1:-1] - v[:-2, 1:-1]
    t += s
    np.abs(t, out=t)
    interior = 0.5 * float(t.sum())
    top = divergence(u[:3], v[:3])[0]
    bottom = divergence(u[-3:], v[-3:])[-1]
    cols = np.abs(_edge_cols(u, v))
    return (interior + float(top.sum()) + float(bottom.sum()) + float(cols.sum())) / (h * w)


def _edge_cols(u, v):
    """Divergence (signed) at columns 0 and w-1, rows 1..h-2."""
    dudx_l = u[1:-1, 1] - u[1:-1, 0]
    dudx_r = u[1:-1, -1] - u[1:-1, -2]
    dvdy_l = (v[2:, 0] - v[:-2, 0]) / 2.0
    dvdy_r = (v[2:, -1] - v[:-2, -1]) / 2.0
    return np.concatenate([dudx_l + dvdy_l, dudx_r + dvdy_r])
