"""Independent reference computations used only by the tests."""

import itertools
import math

import numpy as np


def series_exp(A, t=1.0, terms=50):
    """Plain truncated power series for e^{At}; fine for small ||A t||."""
    A = np.asarray(A, dtype=float) * t
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def series_phi1(A, t, terms=50):
    """sum_k A^k t^{k+1} / (k+1)!"""
    A = np.asarray(A, dtype=float)
    out = np.zeros_like(A)
    P = np.eye(A.shape[0])
    for k in range(terms):
        out = out + P * t ** (k + 1) / math.factorial(k + 1)
        P = P @ A
    return out


def brute_vertices(G, h, tol=1e-9):
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    pts = []
    for rows in itertools.combinations(range(m), n):
        A = G[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, h[list(rows)])
        if np.all(G @ x <= h + tol):
            pts.append(x)
    return np.array(pts).reshape(-1, n)


def rk4_batch(A, u, X, dt, steps):
    """Integrate x' = A x + u for every row of X; returns an array (steps+1, k, n)."""
    A = np.asarray(A, dtype=float)
    u = np.asarray(u, dtype=float)

    def f(x):
        return x @ A.T + u

    out = [X]
    x = X
    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + dt / 2 * k1)
        k3 = f(x + dt / 2 * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x)
    return np.array(out)


def rotation(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def sample_box(box, k, rng):
    return rng.uniform(box.lower, box.upper, size=(k, box.dim))


def containment_failures(f, dyn, inv, X0, rng, k=100, sub=10, tol=1e-6):
    """Simulate k trajectories from X0 with RK4 (step tau/sub) and count points of
    the emitted time slices that lie outside their Omega_i (inflated by tol).

    Points outside the location invariant are not part of the reach set and are skipped.
    Set-valued inputs are sampled as one constant input per trajectory.
    """
    j = len(f)
    if j == 0:
        return 0
    tau = f.step
    X = sample_box(X0, k, rng)
    U = dyn.input.as_set()
    us = rng.uniform(U.lower, U.upper, size=(k, X0.dim))
    A = np.asarray(dyn.A, dtype=float)

    def rhs(x):
        return x @ A.T + us

    h = tau / sub
    traj = [X]
    x = X
    for _ in range(j * sub):
        k1 = rhs(x)
        k2 = rhs(x + h / 2 * k1)
        k3 = rhs(x + h / 2 * k2)
        k4 = rhs(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        traj.append(x)
    traj = np.array(traj)
    starts = np.arange(j)[:, None] * sub + np.arange(sub + 1)[None, :]
    seg = traj[starts]                                  # (j, sub+1, k, n)
    keep = np.ones(seg.shape[:3], dtype=bool)
    for hs in inv:
        keep &= seg @ hs.normal <= hs.offset
    vals = seg @ f.template.matrix.T                    # (j, sub+1, k, m)
    ok = np.all(vals <= f.bounds[:, None, None, :] + tol, axis=-1)
    for hs in f.extra:
        ok &= seg @ hs.normal <= hs.offset + tol
    return int(np.count_nonzero(keep & ~ok))


def _rk4_step(x, A, u, h):
    def f(y):
        return y @ A.T + u
    k1 = f(x)
    k2 = f(x + h / 2 * k1)
    k3 = f(x + h / 2 * k2)
    k4 = f(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _violation(x, inv):
    if not inv:
        return np.full(len(x), -np.inf)
    G = np.array([hs.normal for hs in inv])
    b = np.array([hs.offset for hs in inv])
    return np.max(x @ G.T - b, axis=1)


def _inside(f, i, x, tol):
    ok = np.all(x @ f.template.matrix.T <= f.bounds[i] + tol, axis=1)
    for hs in f.extra:
        ok &= x @ hs.normal <= hs.offset + tol
    return ok


def hybrid_containment(result, ha, X, steps, sub=10, tol=1e-6, inv_tol=1e-9, guard_tol=1e-7):
    """Follow hybrid trajectories from the rows of X through the explored levels of ``result``.

    Each location is integrated with RK4 at step tau/sub. When a trajectory leaves the
    invariant, the exit point is located by bisection, an enabled transition is taken
    and the trajectory continues in the successor entry produced by that transition.
    Every sample (and every exit point) must lie in the Omega_i covering its time.

    Returns (number of failed checks, number of jumps per trajectory).
    """
    children = {}
    for lvl in result.levels[1:]:
        for e in lvl:
            children.setdefault((id(e.parent), e.transition), e)
    last_level = len(result.levels) - 1
    fails = 0
    jumps = np.zeros(len(X), dtype=int)
    work = [(result.levels[0][0], np.array(X, dtype=float), np.arange(len(X)))]
    while work:
        e, x, ids = work.pop()
        f = e.flowpipe
        loc = ha.location(e.state.loc)
        A, u = loc.dynamics.A, loc.dynamics.input.u
        h = f.step / sub
        pending = {}
        alive = np.ones(len(x), dtype=bool)
        for s in range(steps * sub + 1):
            if not alive.any():
                break
            i = s // sub
            idx = np.flatnonzero(alive)
            if i >= len(f):
                if s < steps * sub:
                    fails += idx.size  # still inside the invariant but the flowpipe has ended
                break
            fails += int(np.count_nonzero(~_inside(f, i, x[idx], tol)))
            if s % sub == 0 and i > 0:
                fails += int(np.count_nonzero(~_inside(f, i - 1, x[idx], tol)))
            if s == steps * sub:
                break
            nxt = _rk4_step(x[idx], A, u, h)
            out = _violation(nxt, loc.invariant) > inv_tol
            for r in idx[out]:
                lo, hi = 0.0, h
                for _ in range(60):
                    mid = (lo + hi) / 2
                    if _violation(_rk4_step(x[r:r + 1], A, u, mid), loc.invariant)[0] > inv_tol:
                        hi = mid
                    else:
                        lo = mid
                xc = _rk4_step(x[r:r + 1], A, u, lo)
                k_exit = int((s * h + lo) // f.step)
                if k_exit < len(f):
                    fails += int(not _inside(f, k_exit, xc, tol)[0])
                elif k_exit < steps:
                    fails += 1
                for k in ha.outgoing(loc.id):
                    t = ha.transitions[k]
                    if _violation(xc, t.guard)[0] > guard_tol:
                        continue
                    y = xc @ t.M.T + t.v
                    if _violation(y, ha.location(t.target).invariant)[0] > guard_tol:
                        continue
                    jumps[ids[r]] += 1
                    if e.level < last_level:
                        child = children.get((id(e), k))
                        if child is None:
                            fails += 1
                        else:
                            pending.setdefault(id(child), (child, []))[1].append((y[0], ids[r]))
                    break
            alive[idx[out]] = False
            keep = idx[~out]
            x[keep] = nxt[~out]
        for child, items in pending.values():
            work.append((child, np.array([p for p, _ in items]), np.array([j for _, j in items])))
    return fails, jumps
