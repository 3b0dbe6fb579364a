"""Embedded-boundary Cartesian grids and nodal scalar fields.

Nodes sit at integer multiples of the spacing h and are classified interior
(signed distance > 0), ghost (exterior but axis-adjacent to an interior node),
or exterior.  Each interior-to-exterior axis link stores a boundary intercept:
the fraction theta in (0, 1] of the link at which the boundary is crossed and
the foot point itself, located by bisection to |d| <= 1e-8.

Ghost values are closed in terms of interior unknowns and Dirichlet foot
values by one-dimensional extrapolation along the link:

  * theta >= 0.1 and a second interior node available: quadratic through
    (inner neighbor, owner, foot) -- exact for quadratics, which keeps the
    second-difference stencils exact for quadratic solutions,
  * theta < 0.1: quadratic through the two inner nodes and the foot, skipping
    the owner (bounded weights as theta -> 0),
  * single interior node available: linear through (owner, foot), with theta
    clamped below at 0.1 and the clamp flagged.

All finite-difference stencils are assembled once per grid as sparse operator
pairs (interior block, foot block), so an operator applied to a field is one
sparse mat-vec and the ghost elimination is identical in nodal evaluation and
linear-system assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps

from .geometry import DomainSpec

NODE_EXTERIOR, NODE_INTERIOR, NODE_GHOST = 0, 1, 2

_THETA_SWITCH = 0.1      # below this, extrapolation skips the owner node
_FOOT_TOL = 1e-8         # |signed distance| at accepted foot points


class GridError(RuntimeError):
    pass


class InvalidFieldError(ValueError):
    pass


_AXES = ((1, 0), (-1, 0), (0, 1), (0, -1))


class Grid:
    """Uniform grid over the domain bounding box plus a two-cell margin."""

    def __init__(self, domain: DomainSpec, h: float):
        if h <= 0:
            raise GridError("spacing h must be positive")
        self.domain = domain
        self.h = float(h)
        self._build_nodes()
        self._classify()
        self._find_intercepts()
        self._close_ghosts()
        self._cross_masks()
        self._ops: Optional[dict] = None

    # -- construction --------------------------------------------------------

    def _build_nodes(self):
        h = self.h
        x0, x1, y0, y1 = self.domain.bbox
        i0 = math.floor(x0 / h) - 2
        i1 = math.ceil(x1 / h) + 2
        j0 = math.floor(y0 / h) - 2
        j1 = math.ceil(y1 / h) + 2
        self.xs = h * np.arange(i0, i1 + 1)
        self.ys = h * np.arange(j0, j1 + 1)
        self.nx, self.ny = len(self.xs), len(self.ys)
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        self.X, self.Y = X, Y
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        self.d = self.domain.signed_distance(pts).reshape(self.nx, self.ny)

    def _classify(self):
        tol = 1e-12 * max(1.0, max(abs(v) for v in self.domain.bbox))
        cls = np.zeros((self.nx, self.ny), dtype=np.int8)
        interior = self.d > tol
        cls[interior] = NODE_INTERIOR
        ghost = np.zeros_like(interior)
        for dx, dy in _AXES:
            shifted = np.zeros_like(interior)
            src = interior
            if dx == 1:
                shifted[1:, :] = src[:-1, :]
            elif dx == -1:
                shifted[:-1, :] = src[1:, :]
            elif dy == 1:
                shifted[:, 1:] = src[:, :-1]
            else:
                shifted[:, :-1] = src[:, 1:]
            ghost |= shifted & ~interior
        cls[ghost] = NODE_GHOST
        self.cls = cls
        self.interior_mask = interior
        ii, jj = np.nonzero(interior)
        self.interior_ij = np.stack([ii, jj], axis=-1)
        self.n_interior = len(ii)
        if self.n_interior == 0:
            raise GridError("no interior nodes at this spacing")
        self.node_id = -np.ones((self.nx, self.ny), dtype=np.int64)
        self.node_id[ii, jj] = np.arange(self.n_interior)
        self.interior_xy = np.stack([self.xs[ii], self.ys[jj]], axis=-1)
        self.interior_d = self.d[ii, jj]

    def _find_intercepts(self):
        """One foot per interior->exterior axis link, by bisection on d."""
        feet_owner, feet_axis, feet_theta, feet_xy = [], [], [], []
        lookup = {}
        cls = self.cls
        for axis, (dx, dy) in enumerate(_AXES):
            ii, jj = self.interior_ij[:, 0], self.interior_ij[:, 1]
            ni, nj = ii + dx, jj + dy
            valid = (ni >= 0) & (ni < self.nx) & (nj >= 0) & (nj < self.ny)
            ext = np.zeros(len(ii), dtype=bool)
            ext[valid] = cls[ni[valid], nj[valid]] != NODE_INTERIOR
            sel = np.nonzero(ext)[0]
            if len(sel) == 0:
                continue
            p0 = self.interior_xy[sel]
            direction = np.array([dx, dy], dtype=float) * self.h
            lo = np.zeros(len(sel))
            hi = np.ones(len(sel))
            # d(p0) > 0, d(p0 + dir) <= 0: bisect the sign change
            for _ in range(52):
                mid = 0.5 * (lo + hi)
                dm = self.domain.signed_distance(p0 + mid[:, None] * direction)
                pos = dm > 0.0
                lo = np.where(pos, mid, lo)
                hi = np.where(pos, hi, mid)
            theta = 0.5 * (lo + hi)
            foot = p0 + theta[:, None] * direction
            dfoot = np.abs(self.domain.signed_distance(foot))
            if np.max(dfoot) > _FOOT_TOL:
                bad = int(np.argmax(dfoot))
                raise GridError(f"foot localization failed: |d| = {dfoot[bad]:.2e}")
            base = len(feet_theta) and sum(len(t) for t in feet_theta)
            for k, s in enumerate(sel):
                fid = (base or 0) + k
                lookup[(int(ii[s]), int(jj[s]), axis)] = fid
            feet_owner.append(self.node_id[ii[sel], jj[sel]])
            feet_axis.append(np.full(len(sel), axis, dtype=np.int8))
            feet_theta.append(np.maximum(theta, 1e-12))
            feet_xy.append(foot)
        if feet_theta:
            self.foot_owner = np.concatenate(feet_owner)
            self.foot_axis = np.concatenate(feet_axis)
            self.foot_theta = np.concatenate(feet_theta)
            self.foot_xy = np.concatenate(feet_xy)
        else:
            self.foot_owner = np.zeros(0, dtype=np.int64)
            self.foot_axis = np.zeros(0, dtype=np.int8)
            self.foot_theta = np.zeros(0)
            self.foot_xy = np.zeros((0, 2))
        self.n_feet = len(self.foot_theta)
        self._foot_lookup = lookup
        self.foot_s = (self.domain.arclength_of(self.foot_xy)
                       if self.n_feet else np.zeros(0))

    def _close_ghosts(self):
        """Express each ghost value as sum(w_k u_k) + sum(v_k phi_k)."""
        gii, gjj = np.nonzero(self.cls == NODE_GHOST)
        self.ghost_ij = np.stack([gii, gjj], axis=-1)
        self.ghost_id = -np.ones((self.nx, self.ny), dtype=np.int64)
        self.ghost_id[gii, gjj] = np.arange(len(gii))
        n_ghost = len(gii)
        self.flags = {"ghost_linear_fallback": 0, "ghost_theta_clamped": 0,
                      "cross_one_sided": 0, "cross_missing": 0}
        # up to 2 axes x (2 interior nodes + 1 foot)
        nodes = -np.ones((n_ghost, 4), dtype=np.int64)
        node_w = np.zeros((n_ghost, 4))
        feet = -np.ones((n_ghost, 2), dtype=np.int64)
        feet_w = np.zeros((n_ghost, 2))
        # distance of every ghost to the boundary must stay within 2h
        if n_ghost:
            gd = -self.d[gii, gjj]
            if np.max(gd) > 2.0 * self.h + 1e-12:
                raise GridError("ghost node farther than 2h from the boundary")
        for g in range(n_ghost):
            i, j = int(gii[g]), int(gjj[g])
            per_axis = []
            for axis, (dx, dy) in enumerate(_AXES):
                pi, pj = i + dx, j + dy     # neighbor that might own this ghost
                if not (0 <= pi < self.nx and 0 <= pj < self.ny):
                    continue
                if self.cls[pi, pj] != NODE_INTERIOR:
                    continue
                # the owner's link toward this ghost points opposite to (dx, dy)
                back_axis = {(1, 0): 1, (-1, 0): 0, (0, 1): 3, (0, -1): 2}[(dx, dy)]
                fid = self._foot_lookup.get((pi, pj, back_axis))
                if fid is None:
                    continue
                theta = float(self.foot_theta[fid])
                p_id = int(self.node_id[pi, pj])
                qi, qj = pi + dx, pj + dy   # next node inward
                q_ok = (0 <= qi < self.nx and 0 <= qj < self.ny
                        and self.cls[qi, qj] == NODE_INTERIOR)
                ri, rj = pi + 2 * dx, pj + 2 * dy
                r_ok = (0 <= ri < self.nx and 0 <= rj < self.ny
                        and self.cls[ri, rj] == NODE_INTERIOR)
                if q_ok and theta >= _THETA_SWITCH:
                    q_id = int(self.node_id[qi, qj])
                    w = ((q_id, (1.0 - theta) / (1.0 + theta)),
                         (p_id, -2.0 * (1.0 - theta) / theta))
                    fw = 2.0 / (theta * (1.0 + theta))
                elif q_ok and r_ok:
                    q_id = int(self.node_id[qi, qj])
                    r_id = int(self.node_id[ri, rj])
                    w = ((r_id, 2.0 * (1.0 - theta) / (2.0 + theta)),
                         (q_id, -3.0 * (1.0 - theta) / (1.0 + theta)))
                    fw = 6.0 / ((2.0 + theta) * (1.0 + theta))
                else:
                    tc = max(theta, _THETA_SWITCH)
                    if tc != theta:
                        self.flags["ghost_theta_clamped"] += 1
                    self.flags["ghost_linear_fallback"] += 1
                    w = ((p_id, 1.0 - 1.0 / tc),)
                    fw = 1.0 / tc
                per_axis.append((w, fid, fw))
            if not per_axis:
                continue
            scale = 1.0 / len(per_axis)
            acc_nodes: dict[int, float] = {}
            acc_feet: dict[int, float] = {}
            for w, fid, fw in per_axis:
                for nid, wv in w:
                    acc_nodes[nid] = acc_nodes.get(nid, 0.0) + scale * wv
                acc_feet[fid] = acc_feet.get(fid, 0.0) + scale * fw
            for k, (nid, wv) in enumerate(sorted(acc_nodes.items())[:4]):
                nodes[g, k] = nid
                node_w[g, k] = wv
            for k, (fid, wv) in enumerate(sorted(acc_feet.items())[:2]):
                feet[g, k] = fid
                feet_w[g, k] = wv
        self.ghost_nodes = nodes
        self.ghost_node_w = node_w
        self.ghost_feet = feet
        self.ghost_feet_w = feet_w
        self.n_ghost = n_ghost

    def _cross_masks(self):
        """cross_ok: all four diagonal neighbors usable (interior or closed ghost)."""
        usable = (self.cls == NODE_INTERIOR) | (self.cls == NODE_GHOST)
        ok = np.ones(self.n_interior, dtype=bool)
        ii, jj = self.interior_ij[:, 0], self.interior_ij[:, 1]
        for dx in (-1, 1):
            for dy in (-1, 1):
                ni, nj = ii + dx, jj + dy
                inb = (ni >= 0) & (ni < self.nx) & (nj >= 0) & (nj < self.ny)
                this_ok = np.zeros(self.n_interior, dtype=bool)
                this_ok[inb] = usable[ni[inb], nj[inb]]
                ok &= this_ok
        self.cross_ok = ok
        # core region for residual reporting: at least 2h inside
        self.core_mask = self.interior_d >= 2.0 * self.h - 1e-12

    # -- ghost helpers -------------------------------------------------------

    def ghost_values(self, u_int: np.ndarray, feet_vals: np.ndarray) -> np.ndarray:
        """Evaluate all ghost closures for interior values + Dirichlet foot values."""
        vals = np.zeros(self.n_ghost)
        for k in range(4):
            sel = self.ghost_nodes[:, k] >= 0
            vals[sel] += self.ghost_node_w[sel, k] * u_int[self.ghost_nodes[sel, k]]
        for k in range(2):
            sel = self.ghost_feet[:, k] >= 0
            vals[sel] += self.ghost_feet_w[sel, k] * feet_vals[self.ghost_feet[sel, k]]
        return vals

    # -- stencil operators ----------------------------------------------------

    def operators(self) -> dict:
        """Sparse pairs (interior block, foot block) for Gx, Gy, Dxx, Dyy, Dxy."""
        if self._ops is None:
            self._ops = self._build_operators()
        return self._ops

    def _neighbor_entries(self, i, j):
        """(kind, payload) for node (i, j): interior id or ghost closure lists."""
        c = self.cls[i, j]
        if c == NODE_INTERIOR:
            return [(int(self.node_id[i, j]), 1.0)], []
        if c == NODE_GHOST:
            g = int(self.ghost_id[i, j])
            ns = [(int(n), float(w)) for n, w in
                  zip(self.ghost_nodes[g], self.ghost_node_w[g]) if n >= 0]
            fs = [(int(f), float(w)) for f, w in
                  zip(self.ghost_feet[g], self.ghost_feet_w[g]) if f >= 0]
            return ns, fs
        return None, None    # exterior: caller must avoid

    def _build_operators(self):
        h = self.h
        Ni, Nf = self.n_interior, self.n_feet
        ii, jj = self.interior_ij[:, 0], self.interior_ij[:, 1]
        ids = np.arange(Ni)

        def neighbor_interior(dx, dy):
            ni, nj = ii + dx, jj + dy
            ok = (ni >= 0) & (ni < self.nx) & (nj >= 0) & (nj < self.ny)
            out = -np.ones(Ni, dtype=np.int64)
            out[ok] = self.node_id[ni[ok], nj[ok]]
            return out

        nbr = {}
        for dx in (-2, -1, 0, 1, 2):
            for dy in (-2, -1, 0, 1, 2):
                if abs(dx) + abs(dy) <= 2 and (dx, dy) != (0, 0):
                    nbr[(dx, dy)] = neighbor_interior(dx, dy)

        axis_int = ((nbr[(1, 0)] >= 0) & (nbr[(-1, 0)] >= 0)
                    & (nbr[(0, 1)] >= 0) & (nbr[(0, -1)] >= 0))
        diag_int = (axis_int & (nbr[(1, 1)] >= 0) & (nbr[(1, -1)] >= 0)
                    & (nbr[(-1, 1)] >= 0) & (nbr[(-1, -1)] >= 0))

        builders = {}
        for name, terms in {
            "Gx": (((1, 0), 0.5 / h), ((-1, 0), -0.5 / h)),
            "Gy": (((0, 1), 0.5 / h), ((0, -1), -0.5 / h)),
            "Dxx": (((1, 0), 1.0 / h**2), ((-1, 0), 1.0 / h**2), ((0, 0), -2.0 / h**2)),
            "Dyy": (((0, 1), 1.0 / h**2), ((0, -1), 1.0 / h**2), ((0, 0), -2.0 / h**2)),
        }.items():
            rows_i, cols_i, vals_i = [], [], []
            rows_f, cols_f, vals_f = [], [], []
            # vectorized bulk
            bulk = axis_int
            for (dx, dy), w in terms:
                tgt = ids[bulk] if (dx, dy) == (0, 0) else nbr[(dx, dy)][bulk]
                rows_i.append(ids[bulk])
                cols_i.append(tgt)
                vals_i.append(np.full(bulk.sum(), w))
            # collar loop
            for r in np.nonzero(~bulk)[0]:
                i, j = int(ii[r]), int(jj[r])
                for (dx, dy), w in terms:
                    if (dx, dy) == (0, 0):
                        rows_i.append([r]); cols_i.append([r]); vals_i.append([w])
                        continue
                    ns, fs = self._neighbor_entries(i + dx, j + dy)
                    if ns is None:
                        raise GridError("axis neighbor of an interior node is unclassified")
                    for nid, wv in ns:
                        rows_i.append([r]); cols_i.append([nid]); vals_i.append([w * wv])
                    for fid, wv in fs:
                        rows_f.append([r]); cols_f.append([fid]); vals_f.append([w * wv])
            builders[name] = (
                sps.csr_matrix((np.concatenate([np.asarray(v, dtype=float) for v in vals_i]),
                                (np.concatenate([np.asarray(v) for v in rows_i]),
                                 np.concatenate([np.asarray(v) for v in cols_i]))),
                               shape=(Ni, Ni)),
                sps.csr_matrix((np.concatenate([np.asarray(v, dtype=float) for v in vals_f])
                                if vals_f else np.zeros(0),
                                (np.concatenate([np.asarray(v) for v in rows_f])
                                 if rows_f else np.zeros(0, dtype=int),
                                 np.concatenate([np.asarray(v) for v in cols_f])
                                 if cols_f else np.zeros(0, dtype=int))),
                               shape=(Ni, Nf)),
            )

        # cross derivative: centered where possible, one-sided first-order otherwise
        rows_i, cols_i, vals_i = [], [], []
        rows_f, cols_f, vals_f = [], [], []
        bulk = diag_int
        w4 = 0.25 / h**2
        for (dx, dy), w in (((1, 1), w4), ((-1, -1), w4), ((1, -1), -w4), ((-1, 1), -w4)):
            rows_i.append(ids[bulk])
            cols_i.append(nbr[(dx, dy)][bulk])
            vals_i.append(np.full(bulk.sum(), w))
        one_sided = np.zeros(Ni, dtype=bool)
        missing = np.zeros(Ni, dtype=bool)
        usable = (self.cls == NODE_INTERIOR) | (self.cls == NODE_GHOST)
        for r in np.nonzero(~bulk)[0]:
            i, j = int(ii[r]), int(jj[r])
            if self.cross_ok[r]:
                # all diagonals usable but some are ghosts: still centered
                for (dx, dy), w in (((1, 1), w4), ((-1, -1), w4), ((1, -1), -w4), ((-1, 1), -w4)):
                    ns, fs = self._neighbor_entries(i + dx, j + dy)
                    for nid, wv in ns:
                        rows_i.append([r]); cols_i.append([nid]); vals_i.append([w * wv])
                    for fid, wv in fs:
                        rows_f.append([r]); cols_f.append([fid]); vals_f.append([w * wv])
                continue
            # pick a quadrant whose diagonal is usable, preferring interior diagonals
            quad = None
            for want_interior in (True, False):
                for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    di, dj = i + a, j + b
                    if not (0 <= di < self.nx and 0 <= dj < self.ny):
                        continue
                    if want_interior and self.cls[di, dj] != NODE_INTERIOR:
                        continue
                    if not usable[di, dj]:
                        continue
                    quad = (a, b)
                    break
                if quad:
                    break
            if quad is None:
                missing[r] = True
                continue
            a, b = quad
            one_sided[r] = True
            sgn = a * b / h**2
            for (dx, dy), w in (((a, b), sgn), ((a, 0), -sgn), ((0, b), -sgn), ((0, 0), sgn)):
                if (dx, dy) == (0, 0):
                    rows_i.append([r]); cols_i.append([r]); vals_i.append([w])
                    continue
                ns, fs = self._neighbor_entries(i + dx, j + dy)
                for nid, wv in ns:
                    rows_i.append([r]); cols_i.append([nid]); vals_i.append([w * wv])
                for fid, wv in fs:
                    rows_f.append([r]); cols_f.append([fid]); vals_f.append([w * wv])
        self.flags["cross_one_sided"] = int(one_sided.sum())
        self.flags["cross_missing"] = int(missing.sum())
        self.cross_one_sided = one_sided
        builders["Dxy"] = (
            sps.csr_matrix((np.concatenate([np.asarray(v, dtype=float) for v in vals_i]),
                            (np.concatenate([np.asarray(v) for v in rows_i]),
                             np.concatenate([np.asarray(v) for v in cols_i]))),
                           shape=(Ni, Ni)),
            sps.csr_matrix((np.concatenate([np.asarray(v, dtype=float) for v in vals_f])
                            if vals_f else np.zeros(0),
                            (np.concatenate([np.asarray(v) for v in rows_f])
                             if rows_f else np.zeros(0, dtype=int),
                             np.concatenate([np.asarray(v) for v in cols_f])
                             if cols_f else np.zeros(0, dtype=int))),
                           shape=(Ni, Nf)),
        )
        return builders

    def __repr__(self):
        return (f"Grid(h={self.h:g}, interior={self.n_interior}, "
                f"ghosts={self.n_ghost}, feet={self.n_feet})")


# ---------------------------------------------------------------------------


@dataclass
class ScalarField:
    """Nodal field: interior values plus the Dirichlet trace at boundary feet."""

    grid: Grid
    values: np.ndarray                 # (n_interior,)
    feet: Optional[np.ndarray] = None  # (n_feet,)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_interior,):
            raise InvalidFieldError("field/interior size mismatch")
        if self.feet is not None:
            self.feet = np.asarray(self.feet, dtype=float)
            if self.feet.shape != (self.grid.n_feet,):
                raise InvalidFieldError("field/feet size mismatch")

    def validate(self):
        if not np.all(np.isfinite(self.values)):
            raise InvalidFieldError("non-finite interior values")
        if self.feet is not None and not np.all(np.isfinite(self.feet)):
            raise InvalidFieldError("non-finite boundary trace")
        return self

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable, boundary: Optional[Callable] = None):
        """Sample f(x, y) at interior nodes; boundary trace from `boundary` or f."""
        vals = f(grid.interior_xy[:, 0], grid.interior_xy[:, 1])
        bf = boundary if boundary is not None else f
        feet = (bf(grid.foot_xy[:, 0], grid.foot_xy[:, 1])
                if grid.n_feet else np.zeros(0))
        return cls(grid, np.asarray(vals, dtype=float),
                   np.asarray(feet, dtype=float)).validate()

    @classmethod
    def from_data(cls, grid: Grid, values: np.ndarray, data) -> "ScalarField":
        """Interior values plus a BoundaryData trace evaluated at the feet."""
        feet = (np.asarray(data.trace(grid.foot_xy, grid.foot_s), dtype=float)
                if grid.n_feet else np.zeros(0))
        return cls(grid, values, feet)

    @classmethod
    def zeros(cls, grid: Grid, data=None):
        vals = np.zeros(grid.n_interior)
        if data is None:
            return cls(grid, vals, np.zeros(grid.n_feet))
        return cls.from_data(grid, vals, data)

    def copy(self):
        return ScalarField(self.grid, self.values.copy(),
                           None if self.feet is None else self.feet.copy())

    def shifted(self, c: float) -> "ScalarField":
        """Vertical translation u + c (trace shifts too)."""
        return ScalarField(self.grid, self.values + c,
                           None if self.feet is None else self.feet + c)

    def sup(self) -> float:
        m = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if self.feet is not None and self.feet.size:
            m = max(m, float(np.max(np.abs(self.feet))))
        return m

    def ghost_values(self) -> np.ndarray:
        if self.feet is None:
            raise InvalidFieldError("boundary trace required for ghost reconstruction")
        return self.grid.ghost_values(self.values, self.feet)

    def __sub__(self, other: "ScalarField"):
        return ScalarField(self.grid, self.values - other.values, None)
