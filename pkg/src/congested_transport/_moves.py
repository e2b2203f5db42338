"""Line-searched mass move between two paths (hot kernel, both backends).

Moving mass t from a donor path to a receiver changes only the union of
their edges; the optimal t solves a 1-d convex problem by bisection on the
directional derivative.  The congestion family H(z) = A z^q + c0 z is
hardcoded so the inner loop stays scalar.
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA


def _move_python(
    f_loc, delta, w_loc, ld, lw_loc, mass, tol,
    budget, residue_cap, hp_coeff, q, big_a, c0,
):
    qm1 = q - 1.0

    def slope(t):
        dens = np.maximum(f_loc + t * delta, 0.0) / w_loc
        return float(np.dot(ld, hp_coeff * np.power(dens, qm1) + c0))

    def local_cost(t):
        dens = np.maximum(f_loc + t * delta, 0.0) / w_loc
        return float(np.dot(lw_loc, big_a * np.power(dens, q) + c0 * dens))

    spent = 0.0
    if slope(0.0) < 0.0 and slope(mass) <= 0.0:
        return mass, 0.0
    moved = 0.0
    if slope(0.0) < 0.0:
        lo, hi = 0.0, mass
        width_tol = max(tol * mass, 1e-18)
        while hi - lo > width_tol:
            mid = 0.5 * (lo + hi)
            if slope(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        moved = 0.5 * (lo + hi)
    if 0.0 < mass and moved < mass and mass - moved <= residue_cap:
        extra = local_cost(mass) - local_cost(moved)
        if extra <= budget:
            return mass, max(extra, 0.0)
    return moved, spent


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _move_numba(
        f_loc, delta, w_loc, ld, lw_loc, mass, tol,
        budget, residue_cap, hp_coeff, q, big_a, c0,
    ):
        qm1 = q - 1.0
        n = f_loc.size

        def slope(t):
            s = 0.0
            for i in range(n):
                dens = f_loc[i] + t * delta[i]
                if dens < 0.0:
                    dens = 0.0
                dens /= w_loc[i]
                s += ld[i] * (hp_coeff * dens ** qm1 + c0)
            return s

        def local_cost(t):
            s = 0.0
            for i in range(n):
                dens = f_loc[i] + t * delta[i]
                if dens < 0.0:
                    dens = 0.0
                dens /= w_loc[i]
                s += lw_loc[i] * (big_a * dens ** q + c0 * dens)
            return s

        spent = 0.0
        s0 = slope(0.0)
        if s0 < 0.0 and slope(mass) <= 0.0:
            return mass, 0.0
        moved = 0.0
        if s0 < 0.0:
            lo = 0.0
            hi = mass
            width_tol = tol * mass
            if width_tol < 1e-18:
                width_tol = 1e-18
            while hi - lo > width_tol:
                mid = 0.5 * (lo + hi)
                if slope(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
            moved = 0.5 * (lo + hi)
        if 0.0 < mass and moved < mass and mass - moved <= residue_cap:
            extra = local_cost(mass) - local_cost(moved)
            if extra <= budget:
                return mass, max(extra, 0.0)
        return moved, spent


def line_searched_move(
    f_loc, delta, w_loc, ld, lw_loc, mass, tol,
    budget, residue_cap, hp_coeff, q, big_a, c0,
):
    """Optimal mass shift along a two-path swap direction; see module doc."""
    if USE_NUMBA:
        return _move_numba(
            f_loc, delta, w_loc, ld, lw_loc, mass, tol,
            budget, residue_cap, hp_coeff, q, big_a, c0,
        )
    return _move_python(
        f_loc, delta, w_loc, ld, lw_loc, mass, tol,
        budget, residue_cap, hp_coeff, q, big_a, c0,
    )
