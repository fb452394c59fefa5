"""Compiled single-site Gibbs sweep.

The sweep walks the hidden grid in a fixed order (time ascending, then
individual ascending) and resamples each cell from its full conditional.
Infected-neighbor counts per cell are maintained incrementally so a site
update costs O(family size + degree) instead of O(I).

The factor layout (prior, then self/family/contact successors, then the
emission) matches ``gibbs.gibbs_conditional`` exactly, including the
order of floating-point operations, so the two paths produce identical
probabilities.
"""

import numpy as np
from numba import njit

PROB_CAP = 1.0 - 1e-9


@njit(cache=True)
def sweep(
    states,        # (T+1, I) int8, mutated in place; row 0 is pinned
    adjacency,     # (T, I, I) bool
    family_of,     # (I,) int64
    fam_indptr,    # (F+1,) int64
    fam_members,   # (I,) int64, grouped by family, ascending within a family
    obs,           # (T+1, F) int8, -1 where untested
    alpha, beta, beta_f, gamma, theta0, theta1,
    fam_inf,       # (T+1, F) int64, infected members per family, kept in sync
    con_inf,       # (T, I) int64, infected non-family contacts, kept in sync
    uniforms,      # (T, I) float64, one draw per resampled cell
):
    """One full sweep; returns the number of flipped cells."""
    horizon = states.shape[0] - 1
    n = states.shape[1]
    flips = 0
    for t in range(1, horizon + 1):
        for i in range(n):
            cur = states[t, i]
            f = family_of[i]
            # Prior factor from the cell's own predecessors.
            x_prev = states[t - 1, i]
            if x_prev == 1:
                n1 = 1.0 - gamma
                n0 = gamma
            else:
                p = alpha + beta * con_inf[t - 1, i] + beta_f * (fam_inf[t - 1, f] - x_prev)
                if p > PROB_CAP:
                    p = PROB_CAP
                n1 = p
                n0 = 1.0 - p
            if t < horizon:
                # Successor factor of the cell itself.
                x_next = states[t + 1, i]
                if x_next == 1:
                    f1 = 1.0 - gamma
                else:
                    f1 = gamma
                p = alpha + beta * con_inf[t, i] + beta_f * (fam_inf[t, f] - cur)
                if p > PROB_CAP:
                    p = PROB_CAP
                if x_next == 1:
                    f0 = p
                else:
                    f0 = 1.0 - p
                n1 *= f1
                n0 *= f0
                # Successor factors of susceptible family members: the cell
                # enters their infected-family count.  Infected ones evolve
                # by the recovery rate regardless, so those factors cancel.
                for k in range(fam_indptr[f], fam_indptr[f + 1]):
                    j = fam_members[k]
                    if j == i or states[t, j] == 1:
                        continue
                    base = fam_inf[t, f] - states[t, j] - cur
                    cj = con_inf[t, j]
                    p0 = alpha + beta * cj + beta_f * base
                    if p0 > PROB_CAP:
                        p0 = PROB_CAP
                    p1 = alpha + beta * cj + beta_f * (base + 1)
                    if p1 > PROB_CAP:
                        p1 = PROB_CAP
                    if states[t + 1, j] == 1:
                        n0 *= p0
                        n1 *= p1
                    else:
                        n0 *= 1.0 - p0
                        n1 *= 1.0 - p1
                # Successor factors of susceptible day-t contacts.
                for j in range(n):
                    if not adjacency[t, i, j] or states[t, j] == 1:
                        continue
                    base = con_inf[t, j] - cur
                    nj = fam_inf[t, family_of[j]] - states[t, j]
                    p0 = alpha + beta * base + beta_f * nj
                    if p0 > PROB_CAP:
                        p0 = PROB_CAP
                    p1 = alpha + beta * (base + 1) + beta_f * nj
                    if p1 > PROB_CAP:
                        p1 = PROB_CAP
                    if states[t + 1, j] == 1:
                        n0 *= p0
                        n1 *= p1
                    else:
                        n0 *= 1.0 - p0
                        n1 *= 1.0 - p1
            # Emission factor when the cell's family is tested today.
            y = obs[t, f]
            if y >= 0:
                size = fam_indptr[f + 1] - fam_indptr[f]
                base = fam_inf[t, f] - cur
                pos0 = ((size - base) * theta0 + base * theta1) / size
                pos1 = ((size - (base + 1)) * theta0 + (base + 1) * theta1) / size
                if y == 1:
                    n0 *= pos0
                    n1 *= pos1
                else:
                    n0 *= 1.0 - pos0
                    n1 *= 1.0 - pos1
            lam = n1 / (n0 + n1)
            new = 1 if uniforms[t - 1, i] < lam else 0
            if new != cur:
                flips += 1
                states[t, i] = new
                delta = new - cur
                fam_inf[t, f] += delta
                if t < horizon:
                    for j in range(n):
                        if adjacency[t, i, j]:
                            con_inf[t, j] += delta
    return flips
