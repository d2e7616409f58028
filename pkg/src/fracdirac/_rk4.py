"""Compiled RK4 sweep for the integro-differential system.

The state is advanced in a frame rotating with the free solution,
``phi = R(lam * s) z``, so the zero-potential problem is integrated exactly
and the step error only sees the (slow) potential and memory terms.  The
Volterra memory uses the separable kernel form
``M(x, t) ~= sum_c ell_c(x) M(x_c, t)``; the running integrals
``J_c(s) = int_0^s M(x_c, t(s')) phi(s') ds'`` are carried as extra state.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _rhs(q, lam, ds, z1, z2, J1, J2, ph, rh, ell, k11, k12, k21, k22, dz, dJ1, dJ2):
    s = 0.5 * q * ds
    c = math.cos(lam * s)
    sn = math.sin(lam * s)
    phi1 = c * z1 - sn * z2
    phi2 = sn * z1 + c * z2
    m1 = 0.0
    m2 = 0.0
    rank = J1.shape[0]
    for k in range(rank):
        w = ell[q, k]
        m1 += w * J1[k]
        m2 += w * J2[k]
        dJ1[k] = k11[k, q] * phi1 + k12[k, q] * phi2
        dJ2[k] = k21[k, q] * phi1 + k22[k, q] * phi2
    g1 = rh[q] * phi2 + m2
    g2 = -ph[q] * phi1 - m1
    dz[0] = c * g1 + sn * g2
    dz[1] = -sn * g1 + c * g2


@njit(cache=True, nogil=True)
def sweep(lam, theta, ds, n_points, ph, rh, ell, k11, k12, k21, k22, full, out):
    """Integrate from s = 0 to the last grid point.

    ``out`` has shape (4, n_points) when ``full`` and receives
    phi1, phi2, dphi1, dphi2; otherwise only column 0/1 of the final point are
    written to ``out[0, 0], out[1, 0]``.  Returns -1 on success or the first
    grid index where the state stopped being finite.
    """
    rank = ell.shape[1]
    z = np.empty(2)
    z[0] = math.cos(theta)
    z[1] = -math.sin(theta)
    J1 = np.zeros(rank)
    J2 = np.zeros(rank)

    k1 = np.empty(2)
    k2 = np.empty(2)
    k3 = np.empty(2)
    k4 = np.empty(2)
    a1 = np.empty(rank)
    a2 = np.empty(rank)
    a3 = np.empty(rank)
    a4 = np.empty(rank)
    b1 = np.empty(rank)
    b2 = np.empty(rank)
    b3 = np.empty(rank)
    b4 = np.empty(rank)
    tJ1 = np.empty(rank)
    tJ2 = np.empty(rank)

    for i in range(n_points):
        q = 2 * i
        if full or i == n_points - 1:
            s = i * ds
            c = math.cos(lam * s)
            sn = math.sin(lam * s)
            phi1 = c * z[0] - sn * z[1]
            phi2 = sn * z[0] + c * z[1]
            if not (math.isfinite(phi1) and math.isfinite(phi2)):
                return i
            if full:
                m1 = 0.0
                m2 = 0.0
                for k in range(rank):
                    m1 += ell[q, k] * J1[k]
                    m2 += ell[q, k] * J2[k]
                out[0, i] = phi1
                out[1, i] = phi2
                out[2, i] = (rh[q] - lam) * phi2 + m2
                out[3, i] = (lam - ph[q]) * phi1 - m1
            else:
                out[0, 0] = phi1
                out[1, 0] = phi2
        if i == n_points - 1:
            break

        _rhs(q, lam, ds, z[0], z[1], J1, J2, ph, rh, ell, k11, k12, k21, k22, k1, a1, b1)
        for k in range(rank):
            tJ1[k] = J1[k] + 0.5 * ds * a1[k]
            tJ2[k] = J2[k] + 0.5 * ds * b1[k]
        _rhs(q + 1, lam, ds, z[0] + 0.5 * ds * k1[0], z[1] + 0.5 * ds * k1[1], tJ1, tJ2,
             ph, rh, ell, k11, k12, k21, k22, k2, a2, b2)
        for k in range(rank):
            tJ1[k] = J1[k] + 0.5 * ds * a2[k]
            tJ2[k] = J2[k] + 0.5 * ds * b2[k]
        _rhs(q + 1, lam, ds, z[0] + 0.5 * ds * k2[0], z[1] + 0.5 * ds * k2[1], tJ1, tJ2,
             ph, rh, ell, k11, k12, k21, k22, k3, a3, b3)
        for k in range(rank):
            tJ1[k] = J1[k] + ds * a3[k]
            tJ2[k] = J2[k] + ds * b3[k]
        _rhs(q + 2, lam, ds, z[0] + ds * k3[0], z[1] + ds * k3[1], tJ1, tJ2,
             ph, rh, ell, k11, k12, k21, k22, k4, a4, b4)

        z[0] += ds / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        z[1] += ds / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        for k in range(rank):
            J1[k] += ds / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k])
            J2[k] += ds / 6.0 * (b1[k] + 2.0 * b2[k] + 2.0 * b3[k] + b4[k])
    return -1
