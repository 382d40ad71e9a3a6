"""Pure-NumPy implementation of the nonlinear stepping kernels.

These functions assemble the implicit-step residuals and the periodic-banded
Newton Jacobians for both reduced-order models. The compiled extension
``filmctrl._fdcore`` implements exactly the same formulas with C loops; the
two backends are interchangeable and the expression orderings are kept
identical so results agree to the last bit.

Field layout: single-field problems use length-N arrays; the two-field
problem interleaves unknowns as (h_0, q_0, h_1, q_1, ...), which keeps the
Newton matrix banded with lower bandwidth 5 and upper bandwidth 3.

Band layout: ``bands[j, i]`` is the Jacobian entry at row i, column
(i + offsets[j]) mod n, with offsets -3..3 for the single-field model and
-5..3 for the two-field model.
"""

import numpy as np

BENNEY_OFFSETS = (-3, -2, -1, 0, 1, 2, 3)
WR_OFFSETS = (-5, -4, -3, -2, -1, 0, 1, 2, 3)

_THIRD = 1.0 / 3.0
_C815 = 8.0 / 15.0
_C23 = 2.0 / 3.0
_C4815 = 48.0 / 15.0
_C83 = 8.0 / 3.0
_C1835 = 18.0 / 35.0
_C3435 = 34.0 / 35.0
_C3635 = 36.0 / 35.0


def benney_flux(h, f, re, twoct, invca, inv2dx, invdx3):
    """Flux enslaved to the height:
    q = (h^3/3)(2 - 2 h_x cot(theta) + h_xxx / Ca)
        + Re (8 h^6 h_x / 15 - 2 h^4 f / 3)."""
    hp1 = np.roll(h, -1)
    hm1 = np.roll(h, 1)
    hp2 = np.roll(h, -2)
    hm2 = np.roll(h, 2)
    hx = (hp1 - hm1) * inv2dx
    hxxx = (0.5 * (hp2 - hm2) - (hp1 - hm1)) * invdx3
    h3 = h * h * h
    s = 2.0 - twoct * hx + invca * hxxx
    return h3 * s * _THIRD + re * (_C815 * (h3 * h3) * hx - _C23 * (h3 * h) * f)


def benney_residual(h, hist, f, alpha0, re, twoct, invca, inv2dx, invdx3):
    """Implicit-step residual alpha0 h + hist + D1 q(h, f) - f, where hist
    collects the history part of the backward-difference time derivative."""
    q = benney_flux(h, f, re, twoct, invca, inv2dx, invdx3)
    return alpha0 * h + hist + (np.roll(q, -1) - np.roll(q, 1)) * inv2dx - f


def benney_bands(h, f, alpha0, re, twoct, invca, inv2dx, invdx3):
    """Analytic Newton Jacobian of ``benney_residual`` in periodic band form."""
    hp1 = np.roll(h, -1)
    hm1 = np.roll(h, 1)
    hp2 = np.roll(h, -2)
    hm2 = np.roll(h, 2)
    hx = (hp1 - hm1) * inv2dx
    hxxx = (0.5 * (hp2 - hm2) - (hp1 - hm1)) * invdx3
    h2 = h * h
    h3 = h2 * h
    s = 2.0 - twoct * hx + invca * hxxx
    # dq/dh = diag(a) + diag(b) D1 + diag(c) D3
    a = h2 * s + re * (_C4815 * (h3 * h2) * hx - _C83 * h3 * f)
    b = re * _C815 * (h3 * h3) - _THIRD * twoct * h3
    c = _THIRD * invca * h3
    bq_m2 = -0.5 * invdx3 * c
    bq_m1 = -inv2dx * b + invdx3 * c
    bq_0 = a
    bq_p1 = inv2dx * b - invdx3 * c
    bq_p2 = 0.5 * invdx3 * c

    n = h.shape[0]
    bands = np.empty((7, n))
    # residual Jacobian = alpha0 I + D1 (dq/dh)
    bands[0] = -inv2dx * np.roll(bq_m2, 1)
    bands[1] = -inv2dx * np.roll(bq_m1, 1)
    bands[2] = inv2dx * (np.roll(bq_m2, -1) - np.roll(bq_0, 1))
    bands[3] = alpha0 + inv2dx * (np.roll(bq_m1, -1) - np.roll(bq_p1, 1))
    bands[4] = inv2dx * (np.roll(bq_0, -1) - np.roll(bq_p2, 1))
    bands[5] = inv2dx * np.roll(bq_p1, -1)
    bands[6] = inv2dx * np.roll(bq_p2, -1)
    return bands


def wr_residual(h, q, histh, histq, f, alpha0, re, twoct, invca, inv2dx, invdx3):
    """Interleaved residual of the coupled implicit step:

    rows 2i:   alpha0 h + histh + D1 q - f
    rows 2i+1: (2 Re/5) h^2 (alpha0 q + histq) + q
               - (h^3/3)(2 - 2 h_x cot(theta) + h_xxx / Ca)
               - Re (18 q^2 h_x / 35 - 34 h q q_x / 35 + h q f / 5)."""
    hp1 = np.roll(h, -1)
    hm1 = np.roll(h, 1)
    hp2 = np.roll(h, -2)
    hm2 = np.roll(h, 2)
    hx = (hp1 - hm1) * inv2dx
    hxxx = (0.5 * (hp2 - hm2) - (hp1 - hm1)) * invdx3
    qx = (np.roll(q, -1) - np.roll(q, 1)) * inv2dx
    h2 = h * h
    h3 = h2 * h
    s = 2.0 - twoct * hx + invca * hxxx
    rhs = h3 * s * _THIRD + re * (_C1835 * (q * q) * hx - _C3435 * (h * q) * qx
                                  + 0.2 * (h * q) * f)
    rh = alpha0 * h + histh + qx - f
    rq = 0.4 * re * h2 * (alpha0 * q + histq) + q - rhs

    n = h.shape[0]
    r = np.empty(2 * n)
    r[0::2] = rh
    r[1::2] = rq
    return r


def wr_bands(h, q, histq, f, alpha0, re, twoct, invca, inv2dx, invdx3):
    """Analytic Newton Jacobian of ``wr_residual`` in periodic band form
    (interleaved unknowns, offsets -5..3)."""
    hp1 = np.roll(h, -1)
    hm1 = np.roll(h, 1)
    hp2 = np.roll(h, -2)
    hm2 = np.roll(h, 2)
    hx = (hp1 - hm1) * inv2dx
    hxxx = (0.5 * (hp2 - hm2) - (hp1 - hm1)) * invdx3
    qx = (np.roll(q, -1) - np.roll(q, 1)) * inv2dx
    h2 = h * h
    h3 = h2 * h
    s = 2.0 - twoct * hx + invca * hxxx
    qdot = alpha0 * q + histq

    d_h = 0.8 * re * h * qdot - h2 * s + re * (_C3435 * q * qx - 0.2 * q * f)
    d_q = 0.4 * re * h2 * alpha0 + 1.0 - re * (_C3635 * q * hx - _C3435 * h * qx
                                               + 0.2 * h * f)
    g1 = re * _C1835 * (q * q) - _THIRD * twoct * h3
    g3 = _THIRD * invca * h3
    qcpl = re * _C3435 * (h * q) * inv2dx

    n = h.shape[0]
    bands = np.zeros((9, 2 * n))
    # even rows: height equation
    bands[5, 0::2] = alpha0            # offset 0, column h_i
    bands[4, 0::2] = -inv2dx           # offset -1, column q_{i-1}
    bands[8, 0::2] = inv2dx            # offset +3, column q_{i+1}
    # odd rows: flux equation
    bands[4, 1::2] = d_h               # offset -1, column h_i
    bands[5, 1::2] = d_q               # offset  0, column q_i
    bands[6, 1::2] = -g1 * inv2dx + g3 * invdx3   # offset +1, column h_{i+1}
    bands[2, 1::2] = g1 * inv2dx - g3 * invdx3    # offset -3, column h_{i-1}
    bands[8, 1::2] = -0.5 * invdx3 * g3           # offset +3, column h_{i+2}
    bands[0, 1::2] = 0.5 * invdx3 * g3            # offset -5, column h_{i-2}
    bands[7, 1::2] = qcpl              # offset +2, column q_{i+1}
    bands[3, 1::2] = -qcpl             # offset -2, column q_{i-1}
    return bands
