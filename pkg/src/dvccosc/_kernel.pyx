# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 integration kernel.

Mirror of dvccosc._kernel_py.rk4_run; see that module for the contract.
The arithmetic is kept operation-for-operation identical to the Python
kernel (and the extension is built with -ffp-contract=off) so both
backends produce bit-identical waveforms.
"""

from libc.math cimport isfinite, tanh

import numpy as np


cdef inline void _x_voltages(Py_ssize_t nd, Py_ssize_t ns,
                             int[::1] y1_ref, int[::1] y2_ref,
                             double[::1] beta1, double[::1] beta2,
                             double[::1] vsat, int[::1] sat_kind,
                             double[::1] vec, double[::1] xv) noexcept:
    cdef Py_ssize_t d
    cdef int r, kind
    cdef double a, b, u, lim
    for d in range(nd):
        r = y1_ref[d]
        a = 0.0 if r < 0 else (vec[r] if r < ns else xv[r - ns])
        r = y2_ref[d]
        b = 0.0 if r < 0 else (vec[r] if r < ns else xv[r - ns])
        u = beta1[d] * a - beta2[d] * b
        kind = sat_kind[d]
        if kind == 1:
            lim = vsat[d]
            if u > lim:
                u = lim
            elif u < -lim:
                u = -lim
        elif kind == 2:
            lim = vsat[d]
            u = lim * tanh(u / lim)
        xv[d] = u


cdef inline void _derivs(Py_ssize_t ns, Py_ssize_t nd,
                         double[::1] gnd_g, double[:, ::1] inj,
                         double[::1] cap,
                         double[::1] vec, double[::1] xv,
                         double[::1] kout) noexcept:
    cdef Py_ssize_t i, d
    cdef double acc
    for i in range(ns):
        acc = -gnd_g[i] * vec[i]
        for d in range(nd):
            acc += inj[i, d] * xv[d]
        kout[i] = acc / cap[i]


def rk4_run(double[::1] cap, double[::1] gnd_g, double[:, ::1] inj,
            int[::1] y1_ref, int[::1] y2_ref,
            double[::1] beta1, double[::1] beta2,
            double[::1] vsat, int[::1] sat_kind,
            int[::1] tap_refs,
            double[::1] state, double dt, long n_steps, long record_stride,
            double[:, ::1] out):
    cdef Py_ssize_t ns = cap.shape[0]
    cdef Py_ssize_t nd = y1_ref.shape[0]
    cdef Py_ssize_t nt = tap_refs.shape[0]

    scratch = np.zeros(6 * ns, dtype=np.float64)
    cdef double[::1] v = scratch[0:ns]
    cdef double[::1] vt = scratch[ns:2 * ns]
    cdef double[::1] k1 = scratch[2 * ns:3 * ns]
    cdef double[::1] k2 = scratch[3 * ns:4 * ns]
    cdef double[::1] k3 = scratch[4 * ns:5 * ns]
    cdef double[::1] k4 = scratch[5 * ns:6 * ns]
    xv_arr = np.zeros(max(nd, 1), dtype=np.float64)
    cdef double[::1] xv = xv_arr[0:nd]

    cdef double half = dt * 0.5
    cdef double sixth = dt / 6.0
    cdef Py_ssize_t step, i, ti, rec = 0
    cdef int r
    cdef double nv
    cdef bint ok

    for i in range(ns):
        v[i] = state[i]

    for step in range(n_steps):
        _x_voltages(nd, ns, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind, v, xv)
        if step % record_stride == 0:
            for ti in range(nt):
                r = tap_refs[ti]
                out[ti, rec] = 0.0 if r < 0 else (v[r] if r < ns else xv[r - ns])
            rec += 1
        _derivs(ns, nd, gnd_g, inj, cap, v, xv, k1)
        for i in range(ns):
            vt[i] = v[i] + half * k1[i]
        _x_voltages(nd, ns, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind, vt, xv)
        _derivs(ns, nd, gnd_g, inj, cap, vt, xv, k2)
        for i in range(ns):
            vt[i] = v[i] + half * k2[i]
        _x_voltages(nd, ns, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind, vt, xv)
        _derivs(ns, nd, gnd_g, inj, cap, vt, xv, k3)
        for i in range(ns):
            vt[i] = v[i] + dt * k3[i]
        _x_voltages(nd, ns, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind, vt, xv)
        _derivs(ns, nd, gnd_g, inj, cap, vt, xv, k4)
        ok = True
        for i in range(ns):
            nv = v[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            v[i] = nv
            if not isfinite(nv):
                ok = False
        if not ok:
            for i in range(ns):
                state[i] = v[i]
            return step
    if n_steps % record_stride == 0:
        _x_voltages(nd, ns, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind, v, xv)
        for ti in range(nt):
            r = tap_refs[ti]
            out[ti, rec] = 0.0 if r < 0 else (v[r] if r < ns else xv[r - ns])
    for i in range(ns):
        state[i] = v[i]
    return -1
