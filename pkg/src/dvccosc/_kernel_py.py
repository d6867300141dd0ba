"""Pure-Python RK4 integration kernel.

Fallback used when the compiled extension (dvccosc._kernel) is not built.
Both kernels implement the same recurrence with the same operation order,
so their outputs agree bit for bit; keep any change here mirrored in
_kernel.pyx.

State layout: one entry per grounded-capacitor node.  Terminal references
are integers: -1 is ground, 0..ns-1 a state index, ns+d the X node of
conveyor d (conveyors are ordered so X voltages only ever reference earlier
ones).
"""

import math


def rk4_run(cap, gnd_g, inj, y1_ref, y2_ref, beta1, beta2, vsat, sat_kind,
            tap_refs, state, dt, n_steps, record_stride, out):
    """Integrate n_steps of the conveyor-circuit ODE, recording tap channels.

    ``state`` is read for the initial condition and receives the final (or
    failing) state.  ``out`` must be shaped (n_taps, n_steps//stride + 1).
    Returns -1 on success, or the index of the step that produced a
    non-finite state.
    """
    ns = len(cap)
    nd = len(y1_ref)
    nt = len(tap_refs)
    capl = [float(x) for x in cap]
    gl = [float(x) for x in gnd_g]
    injl = [[float(inj[i, d]) for d in range(nd)] for i in range(ns)]
    y1l = [int(x) for x in y1_ref]
    y2l = [int(x) for x in y2_ref]
    b1l = [float(x) for x in beta1]
    b2l = [float(x) for x in beta2]
    vsl = [float(x) for x in vsat]
    skl = [int(x) for x in sat_kind]
    tapl = [int(x) for x in tap_refs]

    v = [float(x) for x in state]
    xv = [0.0] * nd
    k1 = [0.0] * ns
    k2 = [0.0] * ns
    k3 = [0.0] * ns
    k4 = [0.0] * ns
    vt = [0.0] * ns
    half = dt * 0.5
    sixth = dt / 6.0
    tanh = math.tanh
    isfinite = math.isfinite

    def x_voltages(vec):
        for d in range(nd):
            r = y1l[d]
            a = 0.0 if r < 0 else (vec[r] if r < ns else xv[r - ns])
            r = y2l[d]
            b = 0.0 if r < 0 else (vec[r] if r < ns else xv[r - ns])
            u = b1l[d] * a - b2l[d] * b
            kind = skl[d]
            if kind == 1:
                lim = vsl[d]
                if u > lim:
                    u = lim
                elif u < -lim:
                    u = -lim
            elif kind == 2:
                lim = vsl[d]
                u = lim * tanh(u / lim)
            xv[d] = u

    def derivs(vec, kout):
        for i in range(ns):
            acc = -gl[i] * vec[i]
            row = injl[i]
            for d in range(nd):
                acc += row[d] * xv[d]
            kout[i] = acc / capl[i]

    def record(rec):
        for ti in range(nt):
            r = tapl[ti]
            out[ti, rec] = 0.0 if r < 0 else (v[r] if r < ns else xv[r - ns])

    rec = 0
    for step in range(n_steps):
        x_voltages(v)
        if step % record_stride == 0:
            record(rec)
            rec += 1
        derivs(v, k1)
        for i in range(ns):
            vt[i] = v[i] + half * k1[i]
        x_voltages(vt)
        derivs(vt, k2)
        for i in range(ns):
            vt[i] = v[i] + half * k2[i]
        x_voltages(vt)
        derivs(vt, k3)
        for i in range(ns):
            vt[i] = v[i] + dt * k3[i]
        x_voltages(vt)
        derivs(vt, k4)
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
        x_voltages(v)
        record(rec)
    for i in range(ns):
        state[i] = v[i]
    return -1
