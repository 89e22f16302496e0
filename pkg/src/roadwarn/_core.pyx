# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled detector kernel; mirrors ``_core_py.run_channel`` operation for operation."""
import numpy as np

from libc.math cimport isnan, NAN


def run_channel(const double[::1] t, const double[::1] lux, params, double[::1] state):
    cdef double ab = params[0], ai = params[1], trig = params[2], rel = params[3]
    cdef double hold = params[4], maxact = params[5], smin = params[6], smax = params[7]
    cdef bint do_clamp = params[8] != 0.0
    cdef double floor = params[9]
    cdef double cb = 1.0 - ab
    cdef double ci = 1.0 - ai
    cdef double b = state[0], i = state[1], since = state[2], sup = state[3]
    cdef double last_trig = state[4], last_t = state[5]
    cdef double tk, x, r, den
    cdef Py_ssize_t k, n = t.shape[0]
    cdef Py_ssize_t err_idx = -1
    cdef int err_code = 0
    ev_idx, ev_ratio, ev_inst, ev_base = [], [], [], []
    sup_idx, sup_on = [], []
    for k in range(n):
        tk = t[k]
        x = lux[k]
        if not x >= 0.0:
            err_idx = k
            err_code = 1
            break
        if tk < last_t:
            err_idx = k
            err_code = 2
            break
        last_t = tk
        if do_clamp:
            if x < smin:
                x = smin
            elif x > smax:
                x = smax
        b = b * ab + cb * x
        i = i * ai + ci * x
        den = b if b > floor else floor
        r = i / den
        if r >= trig:
            if isnan(since):
                since = tk
            elif sup == 0.0 and tk - since > maxact:
                sup = 1.0
                sup_idx.append(k)
                sup_on.append(1)
            if sup == 0.0 and (isnan(last_trig) or tk - last_trig >= hold):
                last_trig = tk
                ev_idx.append(k)
                ev_ratio.append(r)
                ev_inst.append(i)
                ev_base.append(b)
        else:
            since = NAN
            if sup != 0.0 and r < rel:
                sup = 0.0
                sup_idx.append(k)
                sup_on.append(0)
    state[0] = b
    state[1] = i
    state[2] = since
    state[3] = sup
    state[4] = last_trig
    state[5] = last_t
    return (np.array(ev_idx, dtype=np.int64), np.array(ev_ratio, dtype=np.float64),
            np.array(ev_inst, dtype=np.float64), np.array(ev_base, dtype=np.float64),
            np.array(sup_idx, dtype=np.int64), np.array(sup_on, dtype=np.int8),
            err_idx, err_code)
