# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled step loops. Keep in lockstep with _pykernels.py."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def ema(x, double alpha):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double s
    if n == 0:
        return out
    s = xv[0]
    for i in range(n):
        s = s + alpha * (xv[i] - s)
        ov[i] = s
    return out


def hysteresis(x, double enter, double exit_):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef int state = 0
    cdef double v
    for i in range(n):
        v = xv[i]
        if state == 0:
            if v >= enter:
                state = 1
            elif v <= -enter:
                state = -1
        elif state == 1:
            if v <= -enter:
                state = -1
            elif v <= exit_:
                state = 0
        else:
            if v >= enter:
                state = 1
            elif v >= -exit_:
                state = 0
        ov[i] = state
    return out


def follow(commanded, double soc0, double energy, double pmax,
           double eta_c, double eta_d, double dt):
    cdef const double[::1] cv = np.ascontiguousarray(commanded, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0], i
    soc_out = np.empty(n)
    p_out = np.empty(n)
    cdef double[::1] sv = soc_out
    cdef double[::1] pv = p_out
    cdef double soc = soc0, p, head, avail
    for i in range(n):
        p = cv[i]
        if p > pmax:
            p = pmax
        elif p < -pmax:
            p = -pmax
        if p > 0.0:
            head = (1.0 - soc) * energy / (eta_c * dt)
            if p > head:
                p = head
            soc = soc + dt * eta_c * p / energy
        elif p < 0.0:
            avail = soc * energy * eta_d / dt
            if -p > avail:
                p = -avail
            soc = soc + dt * p / (eta_d * energy)
        if soc > 1.0:
            soc = 1.0
        elif soc < 0.0:
            soc = 0.0
        sv[i] = soc
        pv[i] = p
    return soc_out, p_out


def ou_walk(noise, double dt, double theta, double v_decay, double v_gain):
    cdef const double[::1] ev = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n = ev.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double x = 0.0, v = 0.0
    for i in range(n):
        v = v_decay * v + v_gain * ev[i]
        x = x + (v - theta * x) * dt
        if x > 1.0:
            x = 1.0
        elif x < -1.0:
            x = -1.0
        ov[i] = x
    return out
