"""Pure-Python step loops.

Reference implementations of the sequential kernels. ``_ckernels.pyx`` mirrors
these line for line so both backends produce bit-identical floats.
"""

import numpy as np


def ema(x, alpha):
    out = np.empty(len(x))
    values = np.asarray(x, dtype=float).tolist()
    if not values:
        return out
    s = values[0]
    for i, v in enumerate(values):
        s = s + alpha * (v - s)
        out[i] = s
    return out


def hysteresis(x, enter, exit_):
    values = np.asarray(x, dtype=float).tolist()
    out = np.empty(len(values))
    state = 0
    for i, v in enumerate(values):
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
        out[i] = state
    return out


def follow(commanded, soc0, energy, pmax, eta_c, eta_d, dt):
    cmd = np.asarray(commanded, dtype=float).tolist()
    n = len(cmd)
    soc_out = np.empty(n)
    p_out = np.empty(n)
    soc = soc0
    for i in range(n):
        p = cmd[i]
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
        soc_out[i] = soc
        p_out[i] = p
    return soc_out, p_out


def ou_walk(noise, dt, theta, v_decay, v_gain):
    e = np.asarray(noise, dtype=float).tolist()
    out = np.empty(len(e))
    x = 0.0
    v = 0.0
    for i in range(len(e)):
        v = v_decay * v + v_gain * e[i]
        x = x + (v - theta * x) * dt
        if x > 1.0:
            x = 1.0
        elif x < -1.0:
            x = -1.0
        out[i] = x
    return out
