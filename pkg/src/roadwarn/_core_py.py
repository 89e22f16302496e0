"""Pure-Python detector kernel.

Reference semantics for the compiled ``_core`` extension; both must produce
bit-identical results. State and parameters travel as flat float arrays so
the two implementations share one calling convention.
"""
import math

import numpy as np

# state slots
BASE, INST, ACTIVE_SINCE, SUPPRESSED, LAST_TRIGGER, LAST_T = range(6)
STATE_SIZE = 6

ERR_NONE, ERR_NEGATIVE, ERR_ORDER = 0, 1, 2


def run_channel(t, lux, params, state):
    """Fold one channel's samples through the dual-IMA trigger.

    ``params`` is (alpha_baseline, alpha_instant, trigger_ratio, release_ratio,
    holdoff, max_continuous_active, sensor_min, sensor_max, clamp, floor).
    ``state`` is updated in place; NaN encodes "unset" for the time slots.

    Returns ``(ev_idx, ev_ratio, ev_inst, ev_base, sup_idx, sup_on, err_idx,
    err_code)``. On error the fold stops before the offending sample.
    """
    ab, ai, trig, rel, hold, maxact, smin, smax, clamp, floor = params
    cb = 1.0 - ab
    ci = 1.0 - ai
    do_clamp = clamp != 0.0
    b, i, since, sup, last_trig, last_t = (float(v) for v in state)
    ev_idx, ev_ratio, ev_inst, ev_base = [], [], [], []
    sup_idx, sup_on = [], []
    err_idx, err_code = -1, ERR_NONE
    ts = t.tolist() if hasattr(t, "tolist") else list(t)
    xs = lux.tolist() if hasattr(lux, "tolist") else list(lux)
    isnan = math.isnan
    for k in range(len(ts)):
        tk = ts[k]
        x = xs[k]
        if not x >= 0.0:
            err_idx, err_code = k, ERR_NEGATIVE
            break
        if tk < last_t:
            err_idx, err_code = k, ERR_ORDER
            break
        last_t = tk
        if do_clamp:
            if x < smin:
                x = smin
            elif x > smax:
                x = smax
        b = b * ab + cb * x
        i = i * ai + ci * x
        r = i / (b if b > floor else floor)
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
            since = math.nan
            if sup != 0.0 and r < rel:
                sup = 0.0
                sup_idx.append(k)
                sup_on.append(0)
    state[BASE] = b
    state[INST] = i
    state[ACTIVE_SINCE] = since
    state[SUPPRESSED] = sup
    state[LAST_TRIGGER] = last_trig
    state[LAST_T] = last_t
    return (np.array(ev_idx, dtype=np.int64), np.array(ev_ratio, dtype=np.float64),
            np.array(ev_inst, dtype=np.float64), np.array(ev_base, dtype=np.float64),
            np.array(sup_idx, dtype=np.int64), np.array(sup_on, dtype=np.int8),
            err_idx, err_code)
