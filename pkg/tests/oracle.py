"""Brute-force re-statement of the closed-loop update equations.

Deliberately shares no code with the package: plain floats, one flat loop,
ideal sensing and actuation, 1-minute plant step.
"""

import math


def oracle_run(
    volume,
    t0,
    k_out,
    speed,
    target,
    deadline,
    horizon,
    events=(),
    occupants=0,
    rho=1.225,
    side=0.5,
    w_person=100.0,
    cp=1005.0,
    misc_w=0.0,
    max_alpha=45.0,
    tol=0.2,
):
    """Return a list of (t, temp, alpha, occupants) plus T(deadline)."""
    temp = t0
    last_alpha = 0.0
    rows = []
    t_deadline = None
    for t in range(horizon):
        if t == deadline:
            t_deadline = temp
        for when, delta in events:
            if when == t:
                occupants += delta

        holding = t >= deadline
        alpha = None
        if holding and abs(temp - target) <= tol:
            # room on the supply side of target, or damper already shut
            if (target - k_out) * (temp - target) <= 0 or last_alpha == 0.0:
                alpha = 0.0
        if alpha is None:
            remaining = 1.0 if holding else deadline - t
            num = target - temp
            den = k_out - temp
            if num == 0:
                alpha = 0.0
            elif abs(den) <= 1e-6 or num * den < 0 or (target - k_out) * (temp - k_out) < 0:
                alpha = 0.0
            else:
                ratio = rho * volume * num / (remaining * speed * side * side * den)
                alpha = min(max(math.degrees(math.atan(ratio)), 0.0), max_alpha)
        rows.append((t, temp, alpha, occupants))
        last_alpha = alpha

        flow = speed * side * side * math.tan(math.radians(alpha)) if alpha else 0.0
        f = min(1.0, flow / volume)
        heat = occupants * w_person + misc_w
        temp = temp + f * (k_out - temp) + heat * 60.0 / (rho * volume * cp)
    if t_deadline is None:
        t_deadline = temp
    return rows, t_deadline
