"""Shortest Reeds-Shepp path lengths.

Closed-form solutions for the five word families (CSC, CCC, CCCC, CCSC,
CCSCC); together with the time-flip, reflection and backwards symmetries
they cover the 48 candidate words.  Work happens in the normalized frame
where the start pose is the origin and the turning radius is 1.
"""
from __future__ import annotations

import math

PI = math.pi
HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi
ZERO = 10 * 2.220446049250313e-16

# segment letters per word type; lengths are signed (negative = reverse)
WORD_TYPES = (
    "LRL", "RLR", "LRLR", "RLRL", "LRSL", "RLSR", "LSRL", "RSLR", "LRSR",
    "RLSL", "RSRL", "LSLR", "LSR", "RSL", "LSL", "RSR", "LRSLR", "RLSRL",
)


def _mod2pi(x: float) -> float:
    return math.remainder(x, TWO_PI)


def _tau_omega(u, v, xi, eta, phi):
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + PI) if t2 < 0 else _mod2pi(t1)
    omega = _mod2pi(tau - u + v - phi)
    return tau, omega


def _lp_sp_lp(x, y, phi):
    xi, eta = x - math.sin(phi), y - 1.0 + math.cos(phi)
    u, t = math.hypot(xi, eta), math.atan2(eta, xi)
    if t >= -ZERO:
        v = _mod2pi(phi - t)
        if v >= -ZERO:
            return t, u, v
    return None


def _lp_sp_rp(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    u1 = xi * xi + eta * eta
    if u1 >= 4.0:
        t1 = math.atan2(eta, xi)
        u = math.sqrt(u1 - 4.0)
        t = _mod2pi(t1 + math.atan2(2.0, u))
        v = _mod2pi(t - phi)
        if t >= -ZERO and v >= -ZERO:
            return t, u, v
    return None


def _lp_rm_l(x, y, phi):
    xi, eta = x - math.sin(phi), y - 1.0 + math.cos(phi)
    u1, theta = math.hypot(xi, eta), math.atan2(eta, xi)
    if u1 <= 4.0:
        u = -2.0 * math.asin(0.25 * u1)
        t = _mod2pi(theta + 0.5 * u + PI)
        v = _mod2pi(phi - t + u)
        if t >= -ZERO and u <= ZERO:
            return t, u, v
    return None


def _lp_rup_lum_rm(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho <= 1.0:
        u = math.acos(rho)
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rum_lum_rp(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if 0.0 <= rho <= 1.0:
        u = -math.acos(rho)
        if u >= -HALF_PI:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -ZERO and v >= -ZERO:
                return t, u, v
    return None


def _lp_rm_sm_lm(x, y, phi):
    xi, eta = x - math.sin(phi), y - 1.0 + math.cos(phi)
    rho, theta = math.hypot(xi, eta), math.atan2(eta, xi)
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - HALF_PI - t)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rm_sm_rm(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho, theta = math.hypot(-eta, xi), math.atan2(xi, -eta)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + HALF_PI - phi)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rm_s_lm_rp(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho = math.hypot(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= ZERO:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -ZERO and v >= -ZERO:
                return t, u, v
    return None


def _candidates(x, y, phi):
    """Yield (word type index, signed segment lengths) for every feasible word."""
    sym = ((x, y, phi, 1.0, 0), (-x, y, -phi, -1.0, 0), (x, -y, -phi, 1.0, 1), (-x, -y, phi, -1.0, 1))
    cphi, sphi = math.cos(phi), math.sin(phi)
    xb, yb = x * cphi + y * sphi, x * sphi - y * cphi
    sym_b = ((xb, yb, phi, 1.0, 0), (-xb, yb, -phi, -1.0, 0), (xb, -yb, -phi, 1.0, 1), (-xb, -yb, phi, -1.0, 1))

    for sx, sy, sp, f, refl in sym:
        # CSC
        r = _lp_sp_lp(sx, sy, sp)
        if r:
            yield 14 + refl, (f * r[0], f * r[1], f * r[2])
        r = _lp_sp_rp(sx, sy, sp)
        if r:
            yield 12 + refl, (f * r[0], f * r[1], f * r[2])
        # CCC
        r = _lp_rm_l(sx, sy, sp)
        if r:
            yield 0 + refl, (f * r[0], f * r[1], f * r[2])
        # CCCC
        r = _lp_rup_lum_rm(sx, sy, sp)
        if r:
            t, u, v = r
            yield 2 + refl, (f * t, f * u, -f * u, f * v)
        r = _lp_rum_lum_rp(sx, sy, sp)
        if r:
            t, u, v = r
            yield 2 + refl, (f * t, f * u, f * u, f * v)
        # CCSC
        r = _lp_rm_sm_lm(sx, sy, sp)
        if r:
            t, u, v = r
            yield 4 + refl, (f * t, -f * HALF_PI, f * u, f * v)
        r = _lp_rm_sm_rm(sx, sy, sp)
        if r:
            t, u, v = r
            yield 8 + refl, (f * t, -f * HALF_PI, f * u, f * v)
        # CCSCC
        r = _lp_rm_s_lm_rp(sx, sy, sp)
        if r:
            t, u, v = r
            yield 16 + refl, (f * t, -f * HALF_PI, f * u, -f * HALF_PI, f * v)

    for sx, sy, sp, f, refl in sym_b:
        r = _lp_rm_l(sx, sy, sp)
        if r:
            t, u, v = r
            yield 0 + refl, (f * v, f * u, f * t)
        r = _lp_rm_sm_lm(sx, sy, sp)
        if r:
            t, u, v = r
            yield 6 + refl, (f * v, f * u, -f * HALF_PI, f * t)
        r = _lp_rm_sm_rm(sx, sy, sp)
        if r:
            t, u, v = r
            yield 10 + refl, (f * v, f * u, -f * HALF_PI, f * t)


def _normalize(start, goal, radius):
    dx, dy = goal[0] - start[0], goal[1] - start[1]
    c, s = math.cos(start[2]), math.sin(start[2])
    return (c * dx + s * dy) / radius, (-s * dx + c * dy) / radius, goal[2] - start[2]


def _coincident(x, y, phi) -> bool:
    return x == 0.0 and y == 0.0 and _mod2pi(phi) == 0.0


def reeds_shepp_path(start, goal, radius: float) -> tuple[float, str, tuple[float, ...]]:
    """Shortest path as ``(length, word, signed segment lengths)``.

    Segment lengths are in metres; curve segments are arcs of ``radius``.
    Poses are ``(x, y, heading)`` sequences.
    """
    if not radius > 0:
        raise ValueError("turning radius must be positive")
    x, y, phi = _normalize(start, goal, radius)
    if _coincident(x, y, phi):
        return 0.0, "", ()
    best_len, best = math.inf, None
    for kind, segs in _candidates(x, y, phi):
        length = sum(abs(s) for s in segs)
        if length < best_len:
            best_len, best = length, (kind, segs)
    kind, segs = best
    word = WORD_TYPES[kind]
    return best_len * radius, word, tuple(s * radius for s in segs)


def reeds_shepp_length(start, goal, radius: float) -> float:
    """Length of the shortest Reeds-Shepp path between two poses."""
    if not radius > 0:
        raise ValueError("turning radius must be positive")
    x, y, phi = _normalize(start, goal, radius)
    if _coincident(x, y, phi):
        return 0.0
    return _shortest(x, y, phi) * radius


def _shortest(x, y, phi):
    # Same candidates as _candidates(), flattened: only lengths are needed and
    # sin/cos/atan2 terms are shared between formulas of the same symmetry.
    rem, atan2, hypot, sqrt = math.remainder, math.atan2, math.hypot, math.sqrt
    sphi, cphi = math.sin(phi), math.cos(phi)
    best = math.inf
    xb, yb = x * cphi + y * sphi, x * sphi - y * cphi
    for sx, sy, sgn, backwards in ((x, y, 1.0, False), (-x, y, -1.0, False), (x, -y, -1.0, False),
                                   (-x, -y, 1.0, False), (xb, yb, 1.0, True), (-xb, yb, -1.0, True),
                                   (xb, -yb, -1.0, True), (-xb, -yb, 1.0, True)):
        sp, ss = sgn * phi, sgn * sphi
        # xi/eta for formulas built on the left circle (A) and right circle (B)
        xa, ea = sx - ss, sy - 1.0 + cphi
        ra, tha = hypot(xa, ea), atan2(ea, xa)
        xbb, ebb = sx + ss, sy - 1.0 - cphi
        rb = hypot(xbb, ebb)

        if not backwards:
            # L+S+L+
            if tha >= -ZERO:
                v = rem(sp - tha, TWO_PI)
                if v >= -ZERO:
                    length = abs(tha) + ra + abs(v)
                    if length < best:
                        best = length
            # L+S+R+
            if rb >= 2.0:
                u = sqrt(rb * rb - 4.0)
                t = rem(atan2(ebb, xbb) + atan2(2.0, u), TWO_PI)
                v = rem(t - sp, TWO_PI)
                if t >= -ZERO and v >= -ZERO:
                    length = abs(t) + u + abs(v)
                    if length < best:
                        best = length
            # L+R+L-R-
            rho = 0.25 * (2.0 + rb)
            if rho <= 1.0:
                u = math.acos(rho)
                t, v = _tau_omega(u, -u, xbb, ebb, sp)
                if t >= -ZERO and v <= ZERO:
                    length = abs(t) + 2.0 * abs(u) + abs(v)
                    if length < best:
                        best = length
            # L+R-L-R+
            rho = (20.0 - rb * rb) / 16.0
            if 0.0 <= rho <= 1.0:
                u = -math.acos(rho)
                if u >= -HALF_PI:
                    t, v = _tau_omega(u, u, xbb, ebb, sp)
                    if t >= -ZERO and v >= -ZERO:
                        length = abs(t) + 2.0 * abs(u) + abs(v)
                        if length < best:
                            best = length
            # L+R-S-L-R+
            if rb >= 2.0:
                u = 4.0 - sqrt(rb * rb - 4.0)
                if u <= ZERO:
                    t = rem(atan2((4.0 - u) * xbb - 2.0 * ebb, -2.0 * xbb + (u - 4.0) * ebb), TWO_PI)
                    v = rem(t - sp, TWO_PI)
                    if t >= -ZERO and v >= -ZERO:
                        length = abs(t) + abs(u) + abs(v) + PI
                        if length < best:
                            best = length
        # L+R-L
        if ra <= 4.0:
            u = -2.0 * math.asin(0.25 * ra)
            t = rem(tha + 0.5 * u + PI, TWO_PI)
            v = rem(sp - t + u, TWO_PI)
            if t >= -ZERO and u <= ZERO:
                length = abs(t) + abs(u) + abs(v)
                if length < best:
                    best = length
        # L+R-S-L-
        if ra >= 2.0:
            r = sqrt(ra * ra - 4.0)
            u = 2.0 - r
            t = rem(tha + atan2(r, -2.0), TWO_PI)
            v = rem(sp - HALF_PI - t, TWO_PI)
            if t >= -ZERO and u <= ZERO and v <= ZERO:
                length = abs(t) + abs(u) + abs(v) + HALF_PI
                if length < best:
                    best = length
        # L+R-S-R-
        if rb >= 2.0:
            t = atan2(xbb, -ebb)
            u = 2.0 - rb
            v = rem(t + HALF_PI - sp, TWO_PI)
            if t >= -ZERO and u <= ZERO and v <= ZERO:
                length = abs(t) + abs(u) + abs(v) + HALF_PI
                if length < best:
                    best = length
    return best


def follow_word(start, word: str, lengths, radius: float) -> tuple[float, float, float]:
    """Endpoint pose after driving ``word`` with signed segment ``lengths`` (metres)."""
    x, y, phi = start
    for letter, seg in zip(word, lengths):
        if letter == "S":
            x += seg * math.cos(phi)
            y += seg * math.sin(phi)
            continue
        turn = seg / radius if letter == "L" else -seg / radius
        side = radius if letter == "L" else -radius
        x += side * (math.sin(phi + turn) - math.sin(phi))
        y += side * (math.cos(phi) - math.cos(phi + turn))
        phi += turn
    return x, y, phi
