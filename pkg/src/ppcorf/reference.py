"""Slow, loop-by-loop reference model used as an independent oracle.

Everything here is written pixel by pixel from the model equations, sharing
no code with the fast path beyond the cell description itself.  Only use it
on small images (a 16x16 image takes a few seconds).
"""

import math


def mirror_index(i: int, n: int) -> int:
    """Reflect an out-of-range index about the first/last pixel centre."""
    if n == 1:
        return 0
    period = 2 * (n - 1)
    i %= period
    return period - i if i >= n else i


def dog_taps(sigma: float, truncation: float = 3.0):
    r = math.ceil(truncation * sigma)
    s_in = 0.5 * sigma
    taps = {}
    for v in range(-r, r + 1):
        for u in range(-r, r + 1):
            d2 = u * u + v * v
            taps[(u, v)] = (
                math.exp(-d2 / (2 * s_in * s_in)) / (2 * math.pi * s_in * s_in)
                - math.exp(-d2 / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)
            )
    mean = math.fsum(taps.values()) / len(taps)
    return r, {k: t - mean for k, t in taps.items()}


def correlate(image, r: int, taps):
    h, w = len(image), len(image[0])
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for v in range(-r, r + 1):
                row = image[mirror_index(y + v, h)]
                for u in range(-r, r + 1):
                    acc += row[mirror_index(x + u, w)] * taps[(u, v)]
            out[y][x] = acc
    return out


def lgn(image, sigma: float, delta: int, truncation: float = 3.0):
    """Rectified LGN response for polarity ``delta``."""
    r, taps = dog_taps(sigma, truncation)
    signed = {k: delta * t for k, t in taps.items()}
    resp = correlate(image, r, signed)
    return [[max(0.0, v) for v in row] for row in resp]


def subunit(lgn_map, rho: float, phi: float, sigma_prime: float):
    h, w = len(lgn_map), len(lgn_map[0])
    da = -round_half_even(rho * math.cos(phi))
    db = -round_half_even(rho * math.sin(phi))
    r = math.floor(3 * sigma_prime)
    g = {}
    for b in range(-r, r + 1):
        for a in range(-r, r + 1):
            g[(a, b)] = math.exp(-(a * a + b * b) / (2 * sigma_prime * sigma_prime))
    norm = math.fsum(g.values())
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for b in range(-r, r + 1):
                for a in range(-r, r + 1):
                    yy = mirror_index(y - db - b, h)
                    xx = mirror_index(x - da - a, w)
                    acc += lgn_map[yy][xx] * g[(a, b)] / norm
            out[y][x] = acc
    return out


def round_half_even(v: float) -> int:
    return int(round(v))


def cell(image, subunits, weights):
    """Weighted geometric mean over ``subunits`` given as (delta, sigma, rho, phi, sigma')."""
    h, w = len(image), len(image[0])
    lgn_maps = {}
    responses = []
    for delta, sigma, rho, phi, sp in subunits:
        key = (delta, sigma)
        if key not in lgn_maps:
            lgn_maps[key] = lgn(image, sigma, delta)
        responses.append(subunit(lgn_maps[key], rho, phi, sp))
    total = math.fsum(weights)
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            prod = 1.0
            for resp, wt in zip(responses, weights):
                prod *= resp[y][x] ** wt
            out[y][x] = prod ** (1.0 / total)
    return out


def beta_shift(subunits, beta: float, sigma0: float, alpha: float):
    """Separated set: move sub-units ``beta/2`` outwards along x, recompute blur std."""
    shifted = []
    for delta, sigma, rho, phi, _ in subunits:
        x = rho * math.cos(phi)
        y = rho * math.sin(phi)
        if abs(x) <= 1e-9:
            x, gamma = 0.0, 0.0
        elif x > 0:
            gamma = beta / 2
        elif x < 0:
            gamma = -beta / 2
        else:
            gamma = 0.0
        rho2 = math.sqrt((x + gamma) ** 2 + y**2)
        if rho2 == 0:
            phi2 = 0.0
        else:
            phi2 = math.acos(max(-1.0, min(1.0, (x + gamma) / rho2)))
            # arccos alone only covers the upper half-plane
            if y < 0:
                phi2 = 2 * math.pi - phi2
        shifted.append((delta, sigma, rho2, phi2, sigma0 + alpha * rho2))
    return shifted


def pushpull(image, subunits, weights, beta, k, sigma0, alpha, rectify=True):
    push = cell(image, subunits, weights)
    pull_units = [(-d, s, r, p, sp) for d, s, r, p, sp in beta_shift(subunits, beta, sigma0, alpha)]
    pull = cell(image, pull_units, weights)
    out = [[p - k * q for p, q in zip(prow, qrow)] for prow, qrow in zip(push, pull)]
    if rectify:
        out = [[max(0.0, v) for v in row] for row in out]
    return out


def cell_tuples(corf_cell):
    return [(s.delta, s.sigma, s.rho, s.phi, s.sigma_prime) for s in corf_cell.subunits]
