"""Independent reference solutions used by the tests."""

import numpy as np
from scipy.special import h1vp, hankel1, jv, jvp


def disc_series_coefficients(k, n, radius, order=None):
    """Interior (a_m) and scattered (b_m) coefficients for a homogeneous disc.

    Plane wave exp(i k x) hitting a disc of index ``n``:
    interior u = sum a_m J_m(k sqrt(n) r) e^{i m phi},
    exterior u_s = sum b_m H_m(k r) e^{i m phi}.
    """
    if order is None:
        order = int(np.ceil(max(3 * k * radius, k * np.sqrt(abs(n)) * radius + 10)))
    m = np.arange(-order, order + 1)
    kap = k * np.sqrt(n + 0j)
    ka, kapa = k * radius, kap * radius
    inc = 1j**m * jv(m, ka)
    dinc = 1j**m * k * jvp(m, ka)
    # [J_m(kap a), -H_m(k a)] [a_m; b_m] = inc ; derivative row likewise
    a11, a12 = jv(m, kapa), -hankel1(m, ka)
    a21, a22 = kap * jvp(m, kapa), -k * h1vp(m, ka)
    det = a11 * a22 - a12 * a21
    am = (inc * a22 - a12 * dinc) / det
    bm = (a11 * dinc - a21 * inc) / det
    return m, am, bm


def disc_far_field(k, n, radius, incident_angle, meas_angles):
    """Far-field pattern normalised so u_s ~ gamma e^{ikr}/sqrt(r) u_inf."""
    m, _, bm = disc_series_coefficients(k, n, radius)
    phi = np.asarray(meas_angles)[:, None] - incident_angle
    return -4j * np.sum(bm * (-1j) ** m * np.exp(1j * m * phi), axis=1)


def disc_total_field(k, n, radius, incident_angle, points):
    m, am, bm = disc_series_coefficients(k, n, radius)
    r = np.hypot(points[:, 0], points[:, 1])
    phi = np.arctan2(points[:, 1], points[:, 0])[:, None] - incident_angle
    kap = k * np.sqrt(n + 0j)
    inside = r < radius
    out = np.empty(len(points), dtype=complex)
    e = np.exp(1j * m * phi)
    out[inside] = np.sum(am * jv(m, kap * r[inside, None]) * e[inside], axis=1)
    rr = r[~inside, None]
    out[~inside] = np.sum(
        (1j**m * jv(m, k * rr) + bm * hankel1(m, k * rr)) * e[~inside], axis=1
    )
    return out
