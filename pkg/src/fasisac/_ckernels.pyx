# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels: far-field responses, channel row, quadratic forms, spacing.

Signatures mirror ``_pykernels`` exactly; ``kernels`` picks one at import.
"""
import numpy as np
from libc.math cimport sin, cos, sqrt, INFINITY

cdef double TWO_PI = 6.283185307179586


def response_matrix(const double[:, ::1] positions, const double[::1] elevation,
                    const double[::1] azimuth, double wavelength):
    cdef Py_ssize_t n_ant = positions.shape[0]
    cdef Py_ssize_t n_path = elevation.shape[0]
    cdef Py_ssize_t d, n
    cdef double k = TWO_PI / wavelength
    cdef double sx, cy, phase
    out = np.empty((n_path, n_ant), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    for d in range(n_path):
        sx = sin(elevation[d]) * cos(azimuth[d])
        cy = cos(elevation[d])
        for n in range(n_ant):
            phase = k * (positions[n, 0] * sx + positions[n, 1] * cy)
            o[d, n] = cos(phase) + 1j * sin(phase)
    return out


def channel_row(const double[:, ::1] bs_positions, const double[::1] ut_position,
                const double[::1] tx_elevation, const double[::1] tx_azimuth,
                const double[::1] rx_elevation, const double[::1] rx_azimuth,
                const double complex[:, ::1] sigma, double wavelength):
    cdef Py_ssize_t n_ant = bs_positions.shape[0]
    cdef Py_ssize_t n_tx = tx_elevation.shape[0]
    cdef Py_ssize_t n_rx = rx_elevation.shape[0]
    cdef Py_ssize_t i, d, n
    cdef double k = TWO_PI / wavelength
    cdef double phase, sx, cy
    cdef double complex acc
    weights = np.zeros(n_tx, dtype=np.complex128)
    cdef double complex[::1] w = weights
    rx_conj = np.empty(n_rx, dtype=np.complex128)
    cdef double complex[::1] fc = rx_conj
    for i in range(n_rx):
        phase = k * (ut_position[0] * sin(rx_elevation[i]) * cos(rx_azimuth[i])
                     + ut_position[1] * cos(rx_elevation[i]))
        fc[i] = cos(phase) - 1j * sin(phase)
    for d in range(n_tx):
        acc = 0
        for i in range(n_rx):
            acc = acc + fc[i] * sigma[i, d]
        w[d] = acc
    out = np.zeros(n_ant, dtype=np.complex128)
    cdef double complex[::1] o = out
    for d in range(n_tx):
        if w[d] == 0:
            continue
        sx = sin(tx_elevation[d]) * cos(tx_azimuth[d])
        cy = cos(tx_elevation[d])
        for n in range(n_ant):
            phase = k * (bs_positions[n, 0] * sx + bs_positions[n, 1] * cy)
            o[n] = o[n] + w[d] * (cos(phase) + 1j * sin(phase))
    return out


def quad_form(const double complex[::1] f, const double complex[:, ::1] U):
    """Return f U f^H as a complex scalar (row-vector convention)."""
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t a, b
    cdef double complex acc = 0, row
    for a in range(n):
        row = 0
        for b in range(n):
            row = row + U[a, b] * f[b].conjugate()
        acc = acc + f[a] * row
    return complex(acc)


def trace_sandwich(const double complex[:, ::1] E, const double complex[:, ::1] U):
    """Return Tr(E U E^H)."""
    cdef Py_ssize_t p = E.shape[0]
    cdef Py_ssize_t n = E.shape[1]
    cdef Py_ssize_t r, a, b
    cdef double complex acc = 0, row
    for r in range(p):
        for a in range(n):
            row = 0
            for b in range(n):
                row = row + U[a, b] * E[r, b].conjugate()
            acc = acc + E[r, a] * row
    return complex(acc)


def min_pairwise_distance(const double[:, ::1] positions):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t a, b
    cdef double best = INFINITY, dx, dy, d2
    for a in range(n):
        for b in range(a + 1, n):
            dx = positions[a, 0] - positions[b, 0]
            dy = positions[a, 1] - positions[b, 1]
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
    if best == INFINITY:
        return INFINITY
    return sqrt(best)


def settle_positions(const double[:, ::1] previous, const double[:, ::1] tentative,
                     double min_distance):
    """Accept moves in index order; a move landing within ``min_distance`` of any
    other antenna's current position is rejected (antenna stays put)."""
    cdef Py_ssize_t n = previous.shape[0]
    cdef Py_ssize_t a, b
    cdef double dx, dy, lim2 = min_distance * min_distance
    cdef bint ok
    out = np.array(previous, dtype=np.float64, copy=True)
    cdef double[:, ::1] o = out
    for a in range(n):
        ok = True
        for b in range(n):
            if b == a:
                continue
            dx = tentative[a, 0] - o[b, 0]
            dy = tentative[a, 1] - o[b, 1]
            if dx * dx + dy * dy < lim2:
                ok = False
                break
        if ok:
            o[a, 0] = tentative[a, 0]
            o[a, 1] = tentative[a, 1]
    return out


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, double c1, double c2):
    """Fused in-place Adam step over flat parameter/moment buffers."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi, mi, vi
    for i in range(n):
        gi = g[i]
        mi = m[i] * beta1 + (1.0 - beta1) * gi
        vi = v[i] * beta2 + (1.0 - beta2) * gi * gi
        m[i] = mi
        v[i] = vi
        p[i] = p[i] - lr * (mi / c1) / (sqrt(vi / c2) + eps)


def soft_update(double[::1] target, const double[::1] online, double tau):
    cdef Py_ssize_t i, n = target.shape[0]
    cdef double keep = 1.0 - tau
    for i in range(n):
        target[i] = tau * online[i] + keep * target[i]
