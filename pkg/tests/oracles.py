"""Independent reference computations used by the tests.

Nothing here calls the interior-point solver; the references are closed forms,
eigen-decompositions and exhaustive grids written directly in numpy.
"""
from __future__ import annotations

import itertools

import numpy as np


def steering(points, elevation, azimuth, wavelength):
    """exp(j 2 pi (x sin(el) cos(az) + y cos(el)) / lambda), shape (points, paths)."""
    points = np.atleast_2d(points)
    delta = (points[:, :1] * (np.sin(elevation) * np.cos(azimuth))[None, :]
             + points[:, 1:2] * np.cos(elevation)[None, :])
    return np.exp(2j * np.pi * delta / wavelength)


def channel_table(bs_points, ut_points, scenario):
    """h[q, p] = sum_i conj(rx_i(q)) * sum_d Sigma[i, d] tx_d(p)."""
    tx = steering(bs_points, scenario.tx_angles.elevation, scenario.tx_angles.azimuth,
                  scenario.wavelength)  # (P, D)
    rx = steering(ut_points, scenario.rx_angles.elevation, scenario.rx_angles.azimuth,
                  scenario.wavelength)  # (Q, I)
    return rx.conj() @ scenario.sigma_matrix @ tx.T  # (Q, P)


def gram_table(bs_points, angles, wavelength):
    """g[p, p'] = e(p)^H e(p') for one target's path responses."""
    e = steering(bs_points, angles.elevation, angles.azimuth, wavelength)  # (P, paths)
    return e.conj() @ e.T


def mrt_rate(f, p_max, noise_power):
    return np.log2(1.0 + p_max * np.sum(np.abs(f) ** 2, axis=-1) / noise_power)


def two_antenna_optimum(f, G, p_max, gamma, noise_power):
    """Exact max log2(1 + |f u|^2 / s2) s.t. ||u||^2 = P, u^H G u >= Gamma for N = 2,
    batched over leading axes (f: (..., 2), G: (..., 2, 2)).

    In G's eigenbasis (g1 >= g2) write u = sqrt(P) (cos a, sin a e^{j phi}). The
    gain constraint becomes cos^2 a >= c* = (Gamma/P - g2) / (g1 - g2), and the best
    phase gives |f u|^2 = P (|f1| cos a + |f2| sin a)^2, which is unimodal in a with
    its peak at tan a = |f2| / |f1|. So a = min(peak, arccos sqrt(c*)).
    Infeasible entries return -inf.
    """
    f = np.asarray(f, dtype=complex)
    G = np.asarray(G, dtype=complex)
    w, V = np.linalg.eigh(G)
    g2, g1 = w[..., 0], w[..., 1]
    ft = np.einsum("...i,...ij->...j", f, V)  # f expressed in the eigenbasis: f u = ft . (V^H u)
    m1, m2 = np.abs(ft[..., 1]), np.abs(ft[..., 0])
    a_peak = np.arctan2(m2, m1)
    spread = g1 - g2
    with np.errstate(divide="ignore", invalid="ignore"):
        cstar = np.where(spread > 0, (gamma / p_max - g2) / spread, 0.0)
    a_max = np.arccos(np.sqrt(np.clip(cstar, 0.0, 1.0)))
    a = np.minimum(a_peak, a_max)
    snr = p_max * (m1 * np.cos(a) + m2 * np.sin(a)) ** 2
    rate = np.log2(1.0 + snr / noise_power)
    feasible = p_max * g1 >= gamma * (1 - 1e-12)
    return np.where(feasible, rate, -np.inf)


def sphere_grid_rate(f, G_list, p_max, gamma, noise_power, n_alpha=100, n_phi=100):
    """Brute force over u = sqrt(P) (cos a, sin a e^{j phi}) for N = 2 (global phase is
    irrelevant). Returns the best feasible rate or -inf."""
    a = (np.arange(n_alpha) + 0.5) * (np.pi / 2) / n_alpha
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    A, P = np.meshgrid(a, phi, indexing="ij")
    U = np.sqrt(p_max) * np.stack([np.cos(A).ravel(), (np.sin(A) * np.exp(1j * P)).ravel()], axis=1)
    snr = np.abs(U @ f) ** 2
    ok = np.ones(U.shape[0], dtype=bool)
    for G in G_list:
        gain = np.einsum("si,ij,sj->s", U.conj(), G, U).real
        ok &= gain >= gamma
    if not ok.any():
        return -np.inf
    return float(np.log2(1 + snr[ok].max() / noise_power))


def grid_points(half_width, n=9, center=(0.0, 0.0)):
    xs = np.linspace(-half_width, half_width, n)
    return np.array([(center[0] + x, center[1] + y) for y in xs for x in xs])


def exhaustive_layout_oracle(scenario, n_grid=9):
    """Best N = 2, K = 1 rate over BS pairs and UT position on n x n grids."""
    bs = grid_points(scenario.region_bs.half_width, n_grid, scenario.region_bs.center)
    ut = grid_points(scenario.region_ut.half_width, n_grid, scenario.region_ut.center)
    h = channel_table(bs, ut, scenario)  # (Q, P)
    g = gram_table(bs, scenario.target_angles[0], scenario.wavelength)
    pairs = [(i, j) for i, j in itertools.combinations(range(len(bs)), 2)
             if np.linalg.norm(bs[i] - bs[j]) >= scenario.d_s * (1 - 1e-12)]
    I = np.array([p[0] for p in pairs])
    J = np.array([p[1] for p in pairs])
    G = np.stack([np.stack([g[I, I], g[I, J]], -1), np.stack([g[J, I], g[J, J]], -1)], -2)
    best, arg = -np.inf, None
    for q in range(len(ut)):
        f = np.stack([h[q, I], h[q, J]], -1)
        r = two_antenna_optimum(f, G, scenario.p_max, scenario.gamma, scenario.noise_power)
        k = int(np.argmax(r))
        if r[k] > best:
            best, arg = float(r[k]), (bs[I[k]], bs[J[k]], ut[q])
    return best, arg
