"""Pure numpy versions of the per-step kernels (fallback for ``_ckernels``)."""
import numpy as np


def response_matrix(positions, elevation, azimuth, wavelength):
    k = 2.0 * np.pi / wavelength
    direction = np.stack([np.sin(elevation) * np.cos(azimuth), np.cos(elevation)])
    phase = k * (direction.T @ positions.T)
    return np.exp(1j * phase)


def channel_row(bs_positions, ut_position, tx_elevation, tx_azimuth,
                rx_elevation, rx_azimuth, sigma, wavelength):
    k = 2.0 * np.pi / wavelength
    rho = ut_position[0] * np.sin(rx_elevation) * np.cos(rx_azimuth) \
        + ut_position[1] * np.cos(rx_elevation)
    rx_conj = np.exp(-1j * k * rho)
    tx = response_matrix(bs_positions, tx_elevation, tx_azimuth, wavelength)
    return (rx_conj @ sigma) @ tx


def quad_form(f, U):
    return complex(f @ U @ f.conj())


def trace_sandwich(E, U):
    return complex(np.einsum("pa,ab,pb->", E, U, E.conj()))


def min_pairwise_distance(positions):
    n = positions.shape[0]
    if n < 2:
        return float("inf")
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    return float(dist[np.triu_indices(n, 1)].min())


def settle_positions(previous, tentative, min_distance):
    out = np.array(previous, dtype=np.float64, copy=True)
    lim2 = min_distance * min_distance
    for a in range(out.shape[0]):
        d2 = ((out - tentative[a]) ** 2).sum(-1)
        d2[a] = np.inf
        if d2.min() >= lim2:
            out[a] = tentative[a]
    return out


def adam_update(p, g, m, v, lr, beta1, beta2, eps, c1, c2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    denom = np.sqrt(v / c2)
    denom += eps
    step = m / c1
    step *= lr
    step /= denom
    p -= step


def soft_update(target, online, tau):
    target *= 1.0 - tau
    target += tau * online
