"""Transmit covariance design for fixed antenna positions.

The relaxed problem

    maximize   f U f^H
    subject to Tr(U) <= P_max,  Tr(G_k U) >= Gamma (k = 1..K),  U >= 0,

with G_k = E_k^H E_k, is a small dense complex SDP. It is solved by a primal
log-barrier method over the real coordinates of Hermitian matrices, after a
phase-1 solve that either finds a strictly feasible start or returns a dual
certificate of infeasibility. A rank-one beamformer is then recovered by
Gaussian randomization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import communication_rate, sensing_gain
from .errors import ConfigurationError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"
RANK_ONE_FAILED = "rank_one_recovery_failed"

# relative shortfall tolerated on sensing constraints for recovered beamformers
SENSING_RTOL = 1e-8


@dataclass
class Covariance:
    matrix: np.ndarray
    rank_one_factor: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)

    @classmethod
    def from_beamformer(cls, u) -> "Covariance":
        u = np.asarray(u, dtype=np.complex128).ravel()
        return cls(np.outer(u, u.conj()), u)

    @property
    def power(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass
class SolverConfig:
    mu0: float = 1.0
    mu_factor: float = 0.2
    gap_tol: float = 1e-7
    max_newton: int = 400
    randomization_samples: int = 1000


@dataclass
class SolveReport:
    status: str
    relaxed_rate: float
    recovered_rate: float | None = None
    constraint_slacks: list[float] = field(default_factory=list)
    iterations: int = 0
    certificate: np.ndarray | None = None  # simplex weights proving infeasibility
    certificate_bound: float | None = None  # max_k min slack upper bound (normalized)
    kkt_residual: float | None = None
    duality_gap: float | None = None


@dataclass
class ConstraintReport:
    hermitian_residual: float
    min_eigenvalue: float
    power_slack: float
    sensing_slacks: list[float]
    rate: float

    def ok(self, p_max: float, gamma: float, rtol: float = 1e-6) -> bool:
        trace = p_max - self.power_slack
        return (self.power_slack >= -rtol * p_max
                and all(s >= -rtol * gamma for s in self.sensing_slacks)
                and self.min_eigenvalue >= -1e-8 * max(trace, 0.0)
                and self.hermitian_residual <= 1e-10 * max(trace, 1.0))


# -- Hermitian <-> real coordinates ---------------------------------------------------------
# Orthonormal basis under <A, B> = Re Tr(A B): diagonal units, then for i < j the
# pairs (E_ij + E_ji)/sqrt2 and 1j(E_ij - E_ji)/sqrt2 ... stored as sqrt2*Re, sqrt2*Im.

@lru_cache(maxsize=None)
def _basis(n: int):
    iu = np.triu_indices(n, 1)
    dim = n * n
    T = np.zeros((n, n, dim), dtype=np.complex128)
    for i in range(n):
        T[i, i, i] = 1.0
    s = 1.0 / np.sqrt(2.0)
    for idx, (i, j) in enumerate(zip(*iu)):
        re = n + 2 * idx
        im = re + 1
        T[i, j, re] = s
        T[j, i, re] = s
        T[i, j, im] = 1j * s
        T[j, i, im] = -1j * s
    return iu, T.reshape(dim, dim)


def herm_to_vec(H: np.ndarray) -> np.ndarray:
    n = H.shape[0]
    iu, _ = _basis(n)
    off = H[iu] * np.sqrt(2.0)
    out = np.empty(n * n)
    out[:n] = np.diag(H).real
    out[n::2] = off.real
    out[n + 1::2] = off.imag
    return out


def vec_to_herm(x: np.ndarray, n: int) -> np.ndarray:
    iu, _ = _basis(n)
    H = np.zeros((n, n), dtype=np.complex128)
    off = (x[n::2] + 1j * x[n + 1::2]) / np.sqrt(2.0)
    H[iu] = off
    H = H + H.conj().T
    H[np.diag_indices(n)] = x[:n]
    return H


def _logdet_hessian(W: np.ndarray) -> np.ndarray:
    """Matrix of dX -> W dX W in the Hermitian coordinates (positive definite)."""
    n = W.shape[0]
    _, T = _basis(n)
    K = np.kron(W, W.T)
    return (T.conj().T @ K @ T).real


def _chol_inverse(X: np.ndarray):
    """Inverse and log-determinant of a Hermitian matrix, or None if not positive definite."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(L)):
        return None
    Linv = np.linalg.inv(L)
    return Linv.conj().T @ Linv, 2.0 * float(np.log(np.diag(L).real).sum())


# -- barrier machinery ----------------------------------------------------------------------

class _Barrier:
    """Centering of  t * c.x + log det V + sum log(a_i.x - b_i)  over z = (x, extras).

    Linear pieces are written as rows of ``A`` acting on the full variable z; the
    first n*n coordinates of z are the Hermitian coordinates of V.
    """

    def __init__(self, n, c, A, b):
        self.n, self.c, self.A, self.b = n, c, A, b
        self.m = n * n

    def value(self, z, t):
        V = vec_to_herm(z[:self.m], self.n)
        inv = _chol_inverse(V)
        if inv is None:
            return None
        s = self.A @ z - self.b
        if np.any(s <= 0):
            return None
        return t * (self.c @ z) + inv[1] + np.log(s).sum(), inv[0], s

    def newton(self, z, t, W, s):
        m = self.m
        grad = t * self.c + self.A.T @ (1.0 / s)
        grad[:m] += herm_to_vec(W)
        # Hessian of -phi (positive definite)
        H = np.zeros((z.size, z.size))
        H[:m, :m] = _logdet_hessian(W)
        As = self.A / s[:, None]
        H += As.T @ As
        try:
            L = np.linalg.cholesky(H)
            dz = np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            dz = np.linalg.lstsq(H, grad, rcond=None)[0]
        return dz, float(grad @ dz)

    def center(self, z, t, max_steps, stop=None):
        """Damped Newton until the decrement is tiny. Returns (z, steps, state)."""
        state = self.value(z, t)
        steps = 0
        prev = np.inf
        while steps < max_steps:
            phi, W, s = state
            dz, dec2 = self.newton(z, t, W, s)
            steps += 1
            # a decrement that stops shrinking has hit the rounding floor
            if dec2 < 0 or dec2 / 2.0 < 1e-11 or (dec2 / 2.0 < 1e-8 and dec2 >= prev):
                break
            prev = dec2
            alpha = 1.0
            while True:
                trial = self.value(z + alpha * dz, t)
                if trial is not None and trial[0] >= phi + 0.25 * alpha * dec2:
                    break
                alpha *= 0.5
                if alpha < 1e-14:
                    trial = None
                    break
            if trial is None:
                break
            z = z + alpha * dz
            state = trial
            if stop is not None and stop(z, state):
                break
        return z, steps, state


def _prepare(channel, target_matrices, p_max, gamma):
    f = np.asarray(channel, dtype=np.complex128).ravel()
    n = f.size
    norm2 = float(np.vdot(f, f).real)
    if not norm2 > 0:
        raise ConfigurationError("channel must be non-zero")
    if not p_max > 0:
        raise ConfigurationError("p_max must be positive")
    fh = f / np.sqrt(norm2)
    C = np.outer(fh.conj(), fh)  # Tr(C V) = fh V fh^H
    Gs = []
    for E in target_matrices:
        E = np.asarray(E, dtype=np.complex128)
        if E.ndim != 2 or E.shape[1] != n:
            raise ConfigurationError(f"target matrix {E.shape} incompatible with N={n}")
        Gs.append(E.conj().T @ E)
    # in orthonormal Hermitian coordinates Tr(G V) = herm_to_vec(G) . herm_to_vec(V)
    g_rows = [herm_to_vec(G) for G in Gs]
    return f, n, norm2, C, Gs, g_rows, gamma / p_max


def _phase1(n, g_rows, gamma_n, cfg: SolverConfig):
    """Find V > 0, Tr V < 1 with Tr(G_k V) > gamma_n for all k, or certify none exists.

    Returns (V or None, simplex weights, upper bound on max min-slack, newton steps).
    """
    m = n * n
    K = len(g_rows)
    e = herm_to_vec(np.eye(n))
    V0 = np.eye(n) / (2.0 * n)
    x0 = herm_to_vec(V0)
    slack0 = np.array([g @ x0 - gamma_n for g in g_rows])
    if K == 0 or slack0.min() > 0:
        return V0, None, None, 0
    # variables z = (x, s); constraints 1 - e.x > 0 and g_k.x - gamma - s > 0
    A = np.zeros((K + 1, m + 1))
    b = np.zeros(K + 1)
    A[0, :m] = -e
    b[0] = -1.0
    for k, g in enumerate(g_rows):
        A[k + 1, :m] = g
        A[k + 1, m] = -1.0
        b[k + 1] = gamma_n
    c = np.zeros(m + 1)
    c[m] = 1.0
    bar = _Barrier(n, c, A, b)
    z = np.append(x0, slack0.min() - 1.0)
    t = 1.0 / cfg.mu0
    steps = 0
    deg = n + 1 + K

    def feasible(zz, state):
        xs = zz[:m]
        return min(g @ xs - gamma_n for g in g_rows) > 0

    weights = np.full(K, 1.0 / K)
    bound = np.inf
    while steps < cfg.max_newton:
        z, used, state = bar.center(z, t, cfg.max_newton - steps, stop=feasible)
        steps += used
        if feasible(z, state):
            return vec_to_herm(z[:m], n), None, None, steps
        s = state[2][1:]
        w = 1.0 / (t * s)
        weights = w / w.sum()
        Gmix = sum(wk * vec_to_herm(g, n) for wk, g in zip(weights, g_rows))
        bound = float(np.linalg.eigvalsh(Gmix)[-1]) - gamma_n
        if bound <= 0 or deg / t < 1e-12:
            break
        t /= cfg.mu_factor
    return None, weights, bound, steps


def solve_covariance(channel, target_matrices, p_max: float, gamma: float, noise_power: float,
                     config: SolverConfig | None = None):
    """Relaxed (rank-unconstrained) optimum of the covariance subproblem."""
    cfg = config or SolverConfig()
    f, n, norm2, C, Gs, g_rows, gamma_n = _prepare(channel, target_matrices, p_max, gamma)
    m = n * n
    K = len(Gs)

    V, weights, bound, steps = _phase1(n, g_rows, gamma_n, cfg)
    if V is None:
        zero = Covariance(np.zeros((n, n), dtype=np.complex128))
        return zero, SolveReport(
            status=INFEASIBLE, relaxed_rate=0.0, constraint_slacks=[-gamma] * K,
            iterations=steps, certificate=weights, certificate_bound=bound)

    e = herm_to_vec(np.eye(n))
    A = np.vstack([-e] + g_rows) if K else (-e)[None, :]
    b = np.concatenate([[-1.0], np.full(K, gamma_n)])
    c = herm_to_vec(C)
    bar = _Barrier(n, c, A, b)
    x = herm_to_vec(V)
    t = 1.0 / cfg.mu0
    deg = n + 1 + K
    status = MAX_ITER
    while steps < cfg.max_newton:
        x, used, state = bar.center(x, t, cfg.max_newton - steps)
        steps += used
        obj = float(c @ x)
        if deg / t < cfg.gap_tol * (1.0 + abs(obj)):
            status = OPTIMAL
            break
        t /= cfg.mu_factor

    V = vec_to_herm(x, n)
    W = np.linalg.inv(V)
    s = A @ x - b
    # central-path dual estimates: Z = W/t, z = 1/(t s_0), y_k = 1/(t s_k)
    dual = 1.0 / (t * s)
    station = C - dual[0] * np.eye(n) + sum(y * G for y, G in zip(dual[1:], Gs)) + W / t
    kkt = float(np.linalg.norm(station)) / (1.0 + float(np.linalg.norm(C)))

    U = p_max * V
    cov = Covariance(0.5 * (U + U.conj().T))
    rate = communication_rate(f, cov, noise_power)
    slacks = [sensing_gain_from_g(G, cov.matrix) - gamma for G in Gs]
    return cov, SolveReport(status=status, relaxed_rate=rate, constraint_slacks=slacks,
                            iterations=steps, kkt_residual=kkt, duality_gap=deg / t)


def sensing_gain_from_g(G: np.ndarray, U: np.ndarray) -> float:
    """Tr(G U) for G = E^H E, equal to Tr(E U E^H)."""
    return float(np.einsum("ab,ba->", G, U).real)


def mrt_beamformer(channel, p_max: float) -> Covariance:
    f = np.asarray(channel, dtype=np.complex128).ravel()
    norm = float(np.linalg.norm(f))
    if norm == 0:
        raise ConfigurationError("MRT needs a non-zero channel")
    u = np.sqrt(p_max) * f.conj() / norm
    return Covariance.from_beamformer(u)


def mrt_rate(channel, p_max: float, noise_power: float) -> float:
    f = np.asarray(channel).ravel()
    return float(np.log2(1.0 + p_max * np.vdot(f, f).real / noise_power))


def _psd_sqrt(U: np.ndarray):
    w, Q = np.linalg.eigh(0.5 * (U + U.conj().T))
    w = np.clip(w, 0.0, None)
    return (Q * np.sqrt(w)) @ Q.conj().T, w, Q


def gaussian_randomize(covariance, channel, target_matrices, p_max: float, gamma: float,
                       noise_power: float, num_samples: int, rng: np.random.Generator,
                       relaxed_rate: float | None = None):
    """Recover a rank-one beamformer from a relaxed covariance.

    Candidate 0 is the dominant eigenvector; candidates 1..L are U^{1/2} v with
    v ~ CN(0, I). Every candidate is scaled to full power P_max (rate and all
    sensing gains grow with power). Among candidates meeting every sensing
    constraint the highest-rate one wins; ties go to the lowest index.
    """
    if num_samples < 1:
        raise ConfigurationError("num_samples must be >= 1")
    U = getattr(covariance, "matrix", covariance)
    f = np.asarray(channel, dtype=np.complex128).ravel()
    n = f.size
    root, w, Q = _psd_sqrt(np.asarray(U, dtype=np.complex128))
    v = (rng.standard_normal((num_samples, n)) + 1j * rng.standard_normal((num_samples, n))) / np.sqrt(2.0)
    cands = np.vstack([Q[:, -1][None, :], v @ root.T])
    norms = np.linalg.norm(cands, axis=1)
    good = norms > 0
    cands[good] *= (np.sqrt(p_max) / norms[good])[:, None]

    snr = np.abs(cands @ f) ** 2
    snr[~good] = -np.inf
    if target_matrices:
        gains = np.stack([(np.abs(cands @ np.asarray(E).T) ** 2).sum(axis=1) for E in target_matrices],
                         axis=1)
    else:
        gains = np.zeros((cands.shape[0], 0))
    worst = (gains - gamma).min(axis=1) if gains.shape[1] else np.full(cands.shape[0], np.inf)
    feasible = good & (worst >= -SENSING_RTOL * gamma)

    if relaxed_rate is None:
        relaxed_rate = communication_rate(f, U, noise_power)
    if feasible.any():
        idx = int(np.argmax(np.where(feasible, snr, -np.inf)))
        status = OPTIMAL
    else:
        idx = int(np.argmax(snr))
        status = RANK_ONE_FAILED
    cov = Covariance.from_beamformer(cands[idx])
    rate = communication_rate(f, cov, noise_power)
    slacks = [sensing_gain(E, cov) - gamma for E in target_matrices]
    return cov, SolveReport(status=status, relaxed_rate=relaxed_rate, recovered_rate=rate,
                            constraint_slacks=slacks, iterations=num_samples)


def validate_covariance(covariance, channel, target_matrices, p_max, gamma, noise_power,
                        tol: float = 1e-9) -> ConstraintReport:
    U = np.asarray(getattr(covariance, "matrix", covariance), dtype=np.complex128)
    herm = float(np.abs(U - U.conj().T).max(initial=0.0))
    Us = 0.5 * (U + U.conj().T)
    min_eig = float(np.linalg.eigvalsh(Us)[0]) if Us.size else 0.0
    power_slack = float(p_max - np.trace(Us).real)
    slacks = [float(np.trace(np.asarray(E) @ Us @ np.asarray(E).conj().T).real) - gamma
              for E in target_matrices]
    try:
        rate = communication_rate(channel, Us, noise_power)
    except ArithmeticError:
        rate = float("nan")
    return ConstraintReport(herm, min_eig, power_slack, slacks, rate)


def design_beamformer(channel, target_matrices, p_max, gamma, noise_power, rng,
                      config: SolverConfig | None = None):
    """solve_covariance followed by gaussian_randomize.

    Returns (relaxed Covariance, rank-one Covariance or None, SolveReport).
    """
    cfg = config or SolverConfig()
    relaxed, rep = solve_covariance(channel, target_matrices, p_max, gamma, noise_power, cfg)
    if rep.status == INFEASIBLE:
        return relaxed, None, rep
    cov1, rep1 = gaussian_randomize(relaxed, channel, target_matrices, p_max, gamma, noise_power,
                                    cfg.randomization_samples, rng, relaxed_rate=rep.relaxed_rate)
    status = rep1.status if rep.status == OPTIMAL else rep.status
    report = SolveReport(status=status, relaxed_rate=rep.relaxed_rate,
                         recovered_rate=rep1.recovered_rate,
                         constraint_slacks=rep1.constraint_slacks, iterations=rep.iterations,
                         kkt_residual=rep.kkt_residual, duality_gap=rep.duality_gap)
    return relaxed, cov1, report
