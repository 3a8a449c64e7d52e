"""Random systems and brute-force oracles shared by the tests."""
import numpy as np

from cyclid import PeriodicStateSpace, simulate_lptv


def random_periodic(rng, M, n, m, p, radius=0.9, strictly_proper=True):
    """Periodic system whose ``A_k`` have spectral norm ``radius``."""
    A = []
    for _ in range(M):
        X = rng.standard_normal((n, n))
        A.append(radius * X / np.linalg.norm(X, 2))
    B = [rng.standard_normal((n, m)) for _ in range(M)]
    C = [rng.standard_normal((p, n)) for _ in range(M)]
    D = None if strictly_proper else [rng.standard_normal((p, m)) for _ in range(M)]
    return PeriodicStateSpace(A, B, C, D)


def random_controller(rng, M, n_c, l, radius=0.5, path_cond_max=20.0):
    """Strictly proper controller whose paths ``C_c,k B_c,k-1`` jointly have ``cond < path_cond_max``."""
    if n_c < l:
        raise ValueError("C_c B_c is singular when n_c < l")
    while True:
        K = random_periodic(rng, M, n_c, l, l, radius)
        paths = [K.C[k] @ K.B[(k - 1) % M] for k in range(M)]
        # the cycled C_u B is block diagonal in these paths
        sv = np.concatenate([np.linalg.svd(P, compute_uv=False) for P in paths])
        if sv.min() * path_cond_max > sv.max():
            return K


def relative_degree_two_controller(rng, M, l):
    """Controller with ``C_c B_c = 0`` but ``C_c A_c B_c`` invertible (order ``2 l``)."""
    I, Z = np.eye(l), np.zeros((l, l))
    A, B, C = [], [], []
    for _ in range(M):
        A.append(0.3 * rng.standard_normal((2 * l, 2 * l)) + np.block([[Z, I], [Z, Z]]))
        B.append(np.vstack([Z, np.diag(rng.uniform(0.5, 1.5, l))]))
        C.append(np.hstack([np.diag(rng.uniform(0.5, 1.5, l)), Z]))
    return PeriodicStateSpace(A, B, C)


def impulse_oracle(sys: PeriodicStateSpace, k: int, h: int) -> np.ndarray:
    """``H_k^(h)`` by simulating unit impulses applied at phase ``k``."""
    cols = []
    for j in range(sys.m_in):
        u = np.zeros((h + 1, sys.m_in))
        u[0, j] = 1.0
        y = simulate_lptv(sys, u, phase=k).samples
        cols.append(y[h])
    return np.array(cols).T


def random_similarity(rng, n, cond_max=50.0):
    """``U diag(s) V^T`` with Haar factors, so ``cond(T) <= cond_max`` at any size."""
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.exp(rng.uniform(0.0, np.log(cond_max), n))
    return (U * s) @ V.T
