"""Classical RK4 step specialised to the two-photon block.

In every model the two-photon block obeys

    d/dt M = i (u ⊗ b + b ⊗ u),      u = conj(G(t)),  b = c_gk,

so M never appears on its own right-hand side. The RK4 stage matrices are
M plus a rank-2 correction and the final update is a rank-8 correction.
Stage mat-vecs are therefore one n×3 product with the step-start M plus O(n)
corrections. This is algebraically identical to plain RK4 on the full state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

# rows per block; fixed so the arithmetic does not depend on the worker count
BLOCK_ROWS = 128

_STAGE_OFFSETS = (0.0, 0.5, 0.5, 1.0)


class RowBlocks:
    """Row-blocked dense kernels, optionally spread over a thread pool."""

    def __init__(self, n: int, workers: int = 1):
        self.blocks = [slice(i, min(i + BLOCK_ROWS, n)) for i in range(0, n, BLOCK_ROWS)]
        self.workers = max(1, int(workers))
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def _map(self, fn):
        if self._pool is None:
            for blk in self.blocks:
                fn(blk)
        else:
            list(self._pool.map(fn, self.blocks))

    def matmul(self, M: np.ndarray, W: np.ndarray) -> np.ndarray:
        out = np.empty((M.shape[0], W.shape[1]), dtype=complex)

        def work(blk):
            out[blk] = M[blk] @ W

        self._map(work)
        return out

    def sym_update(self, M: np.ndarray, X: np.ndarray, scale: complex) -> None:
        """In place ``M += scale * (X + X.T)``; exactly symmetric if M is."""

        def work(blk):
            M[blk] += scale * (X[blk] + X[:, blk].T)

        self._map(work)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


SmallRhs = Callable[[int, float, tuple, np.ndarray, "np.ndarray | None"], tuple]


def lowrank_rk4_step(
    t: float,
    dt: float,
    small: tuple,
    M: np.ndarray,
    coupling: Callable[[float], np.ndarray],
    weights: np.ndarray,
    small_rhs: SmallRhs,
    kernels: RowBlocks,
    feedback_matvec: bool = True,
) -> tuple[tuple, np.ndarray, tuple]:
    """Advance ``(small, M)`` by one RK4 step.

    ``small`` is ``(c_e, c_g, c_ek, c_gk, *extra)``. ``small_rhs(stage, t_s,
    y_s, G_s, Mv_s)`` returns derivatives of ``small`` where ``Mv_s`` is the
    stage value of ``M @ (w * G_s)`` (``None`` when ``feedback_matvec`` is
    false). ``M`` is updated in place and also returned. The third return value
    is the first-stage derivative, i.e. the RHS at ``t``.
    """
    G = [coupling(t + off * dt) for off in (0.0, 0.5, 1.0)]
    stage_G = (G[0], G[1], G[1], G[2])
    if feedback_matvec:
        wG = [weights * g for g in G]
        P = kernels.matmul(M, np.stack(wG, axis=1))
        stage_P = (P[:, 0], P[:, 1], P[:, 1], P[:, 2])
        stage_wG = (wG[0], wG[1], wG[1], wG[2])

    derivs: list[tuple] = []
    us: list[np.ndarray] = []
    bs: list[np.ndarray] = []
    y = small
    for s in range(4):
        ts = t + _STAGE_OFFSETS[s] * dt
        if s > 0:
            h = _STAGE_OFFSETS[s] * dt
            y = tuple(a + h * da for a, da in zip(small, derivs[-1]))
        Gs = stage_G[s]
        u = Gs.conj()
        b = y[3]
        Mv = None
        if feedback_matvec:
            Mv = stage_P[s]
            if s > 0:
                # (M + h·i(u'⊗b' + b'⊗u')) @ wG
                wGs = stage_wG[s]
                Mv = Mv + (h * 1j) * (us[-1] * (bs[-1] @ wGs) + bs[-1] * (us[-1] @ wGs))
        derivs.append(small_rhs(s, ts, y, Gs, Mv))
        us.append(u)
        bs.append(b)

    new_small = tuple(
        a + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        for a, d1, d2, d3, d4 in zip(small, *derivs)
    )
    U = np.stack([us[0], 2.0 * us[1], 2.0 * us[2], us[3]], axis=1)
    V = np.stack(bs, axis=1)
    X = U @ V.T
    kernels.sym_update(M, X, 1j * dt / 6.0)
    return new_small, M, derivs[0]


def plain_rk4_step(f: Callable[[float, Sequence], tuple], t: float, dt: float, y: tuple) -> tuple:
    """Textbook RK4 on a tuple of arrays; used as a cross-check."""
    k1 = f(t, y)
    k2 = f(t + dt / 2, tuple(a + dt / 2 * b for a, b in zip(y, k1)))
    k3 = f(t + dt / 2, tuple(a + dt / 2 * b for a, b in zip(y, k2)))
    k4 = f(t + dt, tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(a + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
