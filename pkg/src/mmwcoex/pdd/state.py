"""Primal/dual variable blocks and the per-solve report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PrimalState:
    x: np.ndarray       # (U, K) relaxed grouping
    xt: np.ndarray      # (U, K) box-constrained copy
    f: np.ndarray       # (I, M0, N0) unit-modulus analog beamformers
    d: np.ndarray       # (I, N0, N0) digital beamformers
    p: np.ndarray       # (K,) powers, mW
    w: np.ndarray       # (M0, U) fully digital beamformer
    gamma: np.ndarray   # (U, K) SINR variables
    mu: np.ndarray      # (U, U, K) data/interference gains
    xi: np.ndarray      # (U, Jt) incumbent interference gains

    def d_cols(self) -> np.ndarray:
        """Aggregate digital columns d_u, shape (N0, U)."""
        return np.concatenate([self.d[i] for i in range(self.d.shape[0])], axis=1)

    def fd_cols(self) -> np.ndarray:
        """F_{I(u)} d_u for every beam, shape (M0, U)."""
        return np.concatenate(
            [self.f[i] @ self.d[i] for i in range(self.f.shape[0])], axis=1)

    def copy(self) -> "PrimalState":
        return PrimalState(*(getattr(self, n).copy() for n in
                             ("x", "xt", "f", "d", "p", "w", "gamma", "mu", "xi")))


@dataclass
class DualState:
    lam_u: np.ndarray        # (K,) one-beam-per-user multipliers
    lam_x: np.ndarray        # (U, K) x = xt coupling
    lam_xt: np.ndarray       # (U, K) x(1-xt) = 0 coupling
    lam_w: np.ndarray        # (M0, U) complex, w = F d coupling
    lam_mu: np.ndarray       # (U, U, K)
    lam_xi: np.ndarray       # (U, Jt)
    lam_gamma: np.ndarray    # (U, K)
    rho: float
    delta: float
    eta: float

    def copy(self) -> "DualState":
        return DualState(
            *(getattr(self, n).copy() for n in
              ("lam_u", "lam_x", "lam_xt", "lam_w", "lam_mu", "lam_xi",
               "lam_gamma")),
            rho=self.rho, delta=self.delta, eta=self.eta)

    @classmethod
    def zeros(cls, n_beams: int, n_users: int, m0: int, n_tx: int,
              rho: float, delta: float, eta: float) -> "DualState":
        U, K = n_beams, n_users
        return cls(lam_u=np.zeros(K), lam_x=np.zeros((U, K)),
                   lam_xt=np.zeros((U, K)),
                   lam_w=np.zeros((m0, U), dtype=complex),
                   lam_mu=np.zeros((U, U, K)), lam_xi=np.zeros((U, n_tx)),
                   lam_gamma=np.zeros((U, K)),
                   rho=rho, delta=delta, eta=eta)


@dataclass
class SolverReport:
    al_trace: list = field(default_factory=list)       # inner-iteration values
    h_trace: list = field(default_factory=list)        # per outer iteration
    inner_counts: list = field(default_factory=list)
    convergence_rows: list = field(default_factory=list)  # (outer, inner, al, h)
    outer_iters: int = 0
    converged: bool = False
    violation: float = np.inf
    objective: float = np.nan
    block_time: dict = field(default_factory=dict)
    dropped_rmin: list = field(default_factory=list)
    infeasible_rmin: list = field(default_factory=list)

    def ok(self) -> bool:
        return self.converged and len(self.al_trace) > 0
