"""Finite truncations of orbit-collapsed walk chains and their DPs.

A collapsed chain records, for each stabilizer orbit, how many neighbors
of a representative vertex land in each orbit.  All transition
probabilities share the denominator ``denom`` (the graph degree), so the
n-step distribution can be carried as integer numerators over denom**n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import sparse


@dataclass
class CollapsedChain:
    states: list
    edges: list          # edges[i] = list of (j, count); counts sum to denom
    denom: int           # common denominator of every row (graph degree)
    level: list          # lattice level per state
    level_base: Optional[Fraction]
    horizon: int         # u_n exact for n <= horizon
    depth: list = None   # BFS depth of each state from the root
    root: int = 0
    _matrix: Optional[sparse.csr_matrix] = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def radius(self) -> int:
        return self.horizon // 2

    def interior(self, i: int) -> bool:
        """Whether state i has its complete transition row present."""
        if self.depth is None:
            return True
        return self.depth[i] < self.radius

    # ---- exact integer dynamics ----------------------------------

    def step_numerators(self, w: list) -> list:
        """One step of the count DP: new[j] = sum_i w[i] * count(i->j)."""
        nw = [0] * len(self.states)
        for i, wi in enumerate(w):
            if wi:
                for j, c in self.edges[i]:
                    nw[j] += wi * c
        return nw

    def return_series_exact(self, n_max: int) -> list:
        """u_n for n = 0..n_max as exact Fractions."""
        self._check_horizon(n_max)
        w = [0] * len(self.states)
        w[self.root] = 1
        out = [Fraction(1)]
        for n in range(1, n_max + 1):
            w = self.step_numerators(w)
            out.append(Fraction(w[self.root], self.denom ** n))
        return out

    def taboo_series_exact(self, n_max: int) -> list:
        """First-return probabilities f_n via the taboo DP.

        The walk is killed on every visit to the root, so the mass that
        arrives at the root at step n through killed dynamics is exactly
        the first-return probability.
        """
        self._check_horizon(n_max)
        w = [0] * len(self.states)
        out = [Fraction(0)]
        for j, c in self.edges[self.root]:
            w[j] += c
        out.append(Fraction(w[self.root], self.denom))
        for n in range(2, n_max + 1):
            w[self.root] = 0
            w = self.step_numerators(w)
            out.append(Fraction(w[self.root], self.denom ** n))
        return out

    # ---- float dynamics ------------------------------------------

    def matrix(self) -> sparse.csr_matrix:
        """Column-stochastic float transition matrix P[j, i] = p(i -> j)."""
        if self._matrix is None:
            rows, cols, vals = [], [], []
            inv = 1.0 / self.denom
            for i, row in enumerate(self.edges):
                for j, c in row:
                    rows.append(j)
                    cols.append(i)
                    vals.append(c * inv)
            n = len(self.states)
            self._matrix = sparse.csr_matrix(
                (vals, (rows, cols)), shape=(n, n))
        return self._matrix

    def return_series_float(self, n_max: int) -> np.ndarray:
        self._check_horizon(n_max)
        P = self.matrix()
        w = np.zeros(len(self.states))
        w[self.root] = 1.0
        out = np.empty(n_max + 1)
        out[0] = 1.0
        for n in range(1, n_max + 1):
            w = P @ w
            out[n] = w[self.root]
        return out

    def taboo_series_float(self, n_max: int) -> np.ndarray:
        self._check_horizon(n_max)
        P = self.matrix()
        w = np.zeros(len(self.states))
        w[self.root] = 1.0
        w = P @ w
        out = np.empty(n_max + 1)
        out[0] = 0.0
        out[1] = w[self.root]
        for n in range(2, n_max + 1):
            w[self.root] = 0.0
            w = P @ w
            out[n] = w[self.root]
        return out

    def _check_horizon(self, n_max: int) -> None:
        if n_max > self.horizon:
            raise ValueError(
                f"chain truncated for horizon {self.horizon}, asked for {n_max}")
