"""Orbit schemas for quasi-transitive actions, the associated symmetric
matrix, its Perron eigenpair, and the induced chain with its ballot DPs.

An orbit schema records, for each ordered pair of vertex orbits (i, j)
and each stabilizer ratio q, the number N_{i,j,q} of neighbors in orbit
j at ratio q seen from a vertex of orbit i.  Everything downstream (the
matrix a(i,j) = sum_q N_{i,j,q} sqrt(q) / sqrt(d_i d_j), the stationary
law pi = v^2, the mean-zero increment identity, the induced chain on
triples) is built from these counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .models import LevelProfile
from .qfield import QuadExt, sqrt_exact


class SchemaError(ValueError):
    pass


def _ratio_power(q: Fraction, base: Fraction) -> Optional[int]:
    j, x = 0, Fraction(q)
    while x > 1:
        x /= base
        j += 1
        if j > 64:
            return None
    while x < 1:
        x *= base
        j -= 1
        if j < -64:
            return None
    return j if x == 1 else None


def _common_base(qs) -> Optional[Fraction]:
    above = sorted(q for q in qs if q > 1)
    if not above:
        return None
    base = above[0]
    if all(_ratio_power(q, base) is not None for q in qs):
        return base
    return None


@dataclass
class OrbitSchema:
    L: int
    degrees: list                 # d_i, 1-based conceptually, index i-1
    counts: dict                  # (i, j, Fraction q) -> int, 1-based i, j
    base: Optional[Fraction] = None

    def __post_init__(self):
        if self.base is None:
            self.base = _common_base({q for (_, _, q) in self.counts})

    def validate(self) -> None:
        for i in range(1, self.L + 1):
            total = sum(n for (a, _, _), n in self.counts.items() if a == i)
            if total != self.degrees[i - 1]:
                raise SchemaError(
                    f"orbit {i}: neighbor counts sum to {total}, "
                    f"degree is {self.degrees[i - 1]}")
        for (i, j, q), n in self.counts.items():
            if n < 0:
                raise SchemaError(f"negative count at {(i, j, q)}")
            mirror = self.counts.get((j, i, 1 / q), 0)
            if Fraction(n) != Fraction(mirror) / q:
                raise SchemaError(
                    f"count balance fails at (i={i}, j={j}, q={q}): "
                    f"N={n} but N_mirror/q = {Fraction(mirror) / q}")

    def lattice_step(self, q: Fraction) -> int:
        if self.base is None:
            raise SchemaError("schema ratios are not on a common lattice")
        j = _ratio_power(q, self.base)
        if j is None:
            raise SchemaError(f"ratio {q} off the lattice of base {self.base}")
        return j

    @property
    def t0_lattice(self) -> int:
        return max((abs(self.lattice_step(q)) for (_, _, q) in self.counts
                    if q != 1), default=0)


def parse_schema(text: str) -> OrbitSchema:
    """Parse lines "i j q_num q_den count" into a validated schema."""
    counts = {}
    for raw in text.splitlines():
        line = raw.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise SchemaError(f"bad schema line {raw!r}")
        i, j, qn, qd, n = (int(p) for p in parts)
        if qn <= 0 or qd <= 0:
            raise SchemaError(f"nonpositive ratio in {raw!r}")
        key = (i, j, Fraction(qn, qd))
        counts[key] = counts.get(key, 0) + n
    if not counts:
        raise SchemaError("empty schema")
    L = max(max(i, j) for (i, j, _) in counts)
    degrees = [sum(n for (a, _, _), n in counts.items() if a == i)
               for i in range(1, L + 1)]
    schema = OrbitSchema(L=L, degrees=degrees, counts=counts)
    schema.validate()
    return schema


def schema_from_profile(profile: LevelProfile) -> OrbitSchema:
    """The L=1 schema of a transitive model."""
    counts = {(1, 1, Fraction(q)): t for q, t in profile.entries}
    schema = OrbitSchema(L=1, degrees=[profile.degree], counts=counts,
                         base=profile.base)
    schema.validate()
    return schema


def parity_schema(profile: LevelProfile) -> OrbitSchema:
    """Two-orbit refinement by level parity; every edge must flip parity."""
    if profile.base is None:
        raise SchemaError("parity refinement needs a level structure")
    counts = {}
    for (q, t), (j, _) in zip(profile.entries, profile.lattice_entries()):
        if j % 2 == 0:
            raise SchemaError(
                f"edge with even level step {j} does not flip parity")
        counts[(1, 2, Fraction(q))] = t
        counts[(2, 1, Fraction(q))] = t
    schema = OrbitSchema(L=2, degrees=[profile.degree] * 2, counts=counts,
                         base=profile.base)
    schema.validate()
    return schema


# ---------------------------------------------------------------------------
# Matrix and eigenpair
# ---------------------------------------------------------------------------

def a_matrix(schema: OrbitSchema) -> np.ndarray:
    L = schema.L
    A = np.zeros((L, L))
    for (i, j, q), n in schema.counts.items():
        A[i - 1, j - 1] += n * float(sqrt_exact(q)) / np.sqrt(
            schema.degrees[i - 1] * schema.degrees[j - 1])
    if not np.allclose(A, A.T, rtol=0, atol=1e-13):
        raise SchemaError("matrix is not symmetric; schema violates balance")
    return A


def a_entry_exact(schema: OrbitSchema, i: int, j: int) -> QuadExt:
    """Exact a(i,j) when d_i d_j is a perfect square (else SchemaError)."""
    dd = sqrt_exact(schema.degrees[i - 1] * schema.degrees[j - 1])
    if not dd.is_rational():
        raise SchemaError("sqrt(d_i d_j) is irrational")
    acc = QuadExt(1, 0, 0)
    for (a, b, q), n in schema.counts.items():
        if a == i and b == j:
            acc = acc + n * sqrt_exact(q)
    return acc * dd.as_fraction() ** -1


@dataclass
class PerronData:
    A: np.ndarray
    rho: float
    v: np.ndarray
    pi: np.ndarray
    residual: float
    iterations: int

    def to_json(self) -> str:
        return json.dumps({
            "rho": self.rho,
            "v": self.v.tolist(),
            "pi": self.pi.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
        }, indent=2)


def _irreducible(A: np.ndarray) -> bool:
    L = len(A)
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in range(L):
            if j not in seen and (A[i, j] != 0 or A[j, i] != 0):
                seen.add(j)
                frontier.append(j)
    return len(seen) == L


def perron(A: np.ndarray, tol: float = 1e-12,
           max_iter: int = 100000) -> PerronData:
    """Dominant eigenpair of a nonnegative symmetric matrix.

    Power iteration on A + sI with s = max row sum; the shift removes the
    period-2 oscillation of bipartite-structured matrices while keeping
    the same eigenvector and shifting the eigenvalue by s.
    """
    A = np.asarray(A, dtype=float)
    if np.any(A < 0):
        raise SchemaError("matrix has negative entries")
    if not _irreducible(A):
        raise SchemaError("matrix is reducible")
    s = float(A.sum(axis=1).max())
    if s == 0:
        raise SchemaError("zero matrix")
    B = A + s * np.eye(len(A))
    v = np.ones(len(A)) / np.sqrt(len(A))
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = B @ v
        lam = float(np.linalg.norm(w))
        v = w / lam
        resid = float(np.linalg.norm(B @ v - lam * v))
        if resid <= tol:
            break
    else:
        raise SchemaError("power iteration did not converge")
    rho = lam - s
    if np.any(v <= 0):
        raise SchemaError("eigenvector not strictly positive")
    residual = float(np.linalg.norm(A @ v - rho * v))
    pi = v ** 2
    pi = pi / pi.sum()
    return PerronData(A=A, rho=rho, v=v, pi=pi, residual=residual,
                      iterations=it)


# ---------------------------------------------------------------------------
# Stationarity and mean-zero increment
# ---------------------------------------------------------------------------

def transfer_matrix(schema: OrbitSchema, perron_data: PerronData) -> np.ndarray:
    """P_h(i,j) = sum_q N_{i,j,q} sqrt(q) v_j / (rho v_i sqrt(d_i d_j))."""
    L, v, rho = schema.L, perron_data.v, perron_data.rho
    P = np.zeros((L, L))
    for (i, j, q), n in schema.counts.items():
        P[i - 1, j - 1] += (n * float(sqrt_exact(q)) * v[j - 1]
                            / (rho * v[i - 1] * np.sqrt(
                                schema.degrees[i - 1] * schema.degrees[j - 1])))
    return P


def stationary_and_mean_checks(schema: OrbitSchema,
                               perron_data: PerronData) -> dict:
    P = transfer_matrix(schema, perron_data)
    pi = perron_data.pi
    row_defect = float(np.abs(P.sum(axis=1) - 1).max())
    stat_resid = float(np.abs(pi @ P - pi).max())
    mean = 0.0
    pair_cancellation = True
    witnesses = []
    for (i, j, q), n in schema.counts.items():
        w = (n * float(sqrt_exact(q)) * perron_data.v[i - 1]
             * perron_data.v[j - 1]
             / (perron_data.rho * np.sqrt(schema.degrees[i - 1]
                                          * schema.degrees[j - 1])))
        mean += w * float(np.log(float(q)))
        # exact cancellation partner: coefficient of (j, i, 1/q) must
        # carry the same sqrt(q)-weight, which reduces to count balance
        mirror = schema.counts.get((j, i, 1 / q), 0)
        if Fraction(mirror) != q * n:
            pair_cancellation = False
            witnesses.append((i, j, q))
    return {
        "row_defect": row_defect,
        "stationarity_residual": stat_resid,
        "mean_increment": mean,
        "pairwise_cancellation_exact": pair_cancellation,
        "witnesses": witnesses,
    }


# ---------------------------------------------------------------------------
# Induced chain on Omega = {(i, j, q)} and its ballot DPs
# ---------------------------------------------------------------------------

@dataclass
class MarkovAdditiveChain:
    states: list              # (i, j, q) triples with N > 0
    initial: list             # probabilities (float or QuadExt)
    trans: list               # trans[s][s'] probability
    steps: list               # lattice increment attached to entering a state
    t0_lattice: int
    exact: bool

    def validate(self, tol: float = 1e-12) -> None:
        tot = sum(float(p) for p in self.initial)
        if abs(tot - 1) > tol:
            raise SchemaError(f"initial law mass {tot}")
        for s, row in enumerate(self.trans):
            rs = sum(float(p) for p in row)
            if abs(rs - 1) > tol:
                raise SchemaError(f"row {s} sums to {rs}")

    def irreducible_on_support(self) -> bool:
        n = len(self.states)
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in range(n):
                if j not in seen and (float(self.trans[i][j]) > 0
                                      or float(self.trans[j][i]) > 0):
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == n


def induced_chain(schema: OrbitSchema, perron_data: PerronData,
                  exact: bool = False) -> MarkovAdditiveChain:
    """Chain on neighbor triples carrying the level increment log q.

    Exact mode is available when the eigenvector is uniform, which is
    checked structurally (all degrees equal and identical formal rows);
    transition weights then live in the quadratic field of the ratios.
    """
    states = sorted((i, j, q) for (i, j, q), n in schema.counts.items() if n > 0)
    if exact:
        if not _uniform_eigenvector(schema):
            raise SchemaError("exact mode needs a structurally uniform "
                              "eigenvector")
        d = schema.degrees[0]
        acc = QuadExt(1, 0, 0)
        for (i, j, q), n in schema.counts.items():
            if i == 1:
                acc = acc + n * sqrt_exact(q)
        rho_ex = acc * Fraction(1, d)
        inv = rho_ex.inverse()
        L = schema.L
        # initial law: sqrt(q) N v_i v_j / (rho sqrt(d_i d_j)); v_i = 1/sqrt(L)
        initial = [schema.counts[s] * sqrt_exact(s[2]) * inv * Fraction(1, d * L)
                   for s in states]
        trans = []
        for (i, j, q) in states:
            row = []
            for (i2, j2, q2) in states:
                if i2 != j:
                    row.append(QuadExt(1, 0, 0))
                else:
                    row.append(schema.counts[(i2, j2, q2)]
                               * sqrt_exact(q2) * inv * Fraction(1, d))
            trans.append(row)
    else:
        v, rho = perron_data.v, perron_data.rho
        initial = []
        for (i, j, q) in states:
            n = schema.counts[(i, j, q)]
            initial.append(n * float(sqrt_exact(q)) * v[i - 1] * v[j - 1]
                           / (rho * np.sqrt(schema.degrees[i - 1]
                                            * schema.degrees[j - 1])))
        trans = []
        for (i, j, q) in states:
            row = []
            for (i2, j2, q2) in states:
                if i2 != j:
                    row.append(0.0)
                else:
                    n2 = schema.counts[(i2, j2, q2)]
                    row.append(n2 * float(sqrt_exact(q2)) * v[j2 - 1]
                               / (v[j - 1] * rho
                                  * np.sqrt(schema.degrees[j - 1]
                                            * schema.degrees[j2 - 1])))
            trans.append(row)
    steps = [schema.lattice_step(q) for (_, _, q) in states]
    chain = MarkovAdditiveChain(states=states, initial=initial, trans=trans,
                                steps=steps, t0_lattice=schema.t0_lattice,
                                exact=exact)
    chain.validate()
    return chain


def _uniform_eigenvector(schema: OrbitSchema) -> bool:
    if len(set(schema.degrees)) != 1:
        return False
    rows = []
    for i in range(1, schema.L + 1):
        row: dict = {}
        for (a, _, q), n in schema.counts.items():
            if a == i:
                row[q] = row.get(q, 0) + n
        rows.append(row)
    return all(r == rows[0] for r in rows)


def _zero_like(p):
    if isinstance(p, QuadExt):
        return QuadExt(p.d, 0, 0)
    return 0.0


def mb_ballot_probability(chain: MarkovAdditiveChain, n: int, r: int):
    """P[Y_j > 0 for j = 1..n-1, Y_n in window r] for the additive level."""
    t0 = chain.t0_lattice
    lo, hi = r * t0, (r + 1) * t0
    dist = {}
    for s, p in enumerate(chain.initial):
        if float(p) == 0:
            continue
        key = (s, chain.steps[s])
        dist[key] = dist[key] + p if key in dist else p
    if n > 1:
        dist = {k: v for k, v in dist.items() if k[1] > 0}
    for step in range(2, n + 1):
        nd = {}
        for (s, pos), mass in dist.items():
            for s2, p in enumerate(chain.trans[s]):
                if float(p) == 0:
                    continue
                key = (s2, pos + chain.steps[s2])
                contrib = mass * p
                nd[key] = nd[key] + contrib if key in nd else contrib
        if step < n:
            nd = {k: v for k, v in nd.items() if k[1] > 0}
        dist = nd
    acc = None
    for (s, pos), mass in dist.items():
        if lo <= pos < hi:
            acc = mass if acc is None else acc + mass
    if acc is None:
        return _zero_like(chain.initial[0])
    return acc


def mb_max_and_return(chain: MarkovAdditiveChain, n: int, r: int):
    """P[max_{0<=j<=n} Y_j in window r, Y_n = 0] for the additive level."""
    t0 = chain.t0_lattice
    lo, hi = r * t0, (r + 1) * t0
    dist = {}
    for s, p in enumerate(chain.initial):
        if float(p) == 0:
            continue
        pos = chain.steps[s]
        if pos >= hi:
            continue
        cat = 1 if (r == 0 or pos >= lo) else 0
        key = (s, pos, cat)
        dist[key] = dist[key] + p if key in dist else p
    for _ in range(2, n + 1):
        nd = {}
        for (s, pos, cat), mass in dist.items():
            for s2, p in enumerate(chain.trans[s]):
                if float(p) == 0:
                    continue
                npos = pos + chain.steps[s2]
                if npos >= hi:
                    continue
                ncat = 1 if (cat == 1 or npos >= lo) else 0
                key = (s2, npos, ncat)
                contrib = mass * p
                nd[key] = nd[key] + contrib if key in nd else contrib
        dist = nd
    acc = None
    for (s, pos, cat), mass in dist.items():
        if pos == 0 and cat == 1:
            acc = mass if acc is None else acc + mass
    if acc is None:
        return _zero_like(chain.initial[0])
    return acc


def mb_hitting_time_law(chain: MarkovAdditiveChain, r: int, n_max: int):
    """P[tau_r = k], tau_r the first time the additive level reaches r*t0."""
    if r < 1:
        raise SchemaError("need r >= 1")
    barrier = r * chain.t0_lattice
    zero = _zero_like(chain.initial[0])
    out = [zero]
    dist = {}
    absorbed = zero
    for s, p in enumerate(chain.initial):
        if float(p) == 0:
            continue
        pos = chain.steps[s]
        if pos >= barrier:
            absorbed = absorbed + p
        else:
            key = (s, pos)
            dist[key] = dist[key] + p if key in dist else p
    out.append(absorbed)
    for _ in range(2, n_max + 1):
        nd = {}
        absorbed = zero
        for (s, pos), mass in dist.items():
            for s2, p in enumerate(chain.trans[s]):
                if float(p) == 0:
                    continue
                npos = pos + chain.steps[s2]
                contrib = mass * p
                if npos >= barrier:
                    absorbed = absorbed + contrib
                else:
                    key = (s2, npos)
                    nd[key] = nd[key] + contrib if key in nd else contrib
        out.append(absorbed)
        dist = nd
    return out
