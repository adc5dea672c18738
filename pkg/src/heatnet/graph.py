"""Communication graph, Laplacian, spectrum and the Laplacian norm inequalities.

Agent indices are 1-based at the API boundary (edge lists, graph files) and
0-based inside every matrix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from heatnet.errors import (
    DisconnectedGraph,
    DuplicateEdge,
    EigensolverFailure,
    IndexOutOfRange,
    NotZeroSum,
    ParseError,
    SelfLoop,
    ValidationError,
)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ZERO_SUM_TOL = 1e-9
RESIDUAL_SLACK = 1e-9

# Ten-agent network used by all shipped presets (one 6-cycle plus pendant nodes).
TEN_AGENT_EDGES = (
    (1, 4), (1, 5), (2, 3), (3, 6), (4, 10),
    (2, 8), (6, 7), (9, 10), (4, 8), (6, 10),
)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Topology:
    agent_count: int
    edges: frozenset  # of (i, j) with 1 <= i < j <= agent_count

    def degrees(self):
        deg = [0] * self.agent_count
        for i, j in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return tuple(deg)

    def sorted_edges(self):
        return sorted(self.edges)


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]

    def __matmul__(self, other):
        return self.entries @ other

    def induced_l1_norm(self):
        """Max column absolute sum."""
        return float(np.abs(self.entries).sum(axis=0).max())

    def entrywise_l1_norm(self):
        return float(np.abs(self.entries).sum())


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    eigenvalues: np.ndarray
    lambda2: float
    lambdaN: float
    sweeps: int = 0


@dataclass(frozen=True, eq=False)
class CenteringMatrix:
    entries: np.ndarray

    def __matmul__(self, other):
        return self.entries @ other


def build_topology(agent_count, edges):
    """Validate an undirected, unweighted, connected edge list (1-based indices)."""
    if int(agent_count) != agent_count or agent_count < 2:
        raise ValidationError(f"agent_count must be an integer >= 2, got {agent_count!r}")
    agent_count = int(agent_count)
    seen = set()
    for edge in edges:
        if len(edge) != 2:
            raise ValidationError(f"edge {edge!r} is not a pair (weighted graphs are not supported)")
        i, j = (int(v) for v in edge)
        if not (1 <= i <= agent_count and 1 <= j <= agent_count):
            raise IndexOutOfRange(f"edge ({i}, {j}) outside [1, {agent_count}]")
        if i == j:
            raise SelfLoop(f"self-loop at agent {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"edge {key} listed more than once")
        seen.add(key)

    adj = [[] for _ in range(agent_count)]
    for i, j in seen:
        adj[i - 1].append(j - 1)
        adj[j - 1].append(i - 1)
    visited = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in visited:
                visited.add(w)
                queue.append(w)
    if len(visited) != agent_count:
        missing = sorted(set(range(agent_count)) - visited)
        raise DisconnectedGraph(
            f"graph is disconnected; agents {[m + 1 for m in missing]} unreachable from agent 1"
        )
    return Topology(agent_count, frozenset(seen))


def ten_agent_topology():
    return build_topology(10, TEN_AGENT_EDGES)


def complete_topology(n):
    return build_topology(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def path_topology(n):
    return build_topology(n, [(i, i + 1) for i in range(1, n)])


def random_topology(agent_count, rng, extra_edge_prob=0.2):
    """Random spanning tree plus independent extra edges; always connected."""
    order = rng.permutation(agent_count) + 1
    edges = set()
    for k in range(1, agent_count):
        parent = order[rng.integers(0, k)]
        child = order[k]
        edges.add((min(parent, child), max(parent, child)))
    for i in range(1, agent_count + 1):
        for j in range(i + 1, agent_count + 1):
            if (i, j) not in edges and rng.random() < extra_edge_prob:
                edges.add((i, j))
    return build_topology(agent_count, sorted(edges))


def read_graph_file(path):
    """Parse ``N`` on the first line then one ``i j`` pair per line.

    Blank lines and ``#`` comments are ignored.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read graph file {path}: {exc}") from exc
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParseError(f"{path}: empty graph file")
    try:
        n = int(lines[0])
        edges = []
        for line in lines[1:]:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{path}: expected 'i j', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return build_topology(n, edges)


def write_graph_file(topology, path):
    lines = [str(topology.agent_count)] + [f"{i} {j}" for i, j in topology.sorted_edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def laplacian(topology):
    n = topology.agent_count
    L = np.zeros((n, n))
    for i, j in topology.edges:
        L[i - 1, j - 1] = L[j - 1, i - 1] = -1.0
        L[i - 1, i - 1] += 1.0
        L[j - 1, j - 1] += 1.0
    return LaplacianMatrix(_frozen(L))


def jacobi_eigenvalues(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.

    Stops once the off-diagonal Frobenius norm falls below ``tol`` times the
    full Frobenius norm. Returns ``(eigenvalues, sweeps)``.
    """
    A = np.array(a, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("jacobi_eigenvalues needs a square symmetric matrix")
    A = 0.5 * (A + A.T)
    scale = np.linalg.norm(A)
    if scale == 0.0 or n == 1:
        return np.sort(np.diag(A)), 0

    mask = ~np.eye(n, dtype=bool)

    def off(M):
        # summed directly: |M|_F^2 - |diag|^2 cancels below ~1e-8 |M|
        return np.sqrt(np.sum(M[mask] ** 2))

    for sweep in range(1, max_sweeps + 1):
        if off(A) <= tol * scale:
            return np.sort(np.diag(A)), sweep - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = A[q, p] = 0.0
    if off(A) <= tol * scale:
        return np.sort(np.diag(A)), max_sweeps
    raise EigensolverFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def spectrum(L):
    entries = L.entries if isinstance(L, LaplacianMatrix) else np.asarray(L, dtype=float)
    eig, sweeps = jacobi_eigenvalues(entries)
    if isinstance(L, LaplacianMatrix) and abs(eig[0]) > 1e-9:
        raise EigensolverFailure(f"smallest Laplacian eigenvalue {eig[0]:.3e} is not zero")
    if isinstance(L, LaplacianMatrix):
        eig[0] = 0.0
    return SpectralSummary(_frozen(eig), float(eig[1]), float(eig[-1]), sweeps)


def centering(agent_count):
    if agent_count < 2:
        raise ValidationError("centering matrix needs N >= 2")
    n = agent_count
    return CenteringMatrix(_frozen(np.eye(n) - np.ones((n, n)) / n))


@dataclass(frozen=True)
class LaplacianResiduals:
    """One-sided slacks of the zero-sum Laplacian inequalities; all should be >= 0."""

    quad_upper: float   # lambda_N |x|^2 - x'Lx
    quad_lower: float   # x'Lx - lambda_2 |x|^2
    sq_upper: float     # lambda_N^2 |x|^2 - |Lx|^2
    sq_lower: float     # |Lx|^2 - lambda_2^2 |x|^2
    l1_lower: float     # |Lx|_1 - lambda_2 |x|_2
    norm_chain: float   # min(|x|_1 - |x|_2, sqrt(N)|x|_2 - |x|_1)

    def as_dict(self):
        return dict(self.__dict__)

    def minimum(self):
        return min(self.__dict__.values())


def lemma2_residuals(L, spec, x):
    x = np.asarray(x, dtype=float)
    n2 = float(np.linalg.norm(x))
    if abs(x.sum()) > ZERO_SUM_TOL * max(1.0, n2):
        raise NotZeroSum(f"1'x = {x.sum():.3e} is not zero")
    Lx = L.entries @ x
    sq = n2 * n2
    xLx = float(x @ Lx)
    Lx2 = float(Lx @ Lx)
    l1 = float(np.abs(x).sum())
    lam2, lamN = spec.lambda2, spec.lambdaN
    return LaplacianResiduals(
        quad_upper=lamN * sq - xLx,
        quad_lower=xLx - lam2 * sq,
        sq_upper=lamN**2 * sq - Lx2,
        sq_lower=Lx2 - lam2**2 * sq,
        l1_lower=float(np.abs(Lx).sum()) - lam2 * n2,
        norm_chain=min(l1 - n2, np.sqrt(x.size) * n2 - l1),
    )


def holder_young_residuals(x, y, p):
    """Slacks of |x'y| <= |x|_p |y|_q <= |x|_p^p/p + |y|_q^q/q.

    ``p`` is 1 (paired with q = inf) or 2. The Young slack is ``None`` for p = 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if p == 1:
        xp, yq = np.abs(x).sum(), np.abs(y).max()
        return xp * yq - abs(x @ y), None
    if p == 2:
        xp, yq = np.linalg.norm(x), np.linalg.norm(y)
        return xp * yq - abs(x @ y), xp**2 / 2 + yq**2 / 2 - xp * yq
    raise ValueError("p must be 1 or 2")
