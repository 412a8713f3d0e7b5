"""Independent oracles the tests check the library against.

Everything here recomputes expected values by routes that share no code
with the library paths under test: explicit 3x3 matrix arithmetic, closed
form counting, and exhaustive simple-path enumeration.
"""

import numpy as np

from fpplab import groups, weights


def heisenberg_matrix(g):
    u, v, w = g
    return np.array([[1, u, w], [0, 1, v], [0, 0, 1]], dtype=object)


def matrix_to_triple(m):
    return (int(m[0, 1]), int(m[1, 2]), int(m[0, 2]))


def matrix_multiply(g, h):
    return matrix_to_triple(heisenberg_matrix(g) @ heisenberg_matrix(h))


def matrix_invert(g):
    m = heisenberg_matrix(g).astype(np.float64)
    inv = np.linalg.inv(m)
    out = np.rint(inv).astype(np.int64)
    assert np.all(np.abs(inv - out) < 1e-9)
    return (int(out[0, 1]), int(out[1, 2]), int(out[0, 2]))


def matrix_commutator(g, h):
    return matrix_multiply(matrix_multiply(g, h),
                           matrix_multiply(matrix_invert(g), matrix_invert(h)))


def lattice_ball_count(d, r):
    """Exact |{x in Z^d : |x|_1 <= r}| by axis-wise convolution."""
    counts = [1] + [0] * r
    for _ in range(d):
        counts = [counts[t] + 2 * sum(counts[t - v] for v in range(1, t + 1))
                  for t in range(r + 1)]
    return sum(counts)


def tree_ball_count(r_reg, radius):
    if radius == 0:
        return 1
    return 1 + r_reg * ((r_reg - 1) ** radius - 1) // (r_reg - 2)


def brute_force_times_z2(assignment, origin, max_len):
    """Minimal path weight from origin to every vertex, over all simple
    paths of at most max_len edges in Z^2, by exhaustive DFS."""
    spec = groups.integer_lattice(2)
    best = {origin: 0.0}

    def visit(vertex, time, visited, edges_left):
        if edges_left == 0:
            return
        for step in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (vertex[0] + step[0], vertex[1] + step[1])
            if nxt in visited:
                continue
            t = time + weights.edge_weight(spec, assignment, vertex, nxt)
            known = best.get(nxt)
            if known is None or t < known:
                best[nxt] = t
            visited.add(nxt)
            visit(nxt, t, visited, edges_left - 1)
            visited.discard(nxt)

    visit(origin, 0.0, {origin}, max_len)
    return best


def tree_path_sum(spec, assignment, x, y):
    """Weight of the unique reduced path, built letter by letter."""
    g = groups.multiply(spec, groups.invert(spec, x), y)
    total = 0.0
    here = x
    for letter in g:
        nxt = groups.multiply(spec, here, (letter,))
        total += weights.edge_weight(spec, assignment, here, nxt)
        here = nxt
    return total
