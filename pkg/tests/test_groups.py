import numpy as np
import pytest

from fpplab import groups
from fpplab.errors import BudgetError, HypothesisError

import oracles

H = groups.heisenberg()
Z1 = groups.integer_lattice(1)
Z2 = groups.integer_lattice(2)
T3 = groups.regular_tree(3)
PROD = groups.product(T3, Z1)
A = (1, 0, 0)
B = (0, 1, 0)
C = (0, 0, 1)

ALL_SPECS = [Z2, H, T3, PROD]


def sample_ball(spec, radius, count, seed):
    members = list(groups.word_ball(spec, groups.identity(spec), radius).members)
    members.sort(key=lambda g: groups.encode(spec, g))
    rng = np.random.default_rng(seed)
    return [members[i] for i in rng.integers(0, len(members), size=count)]


# --- multiplication, inversion, commutators ---------------------------------

def test_heisenberg_product_matches_matrix_oracle():
    assert groups.multiply(H, A, B) == oracles.matrix_multiply(A, B) == (1, 1, 1)
    assert groups.multiply(H, B, A) == oracles.matrix_multiply(B, A) == (1, 1, 0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = tuple(int(v) for v in rng.integers(-6, 7, size=3))
        h = tuple(int(v) for v in rng.integers(-6, 7, size=3))
        assert groups.multiply(H, g, h) == oracles.matrix_multiply(g, h)


def test_identity_law():
    for spec in ALL_SPECS:
        e = groups.identity(spec)
        for g in sample_ball(spec, 3, 10, 1):
            assert groups.multiply(spec, g, e) == g
            assert groups.multiply(spec, e, g) == g


def test_lattice_product_is_addition():
    assert groups.multiply(Z2, (1, 0), (0, 1)) == (1, 1)


def test_inversion():
    assert groups.invert(H, (1, 1, 1)) == (-1, -1, 0) == oracles.matrix_invert((1, 1, 1))
    assert groups.invert(H, (0, 0, 0)) == (0, 0, 0)
    assert groups.invert(T3, (0, 1)) == (1, 0)
    for spec in ALL_SPECS:
        e = groups.identity(spec)
        for g in sample_ball(spec, 3, 10, 2):
            assert groups.multiply(spec, g, groups.invert(spec, g)) == e


def test_commutator_convention():
    assert groups.commutator(H, A, B) == C == oracles.matrix_commutator(A, B)
    assert groups.commutator(H, (2, 3, 1), (2, 3, 1)) == (0, 0, 0)
    a3 = groups.power(H, A, 3)
    b2 = groups.power(H, B, 2)
    assert groups.commutator(H, a3, b2) == (0, 0, 6)


def test_group_axioms_sampled_triples():
    for spec in ALL_SPECS:
        samples = sample_ball(spec, 3, 12, 3)
        for i in range(0, len(samples) - 2):
            g, h, k = samples[i], samples[i + 1], samples[i + 2]
            left = groups.multiply(spec, groups.multiply(spec, g, h), k)
            right = groups.multiply(spec, g, groups.multiply(spec, h, k))
            assert left == right


# --- word balls and distances ------------------------------------------------

def test_heisenberg_ball_radius_one():
    ball = groups.word_ball(H, (0, 0, 0), 1)
    assert set(ball.members) == {(0, 0, 0), A, (-1, 0, 0), B, (0, -1, 0)}


def test_heisenberg_c_at_distance_four():
    ball = groups.word_ball(H, (0, 0, 0), 4)
    assert ball.members[C] == 4


def test_tree_ball_closed_form():
    for n in range(11):
        assert len(groups.word_ball(T3, (), n)) == oracles.tree_ball_count(3, n)


def test_lattice_ball_closed_form():
    for r in range(8):
        assert len(groups.word_ball(Z2, (0, 0), r)) == oracles.lattice_ball_count(2, r)


def test_ball_distance_lipschitz():
    ball = groups.word_ball(H, (0, 0, 0), 4)
    for g, dist in ball.members.items():
        for s in H.generators:
            h = groups.multiply(H, g, s)
            if h in ball.members:
                assert abs(ball.members[h] - dist) <= 1


def test_word_distance_examples():
    assert groups.word_distance(H, (2, 1, 0), (2, 1, 0)) == 0
    assert groups.word_distance(Z2, (0, 0), (3, 4)) == 7


def test_central_power_distance_bound():
    # d(e, c^k) <= 4*ceil(sqrt(k)) + 2, checked for k <= 100 via one packed
    # BFS table (distances looked up exactly)
    table = groups.ball_table(H, 44)
    ks = np.arange(1, 101, dtype=np.int64)
    coords = np.stack([np.zeros_like(ks), np.zeros_like(ks), ks], axis=1)
    dists = table.lookup(groups.pack_heisenberg(coords))
    assert np.all(dists >= 0)
    bound = 4 * np.ceil(np.sqrt(ks)) + 2
    assert np.all(dists <= bound)
    # spot-check the table against the bidirectional search
    for k in (1, 4, 9, 10):
        assert groups.word_distance(H, (0, 0, 0), (0, 0, int(k))) == dists[k - 1]


def test_ball_distances_match_word_distance_radius_four():
    for spec in (Z2, H, T3):
        ball = groups.word_ball(spec, groups.identity(spec), 4)
        for g, dist in ball.members.items():
            assert groups.word_distance(spec, groups.identity(spec), g) == dist


def test_left_invariance_sampled():
    for spec in ALL_SPECS:
        shifts = sample_ball(spec, 2, 4, 5)
        pairs = sample_ball(spec, 3, 8, 6)
        for k in shifts:
            for g, h in zip(pairs[::2], pairs[1::2]):
                kg = groups.multiply(spec, k, g)
                kh = groups.multiply(spec, k, h)
                assert groups.word_distance(spec, kg, kh) == \
                    groups.word_distance(spec, g, h)


def test_pair_distance_closed_forms_match_bfs():
    for spec in (Z2, T3, PROD):
        for g, h in zip(sample_ball(spec, 3, 10, 7)[::2],
                        sample_ball(spec, 3, 10, 8)[1::2]):
            assert groups.pair_distance(spec, g, h) == groups.word_distance(spec, g, h)
    # Heisenberg w = 0 shortcut
    assert groups.word_length_exact(H, (3, -2, 0)) == 5
    assert groups.word_distance(H, (0, 0, 0), (3, -2, 0)) == 5


# --- packed tables -----------------------------------------------------------

def test_packed_table_matches_scalar_bfs():
    for spec, radius in ((H, 6), (Z2, 6), (Z1, 9)):
        table = groups.ball_table(spec, radius)
        ball = groups.word_ball(spec, groups.identity(spec), radius)
        assert len(table) == len(ball)
        for row, dist in zip(table.coords, table.dists):
            assert ball.members[tuple(int(v) for v in row)] == dist


def test_ball_cap_errors():
    with pytest.raises(BudgetError, match="cap"):
        groups.word_ball(T3, (), 20, max_elements=100)
    with pytest.raises(BudgetError):
        groups.ball_table(groups.integer_lattice(3), 400, max_elements=1000)
    groups._TABLE_CACHE.clear()


# --- encoding ----------------------------------------------------------------

def test_canonical_key_round_trip_radius_six():
    for spec in (Z2, H, T3, PROD):
        radius = 6 if spec.kind != groups.PRODUCT else 4
        ball = groups.word_ball(spec, groups.identity(spec), radius)
        seen = set()
        for g in ball.members:
            enc = groups.encode(spec, g)
            assert groups.decode(spec, enc) == g
            seen.add(enc)
        assert len(seen) == len(ball.members)


def test_encode_rejects_out_of_range():
    with pytest.raises(BudgetError):
        groups.encode(Z1, (2**63,))


# --- dilations, gauge, embedding, abelianization -----------------------------

def test_dilation():
    assert groups.dilate(2.0, (1.0, 1.0, 1.0)) == (2.0, 2.0, 4.0)
    assert groups.dilate(1.0, (0.5, -2.0, 3.0)) == (0.5, -2.0, 3.0)
    rng = np.random.default_rng(9)
    for _ in range(20):
        s, t = rng.uniform(0.2, 3.0, size=2)
        p = tuple(rng.normal(size=3))
        left = groups.dilate(s, groups.dilate(t, p))
        right = groups.dilate(s * t, p)
        assert np.allclose(left, right, rtol=1e-12)
    with pytest.raises(HypothesisError):
        groups.dilate(0.0, (1.0, 1.0, 1.0))


def test_homogeneous_gauge():
    assert groups.homogeneous_gauge((1.0, 1.0, 0.0)) == 2.0
    assert groups.homogeneous_gauge((0.0, 0.0, 4.0)) == 2.0
    p = (1.0, 1.0, 0.0)
    assert groups.homogeneous_gauge(groups.dilate(3.0, p)) == 6.0


def test_gauge_dilation_homogeneity_sampled():
    rng = np.random.default_rng(10)
    for _ in range(30):
        p = tuple(rng.normal(size=3))
        t = float(rng.uniform(0.1, 5.0))
        value = groups.homogeneous_gauge(groups.dilate(t, p))
        assert abs(value - t * groups.homogeneous_gauge(p)) <= 1e-12 * max(1.0, value)


def test_embedding():
    assert groups.embed_heisenberg(H, (0, 0, 0)) == (0.0, 0.0, 0.0)
    assert groups.embed_heisenberg(H, A) == (1.0, 0.0, 0.0)
    assert groups.embed_heisenberg(H, C) == (0.0, 0.0, 1.0)
    with pytest.raises(HypothesisError):
        groups.embed_heisenberg(Z2, (0, 0))


def test_embedding_is_homomorphism():
    rng = np.random.default_rng(11)
    for _ in range(25):
        g = tuple(int(v) for v in rng.integers(-5, 6, size=3))
        h = tuple(int(v) for v in rng.integers(-5, 6, size=3))
        lhs = groups.embed_heisenberg(H, groups.multiply(H, g, h))
        rhs = groups.heis_real_mul(groups.embed_heisenberg(H, g),
                                   groups.embed_heisenberg(H, h))
        assert lhs == rhs


def test_dilation_is_automorphism_sampled():
    rng = np.random.default_rng(12)
    for _ in range(20):
        p = tuple(rng.normal(size=3))
        q = tuple(rng.normal(size=3))
        t = float(rng.uniform(0.3, 2.0))
        lhs = groups.dilate(t, groups.heis_real_mul(p, q))
        rhs = groups.heis_real_mul(groups.dilate(t, p), groups.dilate(t, q))
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_abelianize():
    assert groups.abelianize(H, C) == (0, 0)
    assert groups.abelianize(H, groups.multiply(H, A, B)) == (1, 1)
    assert groups.abelianize(Z2, (4, -1)) == (4, -1)
    rng = np.random.default_rng(13)
    for _ in range(20):
        g = tuple(int(v) for v in rng.integers(-4, 5, size=3))
        h = tuple(int(v) for v in rng.integers(-4, 5, size=3))
        lhs = groups.abelianize(H, groups.multiply(H, g, h))
        rhs = tuple(x + y for x, y in
                    zip(groups.abelianize(H, g), groups.abelianize(H, h)))
        assert lhs == rhs
    with pytest.raises(HypothesisError):
        groups.abelianize(T3, (0,))


# --- center growth -----------------------------------------------------------

def test_center_growth_heisenberg_small():
    assert groups.center_growth(H, 4) == 3      # e, c, c^-1
    assert groups.center_growth(H, 8) >= 3


def test_center_growth_lattice_closed_form():
    for n in (2, 5, 9):
        assert groups.center_growth(Z2, n) == 2 * n * n + 2 * n + 1
    with pytest.raises(HypothesisError):
        groups.center_growth(T3, 3)


def test_mismatched_kinds_error():
    with pytest.raises(HypothesisError):
        groups.multiply(Z2, (0, 0), (0, 0, 0))
    with pytest.raises(HypothesisError):
        groups.multiply(H, (0, 0), (0, 0, 0))


def test_tree_word_validation():
    groups.validate_element(T3, (0, 1, 0))
    with pytest.raises(HypothesisError):
        groups.validate_element(T3, (0, 0))
    with pytest.raises(HypothesisError):
        groups.validate_element(T3, (0, 5))
