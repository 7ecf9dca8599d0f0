import math

import numpy as np
import pytest

from domainmix.align import AlignedFeatures, DomainCenter
from domainmix.boundary import (
    BoundarySet,
    CandidateSet,
    DistanceTable,
    boundary_set,
    center_distances,
    confidence_scores,
    pairwise_margin,
    select_boundaries,
    select_candidates,
)
from domainmix.errors import ValidationError


def wrap(matrix, domain_id=0):
    matrix = np.asarray(matrix, dtype=np.float64)
    return AlignedFeatures(domain_id, matrix, matrix.shape[1])


def centers_of(vectors):
    return [DomainCenter(i, np.asarray(v, dtype=np.float64)) for i, v in enumerate(vectors)]


def lattice(rng, shape, span=16, step=8):
    """Dyadic-rational draws: keeps distance arithmetic exact in float64."""
    return rng.integers(-span * step, span * step + 1, size=shape) / step


# --- independent brute-force pipeline (plain python, no numpy reductions) ---

def oracle_boundaries(aligned_mats, center_vecs, rho):
    n_domains = len(aligned_mats)
    out = []
    for k in range(n_domains):
        x = aligned_mats[k]
        n = len(x)
        cand = []
        for m in range(n_domains):
            if m == k:
                continue
            margins = []
            for i in range(n):
                sk = 0.0
                sm = 0.0
                for t in range(len(center_vecs[k])):
                    sk += (x[i][t] - center_vecs[k][t]) ** 2
                    sm += (x[i][t] - center_vecs[m][t]) ** 2
                margins.append(abs(math.sqrt(sk) - math.sqrt(sm)))
            lo, hi = min(margins), max(margins)
            if hi == lo:
                conf = [1.0] * n
            else:
                conf = [1.0 - (mg - lo) / (hi - lo) for mg in margins]
            count = math.ceil(rho * n)
            order = sorted(range(n), key=lambda i: (-conf[i], i))
            cand.append(set(order[:count]))
        inter = set.intersection(*cand)
        fallback = not inter
        chosen = set.union(*cand) if fallback else inter
        out.append((sorted(chosen), fallback))
    return out


def test_distance_trivials():
    c = centers_of([[1.0, 2.0], [0.0, 0.0]])
    x = wrap([[1.0, 2.0], [2.0, 2.0]])
    table = center_distances(x, c)
    assert table.matrix[0, 0] == 0.0
    assert table.matrix[1, 0] == 1.0  # center + e1


def test_distance_loop_oracle():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(20, 5))
    vecs = [rng.normal(size=5) for _ in range(3)]
    table = center_distances(wrap(x), centers_of(vecs))
    for i in range(20):
        for k in range(3):
            want = math.sqrt(sum((x[i, t] - vecs[k][t]) ** 2 for t in range(5)))
            assert abs(table.matrix[i, k] - want) < 1e-10


def test_distance_dimension_mismatch():
    with pytest.raises(ValidationError):
        center_distances(wrap(np.ones((2, 3))), centers_of([[0.0, 0.0]]))


def test_distance_center_order_enforced():
    cs = centers_of([[0.0], [1.0]])
    cs[0], cs[1] = cs[1], cs[0]
    with pytest.raises(ValidationError):
        center_distances(wrap(np.ones((2, 1))), cs)


def test_margin_trivials():
    table = DistanceTable(0, np.array([[2.0, 2.0, 5.0], [1.0, 3.0, 0.0]]))
    np.testing.assert_array_equal(pairwise_margin(table, 0, 1), [0.0, 2.0])
    np.testing.assert_array_equal(pairwise_margin(table, 1, 2), [3.0, 3.0])


def test_margin_loop_oracle():
    rng = np.random.default_rng(5)
    table = DistanceTable(0, np.abs(rng.normal(size=(15, 4))))
    got = pairwise_margin(table, 1, 3)
    for i in range(15):
        assert got[i] == abs(table.matrix[i, 1] - table.matrix[i, 3])


def test_margin_same_domain_rejected():
    table = DistanceTable(0, np.ones((3, 2)))
    with pytest.raises(ValidationError):
        pairwise_margin(table, 1, 1)


def test_confidence_endpoints():
    np.testing.assert_allclose(confidence_scores([0.0, 2.0, 4.0]), [1.0, 0.5, 0.0])


def test_confidence_degenerate_all_ones():
    np.testing.assert_array_equal(confidence_scores([3.0, 3.0, 3.0]), [1.0, 1.0, 1.0])


def test_confidence_loop_oracle():
    rng = np.random.default_rng(7)
    margins = rng.uniform(0, 10, size=50)
    got = confidence_scores(margins)
    lo, hi = margins.min(), margins.max()
    for i in range(50):
        want = 1.0 - (margins[i] - lo) / (hi - lo)
        assert abs(got[i] - want) < 1e-12
    assert got.min() >= 0.0 and got.max() <= 1.0


def test_select_candidates_ceil_and_ties():
    np.testing.assert_array_equal(
        select_candidates([0.9, 0.1, 0.5], 0.34), [0, 2]
    )
    np.testing.assert_array_equal(
        select_candidates([0.2, 0.4], 0.99), [0, 1]
    )
    # all equal: ascending-id tie-break
    np.testing.assert_array_equal(
        select_candidates([0.5, 0.5, 0.5, 0.5], 0.5), [0, 1]
    )


def test_select_candidates_rho_bounds():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValidationError):
            select_candidates([0.5, 0.5], bad)


def make_cs(ids, conf=None, other=1):
    ids = np.array(sorted(ids), dtype=np.int64)
    if conf is None:
        conf = np.ones(len(ids))
    return CandidateSet(0, other, ids, np.asarray(conf, dtype=np.float64))


def test_boundary_set_single():
    bs = boundary_set([make_cs([2, 5, 7])])
    np.testing.assert_array_equal(bs.node_ids, [2, 5, 7])
    assert not bs.used_fallback


def test_boundary_set_intersection():
    bs = boundary_set([make_cs([1, 2, 3]), make_cs([3, 4], other=2)])
    np.testing.assert_array_equal(bs.node_ids, [3])
    assert not bs.used_fallback


def test_boundary_set_union_fallback():
    bs = boundary_set([make_cs([1, 2]), make_cs([3, 4], other=2)])
    np.testing.assert_array_equal(bs.node_ids, [1, 2, 3, 4])
    assert bs.used_fallback


def test_boundary_set_mean_confidence():
    a = make_cs([0, 1], conf=[0.8, 0.6])
    b = make_cs([1, 2], conf=[0.4, 0.2], other=2)
    bs = boundary_set([a, b])
    np.testing.assert_array_equal(bs.node_ids, [1])
    np.testing.assert_allclose(bs.confidences, [(0.6 + 0.4) / 2])
    # fallback case averages over only the sets containing each node
    bs2 = boundary_set([make_cs([0], conf=[0.9]), make_cs([2], conf=[0.3], other=2)])
    np.testing.assert_allclose(bs2.confidences, [0.9, 0.3])


def test_boundary_set_empty_list():
    with pytest.raises(ValidationError):
        boundary_set([])


def test_pipeline_matches_brute_force():
    # random lattice instances: dyadic inputs keep both sides bit-identical
    rng = np.random.default_rng(101)
    for trial in range(20):
        n_domains = int(rng.integers(2, 5))
        d = int(rng.integers(2, 8))
        sizes = [int(rng.integers(3, 60)) for _ in range(n_domains)]
        mats = [lattice(rng, (n, d)) for n in sizes]
        vecs = [lattice(rng, d) for _ in range(n_domains)]
        rho = float(rng.uniform(0.1, 0.9))
        aligned = [wrap(m, domain_id=i) for i, m in enumerate(mats)]
        got = select_boundaries(aligned, centers_of(vecs), rho)
        want = oracle_boundaries(
            [m.tolist() for m in mats], [v.tolist() for v in vecs], rho
        )
        for k in range(n_domains):
            assert list(got[k].node_ids) == want[k][0], f"trial {trial} domain {k}"
            assert got[k].used_fallback == want[k][1]
            assert len(got[k].node_ids) >= 1


def test_pipeline_fallback_instance():
    # K=3 crafted so domain 0's two candidate sets are disjoint
    mats = [
        np.array([[0.0, 4.0], [0.0, -4.0]]),
        np.array([[8.0, 8.0], [8.0, 6.0]]),
        np.array([[8.0, -8.0], [8.0, -6.0]]),
    ]
    vecs = [m.mean(axis=0) for m in mats]
    aligned = [wrap(m, domain_id=i) for i, m in enumerate(mats)]
    got = select_boundaries(aligned, centers_of(vecs), 0.4)
    want = oracle_boundaries([m.tolist() for m in mats], [v.tolist() for v in vecs], 0.4)
    assert got[0].used_fallback
    for k in range(3):
        assert list(got[k].node_ids) == want[k][0]
        assert got[k].used_fallback == want[k][1]


def test_translation_invariance_of_selection():
    # uniform shift of aligned features moves nodes and centers together
    rng = np.random.default_rng(55)
    mats = [rng.normal(size=(30, 4)) + off for off in (0.0, 3.0, -2.0)]
    vecs = [m.mean(axis=0) for m in mats]
    shift = rng.normal(size=4)
    base = select_boundaries(
        [wrap(m, i) for i, m in enumerate(mats)], centers_of(vecs), 0.3
    )
    moved = select_boundaries(
        [wrap(m + shift, i) for i, m in enumerate(mats)],
        centers_of([v + shift for v in vecs]),
        0.3,
    )
    for a, b in zip(base, moved):
        np.testing.assert_array_equal(a.node_ids, b.node_ids)


def test_every_domain_nonempty():
    rng = np.random.default_rng(77)
    mats = [rng.normal(size=(10, 3)) for _ in range(4)]
    vecs = [m.mean(axis=0) for m in mats]
    sets = select_boundaries(
        [wrap(m, i) for i, m in enumerate(mats)], centers_of(vecs), 0.15
    )
    assert all(len(s.node_ids) >= 1 for s in sets)
    assert all(isinstance(s, BoundarySet) for s in sets)
