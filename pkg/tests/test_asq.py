import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfree import PreconditionError
from lipfree.asq import asq_certificate, asq_family, refute_s_asq
from lipfree.free_space import MolecularCombination, molecule_vector, norm
from lipfree.sampling import random_combination, random_graph


@pytest.fixture
def family(interval):
    return asq_family(interval, 0.5, interval.vertex("0"), interval.vertex("1"))


def test_family_parameters(interval, family):
    assert family.n == 16 and family.theta == 1 / 16 and family.r == 1 / 32
    for a, b in zip(family.ps, family.ps[1:]):
        assert interval.distance(a, b) == pytest.approx(1 / 16)
    # q_1 sits theta r / 2 toward p_2, the last q toward p_15
    assert family.qs[0].offset == pytest.approx(1 / 1024)
    assert family.qs[-1].offset == pytest.approx(15 / 16 - 1 / 1024)


def test_family_eps_one(interval):
    fam = asq_family(interval, 1.0, interval.vertex("0"), interval.vertex("1"))
    assert fam.n == 8
    offsets = [0.0 if p.is_vertex else p.offset for p in fam.ps]
    assert offsets == pytest.approx([i / 8 for i in range(8)])


def test_balls_are_disjoint(interval, family):
    n = family.n
    for i in range(n):
        assert 0 < interval.distance(family.ps[i], family.qs[i]) < family.theta * family.r
        for j in range(i + 1, n):
            assert interval.distance(family.ps[i], family.ps[j]) >= (j - i) / n - 1e-12 >= 2 * family.r - 1e-12


def test_family_preconditions(interval):
    with pytest.raises(PreconditionError):
        asq_family(interval, 0.0, interval.vertex("0"), interval.vertex("1"))
    with pytest.raises(PreconditionError):
        asq_family(interval, 0.5, interval.vertex("0"), interval.vertex("0"))


def test_certificate_for_zero(interval, family):
    cert = asq_certificate(interval, family, MolecularCombination.of([]))
    assert cert.ok
    assert cert.index == 0
    # g(m_{p_i,q_i}) = 1 before dividing by 1 + 2 theta
    assert cert.bound == pytest.approx(1 / (1 + 2 * family.theta))
    assert cert.bound > 1 - family.eps


def test_certificate_avoids_the_loaded_ball(interval, family):
    y = MolecularCombination.of([(1.0, family.ps[0], family.qs[0])])
    cert = asq_certificate(interval, family, y)
    assert cert.ok
    assert cert.index != 0
    assert cert.norm_y == pytest.approx(1.0)
    assert 2 - family.eps < cert.bound <= cert.true_norm + 1e-9
    # frozen from a run: second ball, 16/9 against the exact value 2
    assert cert.index == 1
    assert cert.bound == pytest.approx(16 / 9)
    assert cert.true_norm == pytest.approx(2.0)


def test_certificate_accepts_free_vectors(interval, family):
    v = molecule_vector(interval, interval.point_on_edge(0, 0.3), interval.vertex("1")) * 0.5
    cert = asq_certificate(interval, family, v)
    assert cert.ok and cert.norm_y == pytest.approx(0.5)


def test_certificate_rejects_heavy_y(interval, family):
    y = MolecularCombination.of([(0.8, interval.vertex("1"), interval.vertex("0")), (0.8, family.ps[3], family.qs[3])])
    with pytest.raises(PreconditionError):
        asq_certificate(interval, family, y)


def test_refute_small_run(interval, family):
    rep = refute_s_asq(interval, family, 0.5, 30, seed=1)
    assert rep.all_passed and rep.failures == []
    assert rep.min_margin > -family.eps
    with pytest.raises(PreconditionError):
        refute_s_asq(interval, family, 1.5, 10)


def test_refute_small_s_reduces_to_molecule_norm(interval, family):
    rep = refute_s_asq(interval, family, 1e-6, 10, seed=2)
    assert rep.min_margin == pytest.approx(0.0, abs=1e-5)


rngs = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


@settings(max_examples=25, deadline=None)
@given(rngs)
def test_certificates_on_random_graphs(rng):
    G = random_graph(rng, max_vertices=6)
    far = max(G.vertices, key=lambda v: G.distance(G.basepoint, G.vertex(v)))
    fam = asq_family(G, 1.0, G.basepoint, G.vertex(far))
    y = random_combination(G, rng, max_terms=3)
    cert = asq_certificate(G, fam, y)
    assert cert.ok, [c for c in cert.checks if not c["passed"]]
    ny = norm(G, y.to_vector(G))
    assert cert.bound > 1 + ny - fam.eps
    # pigeonhole: each ball is touched by at most a 2/n share of the weight
    assert cert.crossing_weight <= 2 * y.total_weight() / fam.n + 1e-12
