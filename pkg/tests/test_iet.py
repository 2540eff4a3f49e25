from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from ietlab.iet import FlowState, Iet, flow_advance
from ietlab.perm import Permutation, ReducibleError, irreducible_permutations
from ietlab.scalars import parse_vector

P = Permutation
HALF = Iet((F(1, 2), F(1, 2)), P((2, 1)))

PERMS = [pi for d in range(2, 6) for pi in irreducible_permutations(d)]


@st.composite
def rational_iets(draw):
    pi = draw(st.sampled_from(PERMS))
    lengths = draw(st.lists(st.fractions(F(1, 1000), 1, max_denominator=1000),
                            min_size=pi.d, max_size=pi.d))
    return Iet(tuple(lengths), pi)


@st.composite
def iet_and_point(draw):
    iet = draw(rational_iets())
    u = draw(st.fractions(0, 1, max_denominator=10**6).filter(lambda x: x < 1))
    return iet, u * iet.total


def test_evaluate_examples():
    assert HALF(F(1, 4)) == F(3, 4)
    assert HALF(F(3, 4)) == F(1, 4)


def test_reducible_rejected():
    with pytest.raises(ReducibleError):
        Iet((F(1), F(1)), P((1, 2)))


def test_domain_errors():
    with pytest.raises(ValueError):
        HALF(F(1))
    with pytest.raises(ValueError):
        HALF(F(-1, 10))
    with pytest.raises(ValueError):
        Iet((F(1), F(0)), P((2, 1)))


def test_orbit_examples():
    assert HALF.orbit(F(1, 4), 0) == ((), ())
    pts, syms = HALF.orbit(F(1, 4), 4)
    assert pts == (F(1, 4), F(3, 4), F(1, 4), F(3, 4))
    assert syms == (1, 2, 1, 2)


def test_translations_match_formula():
    iet = Iet((F(1), F(2), F(3), F(4)), P((4, 3, 2, 1)))
    lam = iet.lengths
    for i in range(1, 5):
        left = sum(lam[j - 1] for j in range(1, 5) if iet.perm(j) < iet.perm(i))
        assert iet.translations[i - 1] == left - sum(lam[:i - 1])


def test_keane_probe():
    # breakpoint 1/2 returns to itself after two steps
    assert HALF.keane_probe(1) is True
    assert HALF.keane_probe(2) is False
    # rational approximant of the golden rotation is periodic
    q = 89
    rot = Iet((F(q), F(144)), P((2, 1)))
    assert rot.keane_probe(q + 144) is False
    generic = Iet((F(1, 3), F(2, 3) - F(1, 997), F(1, 997)), P((3, 2, 1)))
    assert generic.keane_probe(20) is True
    with pytest.raises(TypeError):
        Iet(parse_vector("0.3,0.7"), P((2, 1))).keane_probe(3)


@given(iet_and_point())
def test_image_lies_in_domain_and_ordering(data):
    iet, x = data
    y = iet(x)
    assert 0 <= y < iet.total
    # intervals land in pi-order
    i = iet.index_of(x)
    left_image = iet.breakpoints[i - 1] + iet.translations[i - 1]
    assert left_image == sum(iet.lengths[j] for j in range(iet.d) if iet.perm.image[j] < iet.perm(i))


@given(iet_and_point())
def test_inverse_consistency(data):
    iet, x = data
    assert iet.inverse()(iet(x)) == x


@given(rational_iets(), st.data())
def test_piecewise_isometry(iet, data):
    i = data.draw(st.integers(1, iet.d))
    a, b = iet.breakpoints[i - 1], iet.breakpoints[i - 1] + iet.lengths[i - 1]
    s, t = sorted(data.draw(st.lists(st.fractions(0, 1, max_denominator=1000).filter(lambda u: u < 1),
                                     min_size=2, max_size=2)))
    x, y = a + s * (b - a), a + t * (b - a)
    assert abs(iet(x) - iet(y)) == abs(x - y)


def test_bijection_on_images():
    iet = Iet((F(2, 7), F(1, 7), F(3, 7), F(1, 7)), P((3, 1, 4, 2)))
    images = sorted((iet.breakpoints[i] + iet.translations[i], iet.lengths[i]) for i in range(iet.d))
    pos = F(0)
    for left, length in images:
        assert left == pos
        pos += length
    assert pos == iet.total


def test_flow_examples():
    iet = Iet((F(1, 3), F(2, 3)), P((2, 1)))
    s = FlowState(F(1, 10), F(0), (F(1), F(1)))
    assert flow_advance(s, iet, F(0)) == s
    assert flow_advance(s, iet, F(1)) == FlowState(iet(F(1, 10)), F(0), s.roof)
    s2 = FlowState(F(1, 2), F(0), (F(1), F(2)))
    assert flow_advance(s2, iet, F(1)) == FlowState(F(1, 2), F(1), s2.roof)
    with pytest.raises(ValueError):
        flow_advance(s, iet, F(-1))


@given(iet_and_point(), st.fractions(0, 5, max_denominator=50), st.fractions(0, 5, max_denominator=50))
def test_flow_additivity(data, t1, t2):
    iet, x = data
    roof = tuple(F(k + 1, 2) for k in range(iet.d))
    s = FlowState(x, F(0), roof)
    assert flow_advance(s, iet, t1 + t2) == flow_advance(flow_advance(s, iet, t1), iet, t2)
