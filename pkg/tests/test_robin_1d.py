import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lapext import robin_1d
from lapext.errors import BracketFailure
from lapext.robin_1d import RobinParams

L = 2 * math.pi

# Independent oracle: mpmath.findroot at 30 digits on the same equations.
MP_NEGATIVE = {0.5: -0.25183170545716106429, 1.0: -1.0000139482442441652, 2.0: -4.0000000001945849072}
MP_POSITIVE = {
    -2.0: [0.053660715325037883641, 0.48532662674655635973, 1.3595426373269939546, 2.6917595237246761968],
    -1.0: [0.046709519795557153953, 0.43222433090503678988, 1.246047558604525523, 2.526131522582759442],
    0.5: [0.12001801119674280074, 0.84792652883723992942, 2.0939570686307124162, 3.8425879361168805409],
    1.0: [0.087478808258423433675, 0.74537155835310483393, 1.9638018723523273698, 3.700634576758711323],
    2.0: [0.073696946379992259291, 0.65826542852546604416, 1.8068187110787481066, 3.4955554202122562466],
}


@pytest.mark.parametrize("c", sorted(MP_NEGATIVE))
def test_negative_root_matches_mpmath(c):
    assert robin_1d.solve_negative(RobinParams(c, L)) == pytest.approx(MP_NEGATIVE[c], rel=1e-13)


@pytest.mark.parametrize("c", sorted(MP_POSITIVE))
def test_positive_roots_match_mpmath(c):
    np.testing.assert_allclose(robin_1d.solve_positive(RobinParams(c, L), 4), MP_POSITIVE[c], rtol=1e-12)


@pytest.mark.parametrize("c, present", [(-2, False), (-1, False), (0, False), (0.5, True), (1, True), (2, True)])
def test_negative_eigenvalue_counting(c, present):
    assert (robin_1d.solve_negative(RobinParams(c, L)) is not None) == present


def test_neumann_limit():
    np.testing.assert_allclose(robin_1d.solve_positive(RobinParams(0.0, L), 4), [(k / 2) ** 2 for k in range(4)], atol=1e-12)


def test_large_c_tends_to_minus_c_squared():
    assert robin_1d.solve_negative(RobinParams(20.0, L)) == pytest.approx(-400.0, rel=1e-12)


def test_strong_negative_c_approaches_dirichlet():
    roots = robin_1d.solve_positive_roots(RobinParams(-1e6, L), 3)
    np.testing.assert_allclose(roots, [(k + 0.5) / 2 for k in range(3)], rtol=1e-5)


@given(st.floats(-5, 5), st.floats(0.5, 10))
def test_roots_are_roots_and_sorted(c, length):
    p = RobinParams(c, length)
    s = robin_1d.spectrum(p, 6)
    assert np.all(np.diff(s.positive_eigenvalues) > 0)
    assert all(r <= 1e-10 for r in s.residuals)
    if c > 0:
        assert s.negative_eigenvalue is not None and s.negative_eigenvalue < 0
    else:
        assert s.negative_eigenvalue is None


@given(st.floats(0.01, 5), st.floats(0.5, 10))
def test_negative_root_exceeds_c(c, length):
    mu = robin_1d.solve_negative_root(RobinParams(c, length))
    assert mu >= c
    assert abs(robin_1d.negative_residual(mu, RobinParams(c, length))) <= 1e-10


def test_lower_bound():
    assert robin_1d.lower_bound(0.0, 1.0) == 0.0
    assert robin_1d.lower_bound(-1.0, 1.0) == 0.0
    assert robin_1d.lower_bound(1.0, L) == pytest.approx(MP_NEGATIVE[1.0], rel=1e-13)


def test_bracket_failure_reports_branch():
    f = lambda x: 1.0
    with pytest.raises(BracketFailure) as exc:
        robin_1d._bisect(f, 0.0, 1.0, 3)
    assert exc.value.branch == 3


def test_invalid_inputs():
    with pytest.raises(ValueError):
        RobinParams(1.0, 0.0)
    with pytest.raises(ValueError):
        robin_1d.solve_positive(RobinParams(1.0), 0)
