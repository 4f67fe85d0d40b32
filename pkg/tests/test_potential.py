import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraclab.potential import (
    convexified_well,
    make_prototype_well,
    max_principle_bound,
    sign_property_holds,
    verify_structural_assumptions,
)


def test_prototype_constants():
    w = make_prototype_well()
    assert (w.p, w.c_W, w.delta_W, w.kappa_W) == (4.0, 3.0, 0.18, 1.0)
    assert w.W(np.array([-1.0, 1.0])).tolist() == [0.0, 0.0]
    assert w.Wpp(1.0) == pytest.approx(2.0)
    rep = verify_structural_assumptions(w)
    assert rep.passed, rep.failed()


def test_scan_detects_bad_constants():
    w = make_prototype_well()
    rep = verify_structural_assumptions(dataclasses.replace(w, kappa_W=5.0))
    assert "H2: W'' >= kappa_W near wells" in rep.failed()
    rep = verify_structural_assumptions(dataclasses.replace(w, c_W=0.5))
    assert not rep.passed
    with pytest.raises(ValueError):
        verify_structural_assumptions(w, n_samples=10)


def test_scan_detects_wrong_derivative():
    w = make_prototype_well()
    bad = dataclasses.replace(w, Wp=lambda t: np.asarray(t) ** 3)
    assert "finite-difference consistency" in verify_structural_assumptions(bad).failed()


@given(st.floats(-50, 50))
def test_quartic_even_and_nonnegative(t):
    w = make_prototype_well()
    assert w.W(t) >= 0
    assert w.W(t) == pytest.approx(w.W(-t))
    assert w.Wp(t) == pytest.approx(-w.Wp(-t))


@pytest.mark.parametrize("kappa", [1, -1])
def test_convexified_well(kappa):
    w = make_prototype_well()
    Wt = convexified_well(w, kappa)
    near = np.linspace(kappa - w.delta_W, kappa + w.delta_W, 101)
    assert np.allclose(Wt(near), w.W(near))
    t = np.linspace(-5, 5, 4001)
    assert np.all(np.diff(Wt(t), 2) >= -1e-12)
    with pytest.raises(ValueError):
        convexified_well(w, 0)


def test_sign_property_and_bound():
    w = make_prototype_well()
    assert sign_property_holds(w, 0.1)
    # (1 + 3 * 0.5^(1/2) * 2)^(1/3)
    b = max_principle_bound(w, 0.5, 0.25, 2.0, 0.5)
    assert b == pytest.approx((1 + 3 * 0.5**0.5 * 2) ** (1 / 3))
    assert max_principle_bound(w, 0.1, 0.25, 0.0, 1.0) == 1.0
