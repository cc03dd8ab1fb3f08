import numpy as np
import pytest

from levy_neumann.fields import FieldError, ScalarField, eval_field

FIELDS = [
    (ScalarField.constant(2.5, 2), lambda p: np.full(len(p), 2.5)),
    (ScalarField.linear([1.0, -2.0], 0.5), lambda p: 0.5 + p[:, 0] - 2 * p[:, 1]),
    (ScalarField.polynomial([1.0, 0.0, 3.0], [1.0, 1.0], dim=2), lambda p: 1 + 3 * (p[:, 0] + p[:, 1]) ** 2),
    (ScalarField.radial([0.0, 0.0, 1.0], [1.0, 0.0]), lambda p: (p[:, 0] - 1) ** 2 + p[:, 1] ** 2),
    (ScalarField.cosine([2.0, 0.0], 0.5, 0.1), lambda p: 0.5 * np.cos(2 * p[:, 0] + 0.1)),
    (ScalarField.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], [0.0, 1.0], dim=2),
     lambda p: np.interp(p[:, 1], [0.0, 1.0, 2.0], [0.0, 1.0, 0.0])),
]


@pytest.mark.parametrize("field,ref", FIELDS, ids=[f.name for f, _ in FIELDS])
def test_vectorized_and_kernel_evaluation(field, ref, rng):
    pts = rng.normal(scale=2, size=(300, 2))
    assert np.allclose(field(pts), ref(pts), atol=1e-12)
    kind, params = field.encode()
    scalar = np.array([eval_field(kind, params, p) for p in pts])
    assert np.allclose(scalar, ref(pts), atol=1e-12)


@pytest.mark.parametrize("field,ref", FIELDS, ids=[f.name for f, _ in FIELDS])
def test_shift_adds_constant(field, ref, rng):
    pts = rng.normal(size=(50, 2))
    if field.name == "cosine":
        with pytest.raises(FieldError):
            field.shifted(1.0)
        return
    assert np.allclose(field.shifted(0.25)(pts), ref(pts) + 0.25)


def test_growth_and_boundedness():
    assert ScalarField.constant(1.0).is_bounded
    assert ScalarField.cosine([1.0]).is_bounded
    assert ScalarField.linear([1.0]).growth_exponent == 1.0
    assert ScalarField.polynomial([0.0, 0.0, 1.0]).growth_exponent == 2.0
    assert not ScalarField.polynomial([0.0, 1.0]).is_bounded
    assert ScalarField.polynomial([3.0, 0.0]).is_constant


def test_dict_round_trip():
    for field, _ in FIELDS:
        again = ScalarField.from_dict(field.to_dict(), field.dim)
        assert again.to_dict() == field.to_dict()


@pytest.mark.parametrize("spec", [
    {"name": "spline"}, {"name": "linear"}, {"name": "constant", "c": 1.0, "extra": 2},
    {"name": "tabulated", "xs": [1.0, 0.0], "ys": [0.0, 1.0]},
])
def test_bad_fields_rejected(spec):
    with pytest.raises(FieldError):
        ScalarField.from_dict(spec, 1)
