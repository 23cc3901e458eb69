import numpy as np
import pytest

from gapsol.errors import DimensionMismatch, IndexOutOfRange, NonHermitianCoupling, ParseError
from gapsol.model import (
    CmeParameters,
    build_symmetric_example,
    dumps_config,
    load_config,
    loads_config,
    nonlinearity,
    save_config,
    validate,
)
from oracles import nonlinearity_bruteforce

from conftest import two_mode


def test_reference_system_is_valid(reference):
    assert validate(reference) is reference
    assert reference.d == 2 and reference.N == 4
    np.testing.assert_array_equal(reference.kappa, reference.kappa.conj().T)


def test_reference_coupling_entries(reference):
    k = reference.kappa
    assert k[0, 1] == k[2, 3] == 2
    assert k[0, 3] == k[2, 1] == 1
    assert k[0, 2] == k[3, 1] == 1
    np.testing.assert_array_equal(np.diag(k), 0)
    np.testing.assert_array_equal(reference.v, [[0, 1], [0, -1], [1, 0], [-1, 0]])


def test_zero_coupling_is_valid():
    p = build_symmetric_example((0, 1), (1, 0), 0, 0, 0)
    np.testing.assert_array_equal(p.kappa, 0)


def test_non_hermitian_coupling_rejected():
    with pytest.raises(NonHermitianCoupling):
        CmeParameters(1, 2, [[1], [-1]], [[0, 1], [2, 0]])


def test_hermiticity_tolerance_is_relative():
    kap = np.array([[0, 1e6], [1e6 + 1e-7, 0]])
    CmeParameters(1, 2, [[1], [-1]], kap)
    with pytest.raises(NonHermitianCoupling):
        CmeParameters(1, 2, [[1], [-1]], np.array([[0, 1.0], [1.0 + 1e-9, 0]]))


def test_dimension_and_index_errors():
    with pytest.raises(DimensionMismatch):
        CmeParameters(2, 2, [[1, 0], [0]], np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        CmeParameters(2, 2, [[1, 0], [0, 1]], np.zeros((3, 3)))
    with pytest.raises(IndexOutOfRange):
        CmeParameters(1, 2, [[1], [-1]], np.zeros((2, 2)), ((0, 0, 2, 0, 1.0),))
    with pytest.raises(DimensionMismatch):
        build_symmetric_example((0, 1, 0), (1, 0), 2, 1, 1)


def test_symmetric_gamma_slots(reference):
    g = reference.gamma_dense()
    # 1-based gamma_1^{(3,2,4)} = 1, gamma_1^{(2,3,4)} = 0
    assert g[0, 2, 1, 3] == 1
    assert g[0, 1, 2, 3] == 0
    assert g[0, 0, 0, 0] == 1
    assert set(np.unique(g)) <= {0, 1}
    # per j: (j,j,j) + 3 (j,i,i) + 3 (i,i,j) + 2 cross terms
    assert len(reference.gamma) == 4 * 9


def test_symmetric_builder_hermitian_for_complex_couplings():
    p = build_symmetric_example((0.3, 1), (1, -0.2), 1 + 2j, -0.5j, 0.7 - 0.1j)
    np.testing.assert_array_equal(p.kappa, p.kappa.conj().T)


def test_nonlinearity_of_zero(reference):
    np.testing.assert_array_equal(nonlinearity(reference, np.zeros(4)), 0)


def test_nonlinearity_on_edge_vector(reference):
    eta = np.array([1, 1, -1, -1]) / 2
    np.testing.assert_allclose(nonlinearity(reference, eta), 9 / 8 * np.array([1, 1, -1, -1]), atol=0)
    np.testing.assert_allclose(nonlinearity_bruteforce(reference, eta), 9 / 8 * np.array([1, 1, -1, -1]))


def test_nonlinearity_complex_scaling(reference):
    rng = np.random.default_rng(3)
    A = rng.normal(size=4) + 1j * rng.normal(size=4)
    c = 2j
    np.testing.assert_allclose(nonlinearity(reference, c * A), c * abs(c) ** 2 * nonlinearity(reference, A),
                               rtol=1e-14)


def test_nonlinearity_lifts_to_fields(reference):
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 3, 5)) + 1j * rng.normal(size=(4, 3, 5))
    out = nonlinearity(reference, A)
    for i in range(3):
        for k in range(5):
            np.testing.assert_allclose(out[:, i, k], nonlinearity_bruteforce(reference, A[:, i, k]), rtol=1e-13)


def test_config_round_trip_is_exact(reference, tmp_path):
    path = tmp_path / "model.toml"
    save_config(reference, path)
    assert load_config(path) == reference


def test_config_round_trip_awkward_values(tmp_path):
    kap = np.array([[0.1, 1 / 3 + 1e-300j], [1 / 3 - 1e-300j, -2.5e-17]])
    p = CmeParameters(1, 2, [[np.pi], [-np.e]], kap, ((0, 1, 0, 1, 0.1 + 0.2j),))
    path = tmp_path / "m.toml"
    save_config(p, path)
    q = load_config(path)
    assert q == p
    assert q.kappa.tobytes() == p.kappa.tobytes()


def test_config_two_mode_1d(tmp_path):
    p = two_mode(1.5)
    assert loads_config(dumps_config(p)) == p


def test_config_missing_kappa_names_field(reference):
    text = dumps_config(reference)
    start = text.index("[kappa]")
    end = text.index("[gamma]")
    with pytest.raises(ParseError, match="kappa"):
        loads_config(text[:start] + text[end:])


def test_config_syntax_error_has_line():
    with pytest.raises(ParseError, match="line"):
        loads_config("[model]\nd = = 2\n")


def test_config_bad_gamma_entry(reference):
    text = dumps_config(reference).replace("[1, 1, 1, 1, 1.0, 0.0]", "[1, 1, 1, 1.0]")
    with pytest.raises(ParseError, match="gamma"):
        loads_config(text)


def test_parameters_are_immutable(reference):
    with pytest.raises(ValueError):
        reference.kappa[0, 0] = 1
    with pytest.raises(AttributeError):
        reference.d = 3


def test_flip_negates_gamma(reference):
    f = reference.flipped_nonlinearity()
    A = np.array([0.3, -1j, 0.2, 1 + 1j])
    np.testing.assert_array_equal(nonlinearity(f, A), -nonlinearity(reference, A))
    assert f.flipped_nonlinearity() == reference
