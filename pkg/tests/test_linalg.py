import math
import warnings

import numpy as np
import pytest
from pytest_mock import MockerFixture

from geonium.errors import (
    ContractViolationError,
    InvalidDimensionError,
    TruncationWarning,
)
from geonium.hamiltonians import spin_drive
from geonium.linalg import (
    SIGMA_X,
    SIGMA_Z,
    SPIN_DOWN,
    SPIN_UP,
    HilbertSpec,
    Mode,
    Operator,
    StateVector,
    check_truncation,
    embed,
    evolve_timedep,
    fidelity,
    hermitian_matrix_function,
    identity,
    is_hermitian,
    ladder,
    mode_lowering,
    mode_number,
    propagator,
    tail_population,
)


def test_spec_dims_and_index() -> None:
    spec = HilbertSpec(axial_dim=3, cyclotron_dim=2)
    assert spec.dims == (2, 3, 2, 1)
    assert spec.dim == 12
    assert spec.index(SPIN_UP) == 0
    assert spec.index(SPIN_DOWN) == 6
    assert spec.index(SPIN_UP, n_z=1) == 2
    assert spec.index(SPIN_UP, n_z=0, n_c=1) == 1
    assert spec.mode_dim(Mode.AXIAL) == 3
    assert spec.mode_dim("cyclotron") == 2


def test_spec_rejects_bad_dimensions() -> None:
    with pytest.raises(InvalidDimensionError):
        HilbertSpec(axial_dim=1)
    with pytest.raises(InvalidDimensionError):
        HilbertSpec(cyclotron_dim=0)
    with pytest.raises(InvalidDimensionError):
        HilbertSpec(spin_dim=3)
    with pytest.raises(InvalidDimensionError):
        HilbertSpec(axial_dim=2).index(SPIN_UP, n_z=2)


def test_state_is_read_only() -> None:
    state = HilbertSpec(axial_dim=2, cyclotron_dim=1).basis_state(SPIN_DOWN)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 1.0
    with pytest.raises(InvalidDimensionError):
        StateVector(state.spec, np.zeros(3))


def test_populations_and_amplitude() -> None:
    spec = HilbertSpec(axial_dim=3, cyclotron_dim=2)
    psi = (
        spec.basis_state(SPIN_UP, n_z=1).amplitudes
        + spec.basis_state(SPIN_DOWN, n_c=1).amplitudes
    )
    state = StateVector(spec, psi).normalize()
    assert np.allclose(state.populations(Mode.AXIAL), [0.5, 0.5, 0.0])
    assert np.allclose(state.populations(Mode.CYCLOTRON), [0.5, 0.5])
    assert np.allclose(state.populations(Mode.SPIN), [0.5, 0.5])
    assert state.amplitude(SPIN_UP, n_z=1) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ContractViolationError):
        StateVector(spec, np.zeros(spec.dim)).normalize()


def test_ladder_commutator() -> None:
    a, a_dag = ladder(5)
    commutator = a @ a_dag - a_dag @ a
    # exact except in the last row, where the truncation shows
    assert np.allclose(np.diag(commutator)[:-1], 1.0)
    assert commutator[-1, -1] == pytest.approx(-4.0)
    with pytest.raises(InvalidDimensionError):
        ladder(1)


def test_frozen_mode_lowering_is_zero() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    assert not np.any(mode_lowering(Mode.CYCLOTRON, spec).matrix)
    a = mode_lowering(Mode.AXIAL, spec)
    assert np.allclose(mode_number(Mode.AXIAL, spec).matrix, (a.dagger() @ a).matrix)


def test_embed_orders_spin_first() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    assert np.allclose(np.diag(embed(SIGMA_Z, Mode.SPIN, spec).matrix), [1, 1, -1, -1])
    with pytest.raises(InvalidDimensionError):
        embed(np.eye(3), Mode.AXIAL, spec)


def test_embedded_modes_commute() -> None:
    spec = HilbertSpec(axial_dim=3, cyclotron_dim=2)
    a_z = mode_lowering(Mode.AXIAL, spec)
    a_c = mode_lowering(Mode.CYCLOTRON, spec)
    assert np.allclose((a_z @ a_c).matrix, (a_c @ a_z).matrix)
    assert np.allclose((a_z.dagger() @ a_c).matrix, (a_c @ a_z.dagger()).matrix)


def test_hermitian_matrix_function() -> None:
    spec = HilbertSpec(axial_dim=6, cyclotron_dim=1)
    a = mode_lowering(Mode.AXIAL, spec)
    x = a + a.dagger()
    same = hermitian_matrix_function(x, lambda w: w)
    assert np.max(np.abs(same.matrix - x.matrix)) < 1e-12
    cos = hermitian_matrix_function(x, np.cos)
    sin = hermitian_matrix_function(x, np.sin)
    assert cos.hermitian_hint
    one = (cos @ cos + sin @ sin).matrix
    assert np.max(np.abs(one - np.eye(spec.dim))) < 1e-10
    with pytest.raises(ContractViolationError):
        hermitian_matrix_function(a, np.cos)


def test_operator_algebra() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    a = mode_lowering(Mode.AXIAL, spec)
    x = a + a.dagger()
    assert is_hermitian(x.matrix)
    assert np.allclose((x - x).matrix, 0)
    assert np.allclose((x * 2).matrix, 2 * x.matrix)
    one = identity(spec)
    assert np.allclose(one.commutator(x).matrix, 0)
    state = spec.basis_state(SPIN_UP, n_z=1)
    lowered = a @ state
    assert lowered.amplitude(SPIN_UP, n_z=0) == pytest.approx(1.0)
    with pytest.raises(InvalidDimensionError):
        x + identity(HilbertSpec(axial_dim=3, cyclotron_dim=1))


def test_operator_rejects_claimed_hermitian() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    with pytest.raises(ContractViolationError):
        Operator(spec, mode_lowering(Mode.AXIAL, spec).matrix, hermitian_hint=True)


def test_is_hermitian_is_relative() -> None:
    m = np.array([[1e9, 1.0], [1.0 + 1e-4, 0.0]])
    assert is_hermitian(m)
    assert not is_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_propagator_of_random_hermitian_is_unitary() -> None:
    spec = HilbertSpec(axial_dim=3, cyclotron_dim=2)
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.normal(size=(spec.dim, spec.dim)) + 1j * rng.normal(
            size=(spec.dim, spec.dim)
        )
        h = Operator(spec, (a + a.conj().T) / 2, hermitian_hint=True)
        assert is_hermitian(h.matrix)
        u = propagator(h, float(rng.uniform(0, 5))).matrix
        assert np.max(np.abs(u.conj().T @ u - np.eye(spec.dim))) < 1e-9


def test_propagator_rabi_flip() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    sigma_x = embed(np.array([[0, 1], [1, 0]]), Mode.SPIN, spec)
    u = propagator(sigma_x, math.pi / 2)
    flipped = u @ spec.basis_state(SPIN_DOWN)
    assert abs(flipped.amplitude(SPIN_UP)) ** 2 == pytest.approx(1.0)
    assert np.allclose(u.matrix.conj().T @ u.matrix, np.eye(spec.dim))
    assert np.allclose(propagator(sigma_x, 0.0).matrix, np.eye(spec.dim))
    with pytest.raises(ContractViolationError):
        propagator(sigma_x, -1.0)
    with pytest.raises(ContractViolationError):
        propagator(mode_lowering(Mode.AXIAL, spec), 1.0)


def test_evolve_timedep_matches_propagator_for_constant_h() -> None:
    spec = HilbertSpec(axial_dim=3, cyclotron_dim=1)
    a = mode_lowering(Mode.AXIAL, spec)
    h = (a + a.dagger()) + embed(np.array([[0.3, 0], [0, -0.3]]), Mode.SPIN, spec)
    start = spec.basis_state(SPIN_DOWN)
    expected = propagator(h, 2.0) @ start
    actual = evolve_timedep(lambda t: h, start, 0.0, 2.0, step=0.1)
    assert fidelity(expected, actual) == pytest.approx(1.0, abs=1e-12)
    assert evolve_timedep(lambda t: h, start, 1.0, 1.0, step=0.1) is start
    with pytest.raises(ContractViolationError):
        evolve_timedep(lambda t: h, start, 1.0, 0.0, step=0.1)
    with pytest.raises(ContractViolationError):
        evolve_timedep(lambda t: h, start, 0.0, 1.0, step=0.0)


def rotating_drive_exact(
    spec: HilbertSpec, rabi: float, sweep: float, duration: float
) -> StateVector:
    # In the frame co-rotating with the drive phase the Hamiltonian is constant.
    start = spec.basis_state(SPIN_DOWN)
    half_z = embed(SIGMA_Z * (sweep / 2), Mode.SPIN, spec)
    steady = embed(SIGMA_X * (rabi / 2), Mode.SPIN, spec) - half_z
    return propagator(half_z, duration) @ (propagator(steady, duration) @ start)


def test_evolve_timedep_is_second_order() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    rabi, sweep, duration = 1.0, 3.0, 2.0
    exact = rotating_drive_exact(spec, rabi, sweep, duration).amplitudes
    start = spec.basis_state(SPIN_DOWN)
    errors = [
        float(
            np.linalg.norm(
                evolve_timedep(
                    lambda t: spin_drive(spec, rabi, sweep * t),
                    start,
                    0.0,
                    duration,
                    step,
                ).amplitudes
                - exact
            )
        )
        for step in (0.02, 0.01)
    ]
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)


def test_evolve_timedep_keeps_the_norm(mocker: MockerFixture) -> None:
    log = mocker.patch("geonium.linalg.log")
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    start = spec.basis_state(SPIN_DOWN)
    end = evolve_timedep(
        lambda t: spin_drive(spec, 1.0, 3.0 * t), start, 0.0, 10.0, step=1e-3
    )
    assert abs(end.norm() - 1.0) < 1e-6
    log.warning.assert_not_called()


def test_fidelity_ignores_global_phase() -> None:
    spec = HilbertSpec(axial_dim=2, cyclotron_dim=1)
    a = spec.basis_state(SPIN_UP)
    b = StateVector(spec, 1j * a.amplitudes)
    assert fidelity(a, b) == pytest.approx(1.0)
    assert fidelity(a, spec.basis_state(SPIN_DOWN)) == 0.0


def test_truncation_warning() -> None:
    spec = HilbertSpec(axial_dim=4, cyclotron_dim=1)
    top = spec.basis_state(SPIN_UP, n_z=3)
    assert tail_population(top, Mode.AXIAL) == pytest.approx(1.0)
    with pytest.warns(TruncationWarning):
        check_truncation(top)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tails = check_truncation(spec.basis_state(SPIN_UP))
    assert tails[Mode.AXIAL] == 0.0
    # frozen and tiny modes are not checked
    assert Mode.CYCLOTRON not in tails
