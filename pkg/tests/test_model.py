import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechsqueeze.errors import (
    EfficiencyOutOfRange,
    InvalidParameters,
    NegativeRate,
    NonPositiveGamma,
    NonPositiveVariance,
    ParameterError,
)
from mechsqueeze.model import (
    PhysicalParams,
    SystemParams,
    chi_prime_estimate,
    derived,
    drift_eigenvalues,
    from_db,
    is_stable,
    to_db,
    validate,
)

from strategies import finite


def test_defaults_are_ground_state_model():
    p = SystemParams()
    assert (p.gamma, p.chi, p.delta, p.mu, p.eta, p.n_thermal) == (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    assert p.theta == pytest.approx(math.pi / 4)


@pytest.mark.parametrize(
    "changes, exc",
    [
        ({"gamma": 0.0}, NonPositiveGamma),
        ({"gamma": -1.0}, NonPositiveGamma),
        ({"eta": 1.5}, EfficiencyOutOfRange),
        ({"eta": -0.1}, EfficiencyOutOfRange),
        ({"mu": -1.0}, NegativeRate),
        ({"chi": -0.5}, NegativeRate),
        ({"n_thermal": -1e-3}, NegativeRate),
        ({"delta": math.nan}, ParameterError),
    ],
)
def test_validate_single_violation(changes, exc):
    with pytest.raises(exc):
        validate(SystemParams(**changes))


def test_validate_reports_all_violations():
    with pytest.raises(InvalidParameters) as info:
        validate(SystemParams(gamma=0.0, eta=2.0, mu=-1.0))
    assert len(info.value.violations) == 3


def test_from_dict_alias_and_unknown():
    p = SystemParams.from_dict({"chi": 2, "n": 3})
    assert p.n_thermal == 3.0 and p.chi == 2.0
    assert SystemParams.from_dict(p.to_dict()) == p
    with pytest.raises(ParameterError, match="unknown"):
        SystemParams.from_dict({"kappa": 1})


def test_threshold_is_strict():
    assert not is_stable(SystemParams(chi=1.0))
    assert is_stable(SystemParams(chi=0.999))
    assert not is_stable(SystemParams(chi=50.0, delta=49.0))
    assert is_stable(SystemParams(chi=50.0, delta=49.99))


@given(st.floats(0, 10, **finite), st.floats(-10, 10, **finite))
def test_stability_matches_eigenvalues(chi, delta):
    p = SystemParams(chi=chi, delta=delta)
    eig_stable = max(e.real for e in drift_eigenvalues(p)) < 0
    if abs(chi * chi - delta * delta - 1.0) > 1e-9:
        assert is_stable(p) == eig_stable


def test_derived_quantities():
    p = SystemParams(gamma=2.0, chi=3.0, mu=0.5, eta=0.8, n_thermal=4.0)
    d = derived(p)
    assert d.n_ba == pytest.approx(0.125)
    assert d.z == pytest.approx(8 * 0.8 * 0.5 * 2.0 * (4.0 + 0.125 + 0.5))
    assert d.chi_prime == pytest.approx(3.0 / math.sqrt(4.0 + d.z))
    assert d.diffusion == pytest.approx(2 * 2.0 * 4.5 + 0.5)


def test_normalized_scales_rates_only():
    p = SystemParams(gamma=4.0, chi=2.0, delta=8.0, mu=1.0, eta=0.5, n_thermal=3.0)
    q = p.normalized()
    assert (q.gamma, q.chi, q.delta, q.mu) == (1.0, 0.5, 2.0, 0.25)
    assert (q.eta, q.n_thermal, q.theta) == (p.eta, p.n_thermal, p.theta)
    assert derived(q).chi_prime == pytest.approx(derived(p).chi_prime)


def test_db_convention():
    assert to_db(0.5) == 0.0
    assert to_db(0.25) == pytest.approx(10 * math.log10(2))
    assert to_db(1.0) < 0
    with pytest.raises(NonPositiveVariance):
        to_db(0.0)


@given(st.floats(-40, 40, **finite))
def test_db_round_trip(db):
    assert to_db(from_db(db)) == pytest.approx(db, abs=1e-9)


def test_physical_params_mapping():
    dev = PhysicalParams(omega_m=2 * math.pi * 1e5, quality=1e4, spring_mod_ratio=1e-3)
    assert dev.gamma == pytest.approx(2 * math.pi * 10)
    assert dev.chi == pytest.approx(math.pi * 1e2)
    sp = dev.to_system(mu=0.4, n_thermal=1.0)
    assert sp.gamma == 1.0 and sp.chi == pytest.approx(5.0)
    assert sp.mu == 0.4 and sp.n_thermal == 1.0


def test_physical_params_warnings_and_errors():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        PhysicalParams(1.0, 10.0, 0.5)
    messages = " ".join(str(w.message) for w in caught)
    assert "k_r/k_0" in messages and "chi/omega_m" in messages
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        PhysicalParams(1.0, 10.0, 0.01)
    with pytest.raises(InvalidParameters) as info:
        PhysicalParams(-1.0, 0.0, -1.0)
    assert len(info.value.violations) == 3


def test_chi_prime_estimate_high_temperature():
    dev = PhysicalParams(omega_m=1e6, quality=1e5, spring_mod_ratio=1e-3)
    n, eta, mu = 1e4, 1.0, 1e-3
    sp = dev.to_system(mu=mu, eta=eta, n_thermal=n)
    assert chi_prime_estimate(dev, n, eta, mu) == pytest.approx(derived(sp).chi_prime, rel=1e-2)
