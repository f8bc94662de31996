import math

import numpy as np
import pytest

from crowdmarket import (ActionChoice, BenefitVector, Curve, MarketParams, Role,
                         UserType, payoff, quality_price, requester_reward,
                         sensing_cost, utility)


def unaware(eta=0.5, s=0.2, p=0.0, w=1.0):
    return MarketParams(eta=eta, s=s, p0=p, w=w)


def benchmark_two_grade():
    return MarketParams(eta=1.0, s=0.2, p0=0.1, p1=0.35, quality_grid=(1.0, 2.0),
                        alpha_v=0.4, alpha_c=0.1,
                        value_curve=Curve.log1p(), cost_curve=Curve.power(0.5))


def test_utility_flat_curve():
    assert utility(UserType(0.5, 0.0), 1, unaware()) == pytest.approx(0.5)
    assert utility(UserType(0.0, 0.3), 1, unaware()) == 0.0


def test_utility_log_curve_with_offset():
    p = benchmark_two_grade()
    assert utility(UserType(1.0, 0.0), 1, p) == pytest.approx(0.4 + math.log(2.0))


def test_sensing_cost():
    assert sensing_cost(UserType(0.5, 0.3), 1, unaware()) == pytest.approx(0.3)
    p = benchmark_two_grade()
    assert sensing_cost(UserType(0.0, 1.0), 2, p) == pytest.approx(0.1 + math.sqrt(2.0))
    assert sensing_cost(UserType(0.5, 0.0), 2, MarketParams(
        eta=1.0, s=0.2, quality_grid=(1.0, 2.0), p1=0.1,
        value_curve=Curve.log1p(), cost_curve=Curve.power(0.5))) == 0.0


def test_quality_price():
    p = benchmark_two_grade()
    assert quality_price(1, p) == pytest.approx(0.45)
    assert quality_price(2, p) == pytest.approx(0.80)
    free = unaware(p=0.0)
    assert quality_price(1, free) == 0.0


def test_out_of_range_quality_index():
    p = unaware()
    with pytest.raises(ValueError):
        utility(UserType(0.5, 0.5), 2, p)
    with pytest.raises(ValueError):
        quality_price(0, p)


def test_payoff_alien_is_zero():
    p = unaware()
    assert payoff(UserType(0.9, 0.1), ActionChoice(Role.ALIEN), 0.7, p) == 0.0


def test_payoff_unaware_sensor_and_requester():
    # direct substitution: sensor v - c + phi, requester eta（v - s) - p
    p = unaware(eta=0.5, s=0.2, p=0.1)
    user = UserType(0.8, 0.3)
    assert payoff(user, ActionChoice(Role.SENSOR, 1), 0.1, p) == pytest.approx(0.6)
    assert payoff(user, ActionChoice(Role.REQUESTER, 1), 0.1, p) == pytest.approx(0.2)


def test_requester_reward_examples():
    p = unaware(eta=1.0, s=0.2, p=0.1)
    for v in (0.0, 0.4, 1.0):
        assert requester_reward(UserType(v, 0.5), 1, p) == pytest.approx(0.1)
    p = unaware(eta=0.5, s=0.2, p=0.1)
    assert requester_reward(UserType(0.8, 0.5), 1, p) == pytest.approx(0.4)
    # at w*v = s the net benefit vanishes and only the posted price remains
    p = unaware(eta=0.3, s=0.2, p=0.1)
    assert requester_reward(UserType(0.2, 0.5), 1, p) == pytest.approx(0.1)


def test_reward_plus_requester_payoff_decomposition():
    # requester payoff + reward paid = her gross surplus u - s, for any eta
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = MarketParams(eta=rng.uniform(0, 1), s=rng.uniform(0, 0.9),
                         p0=rng.uniform(0, 0.4))
        user = UserType(rng.uniform(0, 1), rng.uniform(0, 1))
        gross = utility(user, 1, p) - p.s
        total = (payoff(user, ActionChoice(Role.REQUESTER, 1), 0.0, p)
                 + requester_reward(user, 1, p))
        assert total == pytest.approx(gross, abs=1e-12)


def test_payoff_monotonicity_properties():
    rng = np.random.default_rng(1)
    p = benchmark_two_grade()
    for _ in range(100):
        v, c = rng.uniform(0, 1, 2)
        phi_a = rng.uniform(0, 0.5, 2)
        phi_b = phi_a + rng.uniform(0, 0.5, 2)
        user = UserType(v, c)
        k = int(rng.integers(1, 3))
        sens = ActionChoice(Role.SENSOR, k)
        req = ActionChoice(Role.REQUESTER, k)
        # requester payoff never depends on the sharing benefit
        assert payoff(user, req, phi_a, p) == payoff(user, req, phi_b, p)
        # sensor payoff rises one-for-one with the own-grade benefit
        gap = payoff(user, sens, phi_b, p) - payoff(user, sens, phi_a, p)
        assert gap == pytest.approx(phi_b[k - 1] - phi_a[k - 1], abs=1e-12)
        # more value helps both roles, more cost hurts only the sensor
        richer = UserType(min(v + 0.1, 1.0), c)
        costlier = UserType(v, min(c + 0.1, 1.0))
        if richer.v > v:
            assert payoff(richer, sens, phi_a, p) > payoff(user, sens, phi_a, p)
            assert payoff(richer, req, phi_a, p) > payoff(user, req, phi_a, p)
        if costlier.c > c:
            assert payoff(costlier, sens, phi_a, p) < payoff(user, sens, phi_a, p)
            assert payoff(costlier, req, phi_a, p) == payoff(user, req, phi_a, p)


def test_phi_length_must_match_grid():
    p = benchmark_two_grade()
    with pytest.raises(ValueError):
        payoff(UserType(0.5, 0.5), ActionChoice(Role.SENSOR, 1), (0.1,), p)
    with pytest.raises(ValueError):
        BenefitVector.coerce(0.1, 2)


def test_benefit_vector_validation():
    with pytest.raises(ValueError):
        BenefitVector((-0.1,))
    with pytest.raises(ValueError):
        BenefitVector((float("nan"),))
    vec = BenefitVector.coerce(0.3, 1)
    assert vec.phi == (0.3,)


def test_action_choice_validation():
    with pytest.raises(ValueError):
        ActionChoice(Role.ALIEN, 1)
    with pytest.raises(ValueError):
        ActionChoice(Role.SENSOR)
    assert ActionChoice(Role.REQUESTER, 2).quality_index == 2


def test_user_type_validation():
    with pytest.raises(ValueError):
        UserType(1.2, 0.5)
    with pytest.raises(ValueError):
        UserType(0.5, -0.1)


def test_market_params_validation():
    with pytest.raises(ValueError):
        MarketParams(eta=1.5, s=0.2)
    with pytest.raises(ValueError):
        MarketParams(eta=0.5, s=-0.1)
    with pytest.raises(ValueError):
        MarketParams(eta=0.5, s=0.2, quality_grid=(2.0, 1.0))
    with pytest.raises(ValueError):
        MarketParams(eta=0.5, s=0.2, quality_grid=(0.0, 1.0))
    with pytest.raises(ValueError):  # flat curves are not increasing across two grades
        MarketParams(eta=0.5, s=0.2, quality_grid=(1.0, 2.0))
    with pytest.raises(ValueError):
        MarketParams(eta=0.5, s=0.2, w=0.0)


def test_curve_family():
    assert Curve.one()(3.0) == 1.0
    assert Curve.log1p()(1.0) == pytest.approx(math.log(2.0))
    assert Curve.power(0.5)(4.0) == pytest.approx(2.0)
    assert Curve.affine(0.1, 0.35)(2.0) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        Curve("cubic")
    arr = Curve.power(2.0)(np.array([1.0, 2.0]))
    assert np.allclose(arr, [1.0, 4.0])


def test_curve_round_trip():
    for curve in (Curve.one(), Curve.log1p(), Curve.power(0.7), Curve.affine(0.2, 1.5)):
        assert Curve.from_dict(curve.to_dict()) == curve


def test_market_params_round_trip():
    p = benchmark_two_grade()
    assert MarketParams.from_dict(p.to_dict()) == p


def test_normalized_payoffs_match_symbolic_forms():
    # with flat curves, zero offsets and unit weight the payoffs reduce to
    # v - c + phi and eta*(v - s) - p symbol for symbol
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = MarketParams(eta=rng.uniform(0, 1), s=rng.uniform(0, 1), p0=rng.uniform(0, 0.5))
        v, c, phi = rng.uniform(0, 1, 3)
        user = UserType(v, c)
        assert payoff(user, ActionChoice(Role.SENSOR, 1), phi, p) == pytest.approx(v - c + phi)
        assert payoff(user, ActionChoice(Role.REQUESTER, 1), phi, p) == pytest.approx(
            p.eta * (v - p.s) - p.p0)
