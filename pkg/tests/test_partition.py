import math

import numpy as np
import pytest

from crowdmarket import (ActionChoice, Curve, MarketParams, PartitionGrid,
                         QuadratureSpec, Role, UserType, best_response_actions,
                         best_response_quality, best_response_unaware,
                         measure_partition)


def unaware(eta=0.5, s=0.2, p=0.0):
    return MarketParams(eta=eta, s=s, p0=p)


def benchmark_two_grade(s=0.2):
    return MarketParams(eta=1.0, s=s, p0=0.1, p1=0.35, quality_grid=(1.0, 2.0),
                        alpha_v=0.4, alpha_c=0.1,
                        value_curve=Curve.log1p(), cost_curve=Curve.power(0.5))


def test_best_response_unaware_corners():
    p = unaware()
    assert best_response_unaware(UserType(1.0, 0.0), 0.0, p).role is Role.SENSOR
    assert best_response_unaware(UserType(0.0, 1.0), 0.0, p).role is Role.ALIEN


def test_best_response_unaware_requester_case():
    # hand oracle: payoffs S = 0.5-0.9+0.1 = -0.3, R = 0.5*(0.5-0.2) = 0.15, A = 0
    p = unaware(eta=0.5, s=0.2, p=0.0)
    choice = best_response_unaware(UserType(0.5, 0.9), 0.1, p)
    assert choice == ActionChoice(Role.REQUESTER, 1)


def test_best_response_quality_corners():
    p = benchmark_two_grade()
    assert best_response_quality(UserType(0.0, 1.0), (0.0, 0.0), p).role is Role.ALIEN


def test_best_response_quality_enumerated_oracle():
    # all five payoffs at v=1, c=0, phi=0, by hand:
    #   sense lo:  0.4+ln2 - 0.1        = 0.9931
    #   sense hi:  0.4+ln3 - 0.1        = 1.3986  <- best
    #   request lo: 0.4+ln2 - 0.2 - 0.45 = 0.4431
    #   request hi: 0.4+ln3 - 0.2 - 0.80 = 0.4986
    p = benchmark_two_grade()
    vals = {
        ("s", 1): 0.4 + math.log(2) - 0.1,
        ("s", 2): 0.4 + math.log(3) - 0.1,
        ("r", 1): 0.4 + math.log(2) - 0.2 - 0.45,
        ("r", 2): 0.4 + math.log(3) - 0.2 - 0.80,
    }
    assert max(vals, key=vals.get) == ("s", 2)
    choice = best_response_quality(UserType(1.0, 0.0), (0.0, 0.0), p)
    assert choice == ActionChoice(Role.SENSOR, 2)


def test_best_response_quality_reduces_to_unaware():
    p = unaware(eta=1.0, s=0.2, p=0.1)
    rng = np.random.default_rng(4)
    for _ in range(200):
        user = UserType(rng.uniform(0, 1), rng.uniform(0, 1))
        phi = rng.uniform(0, 0.8)
        assert best_response_quality(user, (phi,), p) == best_response_unaware(user, phi, p)


def test_sensor_quality_tie_breaks_to_higher_grade():
    # identity value and cost curves with v == c make every sensing payoff
    # equal exactly (same float expression); the higher grade must win
    p = MarketParams(eta=1.0, s=0.2, p0=0.1, p1=0.35, quality_grid=(1.0, 2.0),
                     value_curve=Curve.affine(0.0, 1.0), cost_curve=Curve.affine(0.0, 1.0))
    phi = (0.9, 0.9)  # dominate the other actions, equal own-grade benefit
    choice = best_response_quality(UserType(0.5, 0.5), phi, p)
    assert choice == ActionChoice(Role.SENSOR, 2)


def test_role_tie_breaks_sensor_first():
    # quarters are exact in binary: sensor 0.75-0.75+0.25 and requester
    # (0.75-0.25)-0.25 both equal 0.25 with no rounding; sensor must win
    p = unaware(eta=1.0, s=0.25, p=0.25)
    user = UserType(0.75, 0.75)
    assert best_response_unaware(user, 0.25, p) == ActionChoice(Role.SENSOR, 1)


def test_measure_partition_saturated_sensor_region():
    # huge benefit with no viable requesters: everyone senses
    p = unaware(eta=1.0, s=1.1, p=0.0)
    shares = measure_partition(1.5, p, QuadratureSpec(200), mode="unaware")
    assert shares.sensor[0] == pytest.approx(1.0)
    assert shares.requester[0] == 0.0


def test_measure_partition_even_split_without_sharing():
    p = unaware(eta=1.0, s=10.0, p=0.0)
    shares = measure_partition(0.0, p, QuadratureSpec(800), mode="unaware")
    assert shares.sensor[0] == pytest.approx(0.5, abs=1e-9)
    assert shares.alien == pytest.approx(0.5, abs=1e-9)
    assert shares.requester[0] == 0.0


def test_measure_partition_hand_geometry():
    # eta=1, p=0, s=0.2, phi=0.8: sensors fill {v > c-0.8}, requesters vanish
    # because the sensing region swallows every v > s row; hand area 0.98 / 0.02
    p = unaware(eta=1.0, s=0.2, p=0.0)
    quad = QuadratureSpec(800)
    shares = measure_partition(0.8, p, quad, mode="unaware")
    assert shares.sensor[0] == pytest.approx(0.98, abs=2.0 / quad.resolution)
    assert shares.alien == pytest.approx(0.02, abs=2.0 / quad.resolution)
    assert shares.requester[0] == 0.0


def test_shares_sum_to_one():
    rng = np.random.default_rng(5)
    quad = QuadratureSpec(300)
    for _ in range(20):
        p = unaware(eta=rng.uniform(0.1, 1.0), s=rng.uniform(0, 1.2), p=rng.uniform(0, 0.4))
        shares = measure_partition(rng.uniform(0, 1.5), p, quad)
        assert shares.total == pytest.approx(1.0, abs=1e-12)
    qp = benchmark_two_grade()
    for _ in range(10):
        shares = measure_partition(rng.uniform(0, 1, 2), qp, quad)
        assert shares.total == pytest.approx(1.0, abs=1e-12)


def test_sensor_share_monotone_in_own_benefit():
    rng = np.random.default_rng(6)
    qp = benchmark_two_grade()
    quad = QuadratureSpec(200)
    for _ in range(25):
        base = rng.uniform(0, 0.6, 2)
        k = int(rng.integers(0, 2))
        bumped = base.copy()
        bumped[k] += rng.uniform(0, 0.5)
        lo = measure_partition(base, qp, quad)
        hi = measure_partition(bumped, qp, quad)
        assert hi.sensor[k] >= lo.sensor[k] - 1e-12


def test_quadrature_resolution_convergence():
    # halving the cell width moves each share by no more than O(1/M)
    p = unaware(eta=0.6, s=0.25, p=0.05)
    qp = benchmark_two_grade()
    for params, phi in ((p, 0.3), (qp, (0.2, 0.1))):
        prev = measure_partition(phi, params, QuadratureSpec(200))
        nxt = measure_partition(phi, params, QuadratureSpec(400))
        for a, b in zip(prev.sensor + prev.requester + (prev.alien,),
                        nxt.sensor + nxt.requester + (nxt.alien,)):
            assert abs(a - b) < 5.0 / 200


def test_monte_carlo_agreement():
    rng = np.random.default_rng(7)
    n = 1_000_000
    v = rng.random(n)
    c = rng.random(n)
    for params, phi in ((unaware(eta=0.5, s=0.2), 0.134491),
                        (benchmark_two_grade(), (0.174441, 0.099002))):
        actions = best_response_actions(v, c, phi, params)
        shares = measure_partition(phi, params, QuadratureSpec(800))
        kq = params.n_qualities
        counts = np.bincount(actions, minlength=2 * kq + 1) / n
        for k in range(1, kq + 1):
            assert counts[kq - k] == pytest.approx(shares.sensor[k - 1], abs=3e-3)
            assert counts[2 * kq - k] == pytest.approx(shares.requester[k - 1], abs=3e-3)
        assert counts[2 * kq] == pytest.approx(shares.alien, abs=3e-3)


def test_row_exact_matches_cell_counting():
    # the interval-based measure and a plain per-cell argmax count must agree
    # up to one cell width; they are independent implementations
    qp = benchmark_two_grade()
    grid = PartitionGrid(qp, QuadratureSpec(400))
    for phi in ((0.0, 0.0), (0.2, 0.1), (0.05, 0.4)):
        exact = grid.shares_at(phi)
        cells = grid.shares_of_cells(grid.classify(phi))
        for a, b in zip(exact.sensor + exact.requester + (exact.alien,),
                        cells.sensor + cells.requester + (cells.alien,)):
            assert abs(a - b) < 3.0 / 400
        for a, b in zip(exact.requester_benefit, cells.requester_benefit):
            assert abs(a - b) < 3.0 / 400


def test_requester_benefit_integral():
    # with eta=1 the paid reward equals the posted price, so the benefit
    # integral is price * requester mass exactly
    qp = benchmark_two_grade()
    shares = measure_partition((0.1, 0.2), qp, QuadratureSpec(500))
    for k in range(2):
        assert shares.requester_benefit[k] == pytest.approx(
            qp.prices[k] * shares.requester[k], abs=1e-12)


def test_measure_partition_mode_validation():
    with pytest.raises(ValueError):
        measure_partition(0.0, unaware(), mode="bogus")
    with pytest.raises(ValueError):
        measure_partition((0.0, 0.0), benchmark_two_grade(), mode="unaware")


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(resolution=1)
    with pytest.raises(ValueError):
        QuadratureSpec(rule="trapezoid")
