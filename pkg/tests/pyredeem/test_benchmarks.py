import itertools
from dataclasses import replace

import numpy as np
import pytest

from pyredeem.benchmarks.baselines import assign_informed, baseline
from pyredeem.benchmarks.bsp import bsp_solve
from pyredeem.benchmarks.opp import opp_noisy, opp_solve, water_fill
from pyredeem.econ.server import accuracy_degradation, server_demand
from pyredeem.mechanisms.quotation import CompleteInformationMechanism
from pyredeem.metrics.evaluation import run_metrics
from pyredeem.metrics.welfare import outcome_from_state, welfare
from pyredeem.models.market import QuotationConfig
from pyredeem.models.metrics import WelfareConvention
from pyredeem.models.outcome import BaselineKind, MechanismOutcome, NoiseSpec, OppPayment
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.quotation.engine import run_quotation
from pyredeem.utils.errors import DomainError

PRICE_GRID = tuple(np.linspace(0.001, 0.04, 40))


def _absolute(outcome, users, model):
    return welfare(outcome, users, model, WelfareConvention.ABSOLUTE).welfare


class TestWaterFill:
    def test_identical_users_share_equally(self):
        users = [UserProfile(d_i=100.0, lambda_i=4.0) for _ in range(4)]
        assert water_fill(users, 100.0) == pytest.approx([25.0] * 4)

    def test_equal_marginal_privacy_cost(self):
        users = [UserProfile(d_i=100.0, lambda_i=2.0), UserProfile(d_i=100.0, lambda_i=5.0)]
        retention = water_fill(users, 120.0)
        assert retention.sum() == pytest.approx(120.0)
        assert retention == pytest.approx([77.5714, 42.4286], abs=1e-3)

    def test_free_data_goes_first(self):
        users = [
            UserProfile(d_i=100.0, lambda_i=0.0),
            UserProfile(d_i=100.0, lambda_i=0.0),
            UserProfile(d_i=100.0, lambda_i=5.0),
        ]
        assert water_fill(users, 50.0) == pytest.approx([25.0, 25.0, 0.0])
        assert water_fill(users, 250.0) == pytest.approx([100.0, 100.0, 50.0])

    def test_linear_privacy_fills_cheapest_first(self):
        users = [
            UserProfile(d_i=100.0, lambda_i=2.0, k_i=0.0),
            UserProfile(d_i=100.0, lambda_i=5.0, k_i=0.0),
        ]
        retention = water_fill(users, 150.0)
        assert retention == pytest.approx([100.0, 50.0], abs=1e-6)

    def test_bounds(self, population):
        assert water_fill(population, 0.0) == pytest.approx([0.0] * 10)
        assert water_fill(population, 1e9) == pytest.approx([6000.0] * 10)


class TestPersonalizedPricing:
    def test_beats_the_quotation(self, model, population):
        state = run_quotation(model, population, QuotationConfig())
        quoted = outcome_from_state(state, population)
        optimum = opp_solve(population, model)
        assert optimum.mechanism == "OPP"
        assert _absolute(optimum, population, model) >= _absolute(quoted, population, model)

    def test_beats_a_single_price(self, model, population):
        optimum = _absolute(opp_solve(population, model), population, model)
        single = _absolute(bsp_solve(population, model, PRICE_GRID), population, model)
        assert optimum >= single - 1e-6 * abs(single) - 1e-3

    def test_supporting_prices_pay_for_retention(self, model, population):
        outcome = opp_solve(population, model)
        prices = outcome.parameters["prices"]
        assert len(prices) == len(population)
        for price, retained, paid in zip(prices, outcome.retention, outcome.payments):
            assert price >= 0.0
            assert paid == pytest.approx(price * retained)

    def test_uninformed_users_are_left_alone(self, model, population):
        users = [replace(user, informed=index >= 5) for index, user in enumerate(population)]
        outcome = opp_solve(users, model)
        for user, retained, paid in zip(users, outcome.retention, outcome.payments):
            if not user.informed:
                assert retained == user.d_i
                assert paid == 0.0

    def test_accuracy_concern_raises_retention(self, aware_population):
        model = ServerCostModel(d_total=60000.0)
        caring = opp_solve(aware_population, model)
        careless = opp_solve([replace(u, theta_i=0.0) for u in aware_population], model)
        assert caring.total_retained >= careless.total_retained - 1e-3

    def test_noiseless_estimates_reproduce_the_optimum(self, model, population):
        exact = opp_solve(population, model, OppPayment.SUPPORTING)
        noisy = opp_noisy(population, model, NoiseSpec(sigma=0.0, seed=5))
        assert noisy.mechanism == "OPP-noisy"
        assert noisy.retention == exact.retention
        assert noisy.payments == exact.payments

    def test_noisy_estimates(self, model, population):
        first = opp_noisy(population, model, NoiseSpec(sigma=0.3, seed=5))
        second = opp_noisy(population, model, NoiseSpec(sigma=0.3, seed=5))
        assert first.retention == second.retention
        assert first.parameters["sigma"] == 0.3
        for user, retained in zip(population, first.retention):
            assert 0.0 <= retained <= user.d_i + 1e-6
        exact = _absolute(opp_solve(population, model), population, model)
        assert _absolute(first, population, model) <= exact + 1e-6 * abs(exact)

    def test_noise_must_be_nonnegative(self):
        with pytest.raises(DomainError):
            NoiseSpec(sigma=-0.1)

    def test_bundle_payment_leaves_only_the_accuracy_gain(self, aware_population):
        model = ServerCostModel(d_total=60000.0)
        outcome = opp_solve(aware_population, model)
        assert outcome.parameters["payment"] == "bundle"
        gain = accuracy_degradation(model, model.d_total) - accuracy_degradation(
            model, model.d_total - outcome.total_retained
        )
        payoffs = welfare(outcome, aware_population, model).user_payoffs
        for user, payoff in zip(aware_population, payoffs):
            assert payoff == pytest.approx(user.theta_i * gain, rel=1e-6, abs=1e-9)

    def test_bundle_fairness_follows_accuracy_concern(self, aware_population):
        model = ServerCostModel(d_total=60000.0)
        jain = run_metrics(opp_solve(aware_population, model), aware_population, model).jain
        assert jain == pytest.approx(132.25 / 168.75, rel=1e-6)
        assert 0.73 <= jain <= 0.84

    def test_supporting_prices_equalise_marginal_cost(self, model, population):
        outcome = opp_solve(population, model, OppPayment.SUPPORTING)
        prices = outcome.parameters["prices"]
        interior = [
            price
            for user, price, retained in zip(population, prices, outcome.retention)
            if 1e-6 < retained < user.d_i - 1e-6
        ]
        assert len(interior) >= 2
        assert interior == pytest.approx([interior[0]] * len(interior), rel=1e-4)

    def test_matches_exhaustive_enumeration(self):
        model = ServerCostModel(d_total=45.0, A2=0.05, alpha=30.0, T0=0.01)
        users = [
            UserProfile(d_i=15.0, lambda_i=0.5, theta_i=0.2),
            UserProfile(d_i=15.0, lambda_i=2.0),
            UserProfile(d_i=15.0, lambda_i=6.0, theta_i=1.0),
        ]
        best = max(
            welfare(
                MechanismOutcome("grid", tuple(float(y) for y in kept), (0.0, 0.0, 0.0)),
                users,
                model,
            ).welfare
            for kept in itertools.product(range(16), repeat=3)
        )
        optimum = welfare(opp_solve(users, model), users, model).welfare
        assert optimum >= best - 1e-6 * abs(best) - 1e-6

    def test_beats_complete_information(self, model, population):
        optimum = _absolute(opp_solve(population, model), population, model)
        ciq = CompleteInformationMechanism(PriceSchedule()).solve(population, model, seed=0)
        assert optimum >= _absolute(ciq, population, model) - 1e-6 * abs(optimum) - 1e-3


class TestSinglePrice:
    def test_price_comes_from_grid(self, model, population):
        outcome = bsp_solve(population, model, PRICE_GRID)
        price = outcome.parameters["price"]
        assert price in PRICE_GRID
        assert outcome.parameters["rationing"] == "proportional"
        for retained, paid in zip(outcome.retention, outcome.payments):
            assert paid == pytest.approx(price * retained)
        assert outcome.total_retained <= server_demand(model, 0.0, price) + 1e-6

    def test_server_payoff_is_recorded(self, model, population):
        outcome = bsp_solve(population, model, PRICE_GRID)
        breakdown = welfare(outcome, population, model, WelfareConvention.RELATIVE)
        assert breakdown.server_payoff == pytest.approx(outcome.parameters["server_payoff"])

    def test_rejects_bad_grids(self, model, population):
        with pytest.raises(DomainError):
            bsp_solve(population, model, [])
        with pytest.raises(DomainError):
            bsp_solve(population, model, [0.0, 0.01])


class TestBaselines:
    def test_no_redemption(self, model, population):
        outcome = baseline(BaselineKind.DNR, population, model)
        assert outcome.mechanism == "DNR"
        assert outcome.total_retained == pytest.approx(60000.0)
        assert outcome.total_payments == 0.0

    def test_gdpr_keeps_only_the_uninformed(self, model, population):
        users = [replace(user, informed=index < 3) for index, user in enumerate(population)]
        outcome = baseline(BaselineKind.GDPR, users, model)
        assert outcome.retention[:3] == (0.0, 0.0, 0.0)
        assert outcome.total_retained == pytest.approx(7 * 6000.0)

    def test_full_compensation(self, model, population):
        outcome = baseline(BaselineKind.FULL, population, model)
        assert outcome.total_retained == pytest.approx(60000.0)
        assert outcome.payments[1] == pytest.approx(3.0 * np.log(6001.0))

    def test_reassigned_informed_flags(self, model, population, rng):
        outcome = baseline(BaselineKind.GDPR, population, model, rho=0.3, rng=rng)
        assert sum(outcome.parameters["informed"]) == 3
        assert outcome.total_retained == pytest.approx(7 * 6000.0)
        with pytest.raises(DomainError):
            baseline(BaselineKind.GDPR, population, model, rho=0.3)

    def test_population_must_match_model(self, population):
        with pytest.raises(DomainError):
            baseline(BaselineKind.DNR, population, ServerCostModel(d_total=1000.0))

    @pytest.mark.parametrize("rho, count", [(0.0, 0), (0.35, 4), (0.5, 5), (1.0, 10)])
    def test_assign_informed_counts(self, rho, count, rng):
        assert sum(assign_informed(10, rho, rng)) == count

    def test_assign_informed_is_seeded(self):
        first = assign_informed(20, 0.4, np.random.default_rng(1))
        second = assign_informed(20, 0.4, np.random.default_rng(1))
        assert first == second

    def test_assign_informed_rejects_bad_ratio(self, rng):
        with pytest.raises(DomainError):
            assign_informed(10, 1.5, rng)
