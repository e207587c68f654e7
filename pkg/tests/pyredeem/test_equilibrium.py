from dataclasses import replace

import numpy as np
import pytest

from pyredeem.econ.privacy import user_supply
from pyredeem.econ.server import optimal_retention, server_demand
from pyredeem.equilibrium.ciq import (
    ciq_outcome,
    dominance_check,
    optimize_schedule,
    schedule_objective,
)
from pyredeem.equilibrium.induction import backward_induction, supply_grid
from pyredeem.equilibrium.responses import (
    best_response,
    marginal_payoff,
    payoff_curvature,
    selling_payoff,
    simultaneous_responses,
)
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError

PRICES = (0.05, 0.08, 0.12)


def _payoff(user, y, redeemed, price, model):
    privacy = user.lambda_i * np.log1p(user.d_i - y)
    accuracy = model.A1 * np.exp(model.A2 * redeemed * model.log_a) - model.A3
    return privacy + price * y - user.theta_i * accuracy


def _brute_force_path(users, prices, model):
    """Sequential best responses on the integer grid, solved from the last seller back."""
    sizes = [int(u.d_i) for u in users]
    total = sum(sizes)
    first, middle, last = users
    s = np.arange(total + 1)[:, None]
    y = np.arange(sizes[2] + 1)[None, :]
    r2 = np.argmax(_payoff(last, y, model.d_total - s - y, prices[2], model), axis=1)

    s = np.arange(sizes[0] + 1)[:, None]
    y = np.arange(sizes[1] + 1)[None, :]
    later = r2[s + y]
    r1 = np.argmax(_payoff(middle, y, model.d_total - s - y - later, prices[1], model), axis=1)

    y0 = np.arange(sizes[0] + 1)
    y1 = r1[y0]
    y2 = r2[y0 + y1]
    best = int(np.argmax(_payoff(first, y0, model.d_total - y0 - y1 - y2, prices[0], model)))
    mid = int(r1[best])
    return [float(best), float(mid), float(r2[best + mid])]


class TestResponses:
    def test_privacy_only_response_is_supply(self, model):
        for lam, k in ((10.0, 1.0), (2.0, 0.5), (30.0, 0.8)):
            user = UserProfile(d_i=6000.0, lambda_i=lam, k_i=k)
            for B in (0.005, 0.01, 0.03):
                assert best_response(user, 1000.0, B, model) == pytest.approx(
                    user_supply(user, 0.0, B), abs=1e-4
                )

    def test_accuracy_concern_raises_sales(self, small_model):
        plain = UserProfile(d_i=100.0, lambda_i=5.0)
        caring = replace(plain, theta_i=3.0)
        assert best_response(caring, 50.0, 0.08, small_model) > best_response(
            plain, 50.0, 0.08, small_model
        )

    def test_marginal_payoff_vanishes_at_interior_response(self, small_model):
        user = UserProfile(d_i=100.0, lambda_i=5.0, theta_i=3.0)
        y = best_response(user, 50.0, 0.08, small_model)
        assert 0.0 < y < user.d_i
        assert marginal_payoff(user, y, 50.0, 0.08, small_model) == pytest.approx(0.0, abs=1e-6)
        with pytest.raises(DomainError):
            marginal_payoff(user, 101.0, 50.0, 0.08, small_model)

    def test_payoff_is_concave(self, small_users, small_model):
        for user in small_users:
            for y in (0.0, 25.0, 99.0):
                assert payoff_curvature(user, y, 50.0, small_model) <= 0.0

    def test_simultaneous_without_accuracy_concern(self, small_model):
        users = [UserProfile(d_i=100.0, lambda_i=lam) for lam in (2.0, 5.0, 9.0)]
        prices = np.array([[0.05, 0.1], [0.08, 0.1], [0.12, 0.1]])
        amounts = simultaneous_responses(users, prices, small_model)
        assert amounts.shape == (3, 2)
        for i, user in enumerate(users):
            for j in range(2):
                assert amounts[i, j] == pytest.approx(
                    user_supply(user, 0.0, prices[i, j]), abs=1e-4
                )

    def test_simultaneous_is_a_fixed_point(self, small_users, small_model):
        prices = np.array(PRICES)[:, None]
        amounts = simultaneous_responses(small_users, prices, small_model)[:, 0]
        for i, user in enumerate(small_users):
            others = float(amounts.sum() - amounts[i])
            assert amounts[i] == pytest.approx(
                best_response(user, others, PRICES[i], small_model), abs=1e-4
            )

    def test_simultaneous_with_nobody(self, small_model):
        assert simultaneous_responses([], np.zeros((0, 2)), small_model).size == 0


class TestBackwardInduction:
    def test_matches_brute_force(self, small_users, small_model):
        result = backward_induction(small_users, PRICES, small_model, grid_step=1.0)
        oracle = _brute_force_path(small_users, PRICES, small_model)
        assert list(result.profile.amounts) == pytest.approx(oracle, abs=2.0)

    def test_profile_bookkeeping(self, small_users, small_model):
        profile = backward_induction(small_users, PRICES, small_model, grid_step=1.0).profile
        assert profile.order == (0, 1, 2)
        assert profile.periods == (0, 1, 2)
        assert profile.terminal_round == 2
        assert profile.cumulative == pytest.approx(tuple(np.cumsum(profile.amounts)))
        assert profile.total == pytest.approx(sum(profile.amounts))

    def test_grid_covers_total_supply(self, small_users):
        grid = supply_grid(small_users, 7.0)
        assert grid[0] == 0.0
        assert grid[-1] >= 300.0
        assert np.all(np.diff(grid) > 0.0)

    def test_rejects_bad_inputs(self, small_users, small_model):
        with pytest.raises(DomainError):
            backward_induction(small_users, PRICES, small_model, grid_step=0.0)
        with pytest.raises(DomainError):
            backward_induction(small_users, PRICES[:2], small_model)

    def test_nobody_to_induct(self, small_model):
        result = backward_induction([], [], small_model)
        assert result.profile.amounts == ()
        assert result.tables == ()

    def test_coarse_grid_is_refined(self, small_model):
        users = [
            UserProfile(d_i=100.0, lambda_i=0.0),
            UserProfile(d_i=100.0, lambda_i=5.0, theta_i=50.0),
        ]
        result = backward_induction(users, [0.05, 0.05], small_model, grid_step=1e4)
        assert result.grid_step < 1e4
        assert result.grid_step >= 1.0
        first, second = result.profile.amounts
        assert first == pytest.approx(100.0)
        assert second == pytest.approx(
            best_response(users[1], 100.0, 0.05, small_model), abs=1e-6
        )
        assert abs(float(result.tables[1].response_at(100.0)) - second) <= 1.0

    def test_fine_grid_is_kept(self, small_users, small_model):
        result = backward_induction(small_users, PRICES, small_model, grid_step=1.0)
        assert result.grid_step == 1.0


class TestCompleteInformation:
    def test_profile_is_feasible(self, small_users, small_model):
        schedule = PriceSchedule(B0=0.01, dB=0.01)
        profile = ciq_outcome(small_users, schedule, small_model, grid_step=1.0)
        assert sorted(profile.order) == [0, 1, 2]
        assert profile.iterations >= 1
        for index, amount, period, price in zip(
            profile.order, profile.amounts, profile.periods, profile.prices
        ):
            assert 0.0 <= amount <= small_users[index].d_i + 1e-9
            assert price == pytest.approx(schedule.price_at(period))
        assert profile.total <= optimal_retention(small_model).y_max + 1e-6
        assert list(profile.periods) == sorted(profile.periods)

    def test_uninformed_users_stay_out(self, small_users, small_model):
        users = [small_users[0], replace(small_users[1], informed=False), small_users[2]]
        profile = ciq_outcome(users, PriceSchedule(B0=0.01, dB=0.01), small_model, 1.0)
        assert 1 not in profile.order

    def test_nobody_informed(self, small_users, small_model):
        users = [replace(user, informed=False) for user in small_users]
        profile = ciq_outcome(users, PriceSchedule(), small_model)
        assert profile.order == ()
        assert profile.total == 0.0

    def test_privacy_only_sales_are_closed_form_supplies(self, small_model):
        users = [UserProfile(d_i=100.0, lambda_i=lam) for lam in (2.0, 5.0, 9.0)]
        schedule = PriceSchedule(B0=0.01, dB=0.01)
        profile = ciq_outcome(users, schedule, small_model, grid_step=1.0)
        y_max = optimal_retention(small_model).y_max
        retained = 0.0
        for index, amount, price in zip(profile.order, profile.amounts, profile.prices):
            room = server_demand(small_model, retained, price) if retained < y_max else 0.0
            expected = min(user_supply(users[index], 0.0, price), room)
            assert amount == pytest.approx(expected, abs=1e-5)
            retained += amount

    def test_no_seller_gains_from_an_earlier_round(self, small_model):
        users = [UserProfile(d_i=100.0, lambda_i=lam) for lam in (2.0, 5.0, 9.0)]
        schedule = PriceSchedule(B0=0.01, dB=0.01)
        profile = ciq_outcome(users, schedule, small_model, grid_step=1.0)
        y_max = optimal_retention(small_model).y_max
        sales = dict(zip(profile.order, zip(profile.periods, profile.amounts)))
        total = sum(profile.amounts)
        for index, (period, amount) in sales.items():
            others = total - amount
            realised = selling_payoff(
                users[index], amount, others, schedule.price_at(period), small_model
            )
            for earlier in range(period):
                price = schedule.price_at(earlier)
                before = sum(
                    a for j, (t, a) in sales.items() if j != index and (t, j) < (earlier, index)
                )
                room = server_demand(small_model, before, price) if before < y_max else 0.0
                sold = min(user_supply(users[index], 0.0, price), room)
                deviation = selling_payoff(users[index], sold, others, price, small_model)
                assert deviation <= realised + 1e-6

    def test_random_splits_favour_one_round(self, rng):
        schedule = PriceSchedule()
        for _ in range(200):
            t, tau = sorted(rng.choice(20, size=2, replace=False))
            a_t, a_tau = rng.uniform(0.1, 100.0, size=2)
            assert dominance_check(int(t), int(tau), a_t, a_tau, schedule)

    def test_dominance_of_waiting(self):
        schedule = PriceSchedule()
        certificate = dominance_check(1, 3, 10.0, 5.0, schedule)
        assert certificate.split_payoff == pytest.approx(0.04)
        assert certificate.concentrated_payoff == pytest.approx(0.06)
        assert certificate
        assert not certificate.equal

    def test_dominance_without_early_sale(self):
        certificate = dominance_check(1, 3, 0.0, 5.0, PriceSchedule())
        assert certificate.equal
        assert not certificate

    def test_dominance_rejects_bad_rounds(self):
        with pytest.raises(DomainError):
            dominance_check(3, 3, 1.0, 1.0, PriceSchedule())
        with pytest.raises(DomainError):
            dominance_check(1, 3, -1.0, 1.0, PriceSchedule())

    def test_optimize_schedule_picks_the_cheapest(self, small_users, small_model):
        choice = optimize_schedule(
            small_users, small_model, [0.01, 0.05], [0.01, 0.02], grid_step=2.0
        )
        assert choice.evaluated
        best = min(objective for _, _, objective in choice.evaluated)
        assert choice.objective == pytest.approx(best)
        assert (choice.B0, choice.dB, choice.objective) in choice.evaluated
        profile = ciq_outcome(
            small_users, PriceSchedule(choice.B0, choice.dB), small_model, 2.0
        )
        assert schedule_objective(profile, small_model) == pytest.approx(choice.objective)

    def test_optimize_schedule_needs_grids(self, small_users, small_model):
        with pytest.raises(DomainError):
            optimize_schedule(small_users, small_model, [], [0.01])
