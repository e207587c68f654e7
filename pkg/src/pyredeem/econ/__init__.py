from .privacy import min_price_for, privacy_utility, reservation_price, user_supply
from .server import buy_all_price, optimal_retention, server_cost, server_demand
