#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <initializer_list>
#include <string>
#include <utility>

#include "lendsim/lending.hpp"
#include "lendsim/world.hpp"

namespace testing_support {

using namespace lendsim;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline Wad W(const char* text) { return Wad::parse(text); }

inline cpp_int big(u128 v) {
  cpp_int out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(v);
  return out;
}

inline cpp_rational Q(Wad w) { return cpp_rational(big(w.raw()), big(Wad::kScale)); }
inline cpp_rational Q(const char* text) { return Q(W(text)); }

/// Rational to wad raw units, rounding toward zero.
inline u128 to_raw(const cpp_rational& q) {
  cpp_int scaled = numerator(q) * big(Wad::kScale) / denominator(q);
  return static_cast<u128>(scaled);
}

inline double to_double(const cpp_rational& q) { return static_cast<double>(q); }

inline PoolParams pool_params(AssetId asset, const char* c = "0.75", const char* l = "0.8", const char* b = "0.05",
                              const char* kappa = "0.5", IouMode mode = IouMode::exchange_rate) {
  PoolParams p;
  p.asset = asset;
  p.collateral_factor = W(c);
  p.liquidation_threshold = W(l);
  p.liquidation_bonus = W(b);
  p.close_factor = W(kappa);
  p.iou_mode = mode;
  p.rate_model = RateModelParams{W("0.0001"), W("0.001"), W("0.01"), W("0.8"), W("0.1")};
  p.flash_fee = Wad{};
  return p;
}

/// A world with constant prices where genesis minting stays open.
class Desk {
 public:
  World w;

  AssetId asset(const std::string& symbol, const char* price, std::initializer_list<Authority> auth = {Authority::genesis}) {
    AssetId id = w.ledger.add_asset(symbol, auth);
    w.oracle.set_feed(id, PriceFeed::replay({{0, W(price)}}));
    return id;
  }

  AccountId user(const std::string& name) { return w.ledger.add_account(name, AccountKind::user); }

  void fund(AccountId who, AssetId asset, Wad amount) {
    w.ledger.mint(Authority::genesis, who, asset, amount, JournalTag::genesis);
  }

  AccountId user(const std::string& name, std::initializer_list<std::pair<AssetId, const char*>> balances) {
    AccountId id = user(name);
    for (const auto& [asset, amount] : balances) fund(id, asset, W(amount));
    return id;
  }

  PoolId pool(const std::string& id, const PoolParams& params, const char* seed_liquidity = nullptr) {
    PoolId pid = w.lending.add_pool(id, params);
    if (seed_liquidity) {
      AccountId lp = user("lp:" + id);
      fund(lp, params.asset, W(seed_liquidity));
      w.lending.deposit(lp, pid, W(seed_liquidity));
    }
    return pid;
  }
};

}  // namespace testing_support
