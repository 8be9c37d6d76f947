#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lendsim {

enum class ErrorCode {
  insufficient_balance,
  unknown_account,
  unknown_asset,
  unauthorized,
  checkpoint_order_violation,
  overflow,
  underflow,
  division_by_zero,
  parse_error,
  missing_feed,
  step_before_first_point,
  pool_paused,
  unknown_pool,
  insufficient_liquidity,
  would_become_undercollateralized,
  insufficient_iou,
  exceeds_borrowing_power,
  no_debt,
  rate_mode_mismatch,
  not_liquidatable,
  exceeds_close_factor,
  no_such_collateral,
  self_liquidation,
  unknown_vault,
  would_breach_issuance_bound,
  exceeds_issuance_bound,
  vault_safe,
  unknown_venue,
  insufficient_inventory,
  unsupported_trade,
  insufficient_pool_liquidity,
  invalid_argument,
  validation_error,
  invariant_violation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every protocol-level failure is reported through this exception. Callers
/// that model on-chain behaviour (agents, flash-loan plans) catch it and
/// record the code instead of aborting.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  explicit ProtocolError(ErrorCode code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lendsim
