#include "lendsim/errors.hpp"

namespace lendsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::insufficient_balance: return "InsufficientBalance";
    case ErrorCode::unknown_account: return "UnknownAccount";
    case ErrorCode::unknown_asset: return "UnknownAsset";
    case ErrorCode::unauthorized: return "Unauthorized";
    case ErrorCode::checkpoint_order_violation: return "CheckpointOrderViolation";
    case ErrorCode::overflow: return "Overflow";
    case ErrorCode::underflow: return "Underflow";
    case ErrorCode::division_by_zero: return "DivisionByZero";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::missing_feed: return "MissingFeed";
    case ErrorCode::step_before_first_point: return "StepBeforeFirstPoint";
    case ErrorCode::pool_paused: return "PoolPaused";
    case ErrorCode::unknown_pool: return "UnknownPool";
    case ErrorCode::insufficient_liquidity: return "InsufficientLiquidity";
    case ErrorCode::would_become_undercollateralized: return "WouldBecomeUndercollateralized";
    case ErrorCode::insufficient_iou: return "InsufficientIOU";
    case ErrorCode::exceeds_borrowing_power: return "ExceedsBorrowingPower";
    case ErrorCode::no_debt: return "NoDebt";
    case ErrorCode::rate_mode_mismatch: return "RateModeMismatch";
    case ErrorCode::not_liquidatable: return "NotLiquidatable";
    case ErrorCode::exceeds_close_factor: return "ExceedsCloseFactor";
    case ErrorCode::no_such_collateral: return "NoSuchCollateral";
    case ErrorCode::self_liquidation: return "SelfLiquidation";
    case ErrorCode::unknown_vault: return "UnknownVault";
    case ErrorCode::would_breach_issuance_bound: return "WouldBreachIssuanceBound";
    case ErrorCode::exceeds_issuance_bound: return "ExceedsIssuanceBound";
    case ErrorCode::vault_safe: return "VaultSafe";
    case ErrorCode::unknown_venue: return "UnknownVenue";
    case ErrorCode::insufficient_inventory: return "InsufficientInventory";
    case ErrorCode::unsupported_trade: return "UnsupportedTrade";
    case ErrorCode::insufficient_pool_liquidity: return "InsufficientPoolLiquidity";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::validation_error: return "ValidationError";
    case ErrorCode::invariant_violation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace lendsim
