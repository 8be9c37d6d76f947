#pragma once

#include <optional>
#include <vector>

#include "lendsim/cdp.hpp"
#include "lendsim/ledger.hpp"
#include "lendsim/lending.hpp"
#include "lendsim/oracle.hpp"
#include "lendsim/venues.hpp"

namespace lendsim {

struct WorldCheckpoint {
  std::size_t depth{};
};

/// Protocol state that lives outside the ledger, captured for comparisons.
struct ProtocolSnapshot {
  LendingMarket::State lending;
  std::optional<VaultEngine::State> cdp;
  friend bool operator==(const ProtocolSnapshot&, const ProtocolSnapshot&) = default;
};

/// Everything one simulation mutates. Owned and mutated by a single thread;
/// move it between threads behind a unique_ptr.
class World {
 public:
  World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  Ledger ledger;
  PriceOracle oracle;
  LendingMarket lending;
  Venues venues;
  std::optional<VaultEngine> cdp;

  AccountId fee_sink{};
  AssetId gas_asset{};
  Wad gas_fee{};

  VaultEngine& enable_cdp(CdpParams params);

  /// Checkpoints both the ledger journal and all off-ledger protocol state.
  WorldCheckpoint checkpoint();
  void rollback(WorldCheckpoint cp);
  void commit(WorldCheckpoint cp);

  ProtocolSnapshot snapshot() const;

 private:
  struct Frame {
    CheckpointId ledger_cp;
    ProtocolSnapshot state;
  };
  std::vector<Frame> frames_;
};

}  // namespace lendsim
