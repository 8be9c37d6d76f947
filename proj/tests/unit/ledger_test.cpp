#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "lendsim/errors.hpp"
#include "lendsim/ledger.hpp"
#include "support.hpp"

using namespace lendsim;
using namespace testing_support;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a ProtocolError";
  return ErrorCode::invalid_argument;
}

struct Book {
  Ledger ledger;
  AssetId eth = ledger.add_asset("ETH", {Authority::genesis});
  AssetId dai = ledger.add_asset("DAI", {Authority::genesis, Authority::cdp});
  AccountId alice = ledger.add_account("alice", AccountKind::user);
  AccountId bob = ledger.add_account("bob", AccountKind::user);
};

}  // namespace

TEST(Ledger, TransferMovesBalance) {
  Book b;
  b.ledger.mint(Authority::genesis, b.alice, b.eth, W("10"), JournalTag::genesis);
  b.ledger.transfer(b.alice, b.bob, b.eth, W("4"));
  EXPECT_EQ(b.ledger.balance(b.alice, b.eth), W("6"));
  EXPECT_EQ(b.ledger.balance(b.bob, b.eth), W("4"));
  EXPECT_EQ(b.ledger.supply(b.eth), W("10"));
  EXPECT_EQ(b.ledger.journal().size(), 2u);
}

TEST(Ledger, RejectsBadOperations) {
  Book b;
  EXPECT_EQ(code_of([&] { b.ledger.transfer(b.alice, b.bob, b.eth, W("1")); }), ErrorCode::insufficient_balance);
  EXPECT_EQ(code_of([&] { b.ledger.transfer(b.alice, AccountId{99}, b.eth, W("0")); }), ErrorCode::unknown_account);
  EXPECT_EQ(code_of([&] { b.ledger.balance(b.alice, AssetId{7}); }), ErrorCode::unknown_asset);
  EXPECT_EQ(code_of([&] { b.ledger.mint(Authority::cdp, b.alice, b.eth, W("1"), JournalTag::dai_draw); }),
            ErrorCode::unauthorized);
  b.ledger.seal_genesis();
  EXPECT_EQ(code_of([&] { b.ledger.mint(Authority::genesis, b.alice, b.eth, W("1"), JournalTag::genesis); }),
            ErrorCode::unauthorized);
  b.ledger.mint(Authority::cdp, b.alice, b.dai, W("5"), JournalTag::dai_draw);
  EXPECT_EQ(b.ledger.supply(b.dai), W("5"));
  EXPECT_TRUE(b.ledger.journal().size() == 1);
}

TEST(Ledger, FailedTransferLeavesNoTrace) {
  Book b;
  b.ledger.mint(Authority::genesis, b.alice, b.eth, W("1"), JournalTag::genesis);
  auto before = std::vector<JournalRecord>(b.ledger.journal().begin(), b.ledger.journal().end());
  EXPECT_THROW(b.ledger.transfer(b.alice, b.bob, b.eth, W("2")), ProtocolError);
  EXPECT_EQ(std::vector<JournalRecord>(b.ledger.journal().begin(), b.ledger.journal().end()), before);
  EXPECT_EQ(b.ledger.balance(b.alice, b.eth), W("1"));
}

TEST(Ledger, NestedCheckpointsRollBackInnermostOnly) {
  Book b;
  b.ledger.mint(Authority::genesis, b.alice, b.eth, W("10"), JournalTag::genesis);
  CheckpointId outer = b.ledger.checkpoint();
  b.ledger.transfer(b.alice, b.bob, b.eth, W("1"));
  CheckpointId inner = b.ledger.checkpoint();
  b.ledger.transfer(b.alice, b.bob, b.eth, W("2"));
  EXPECT_EQ(code_of([&] { b.ledger.rollback(outer); }), ErrorCode::checkpoint_order_violation);
  b.ledger.rollback(inner);
  EXPECT_EQ(b.ledger.balance(b.bob, b.eth), W("1"));
  b.ledger.commit(outer);
  EXPECT_EQ(b.ledger.open_checkpoints(), 0u);
  EXPECT_EQ(b.ledger.journal().size(), 2u);
}

TEST(Ledger, JournalLineFormat) {
  Book b;
  b.ledger.mint(Authority::genesis, b.alice, b.eth, W("1.5"), JournalTag::genesis);
  b.ledger.transfer(b.alice, b.bob, b.eth, W("0.5"), JournalTag::deposit);
  EXPECT_EQ(b.ledger.journal_line(b.ledger.journal()[0]),
            R"({"seq":1,"op":"mint","from":null,"to":"alice","asset":"ETH","amount":"1.5","tag":"genesis"})");
  std::ostringstream out;
  b.ledger.write_journal(out, 1);
  EXPECT_EQ(out.str(),
            "{\"seq\":2,\"op\":\"transfer\",\"from\":\"alice\",\"to\":\"bob\",\"asset\":\"ETH\",\"amount\":\"0.5\","
            "\"tag\":\"deposit\"}\n");
}

// Random operation sequences against an independent map-of-integers model,
// with checkpoints and rollbacks interleaved.
TEST(Ledger, RandomSequencesMatchModelAndReplay) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 20; ++round) {
    Ledger ledger;
    std::vector<AssetId> assets{ledger.add_asset("A", {Authority::genesis}), ledger.add_asset("B", {Authority::genesis})};
    std::vector<AccountId> accounts;
    for (int i = 0; i < 5; ++i) accounts.push_back(ledger.add_account("u" + std::to_string(i), AccountKind::user));

    using Model = std::map<std::pair<std::uint32_t, std::uint32_t>, cpp_int>;
    Model model;
    std::vector<std::pair<CheckpointId, Model>> saved;
    std::vector<std::vector<JournalRecord>> saved_journals;

    for (int op = 0; op < 400; ++op) {
      AccountId a = accounts[rng() % accounts.size()], b = accounts[rng() % accounts.size()];
      AssetId s = assets[rng() % assets.size()];
      Wad amount = Wad::from_raw(rng() % 1'000'000);
      auto key_a = std::make_pair(a.index, s.index), key_b = std::make_pair(b.index, s.index);
      switch (rng() % 6) {
        case 0:
          ledger.mint(Authority::genesis, a, s, amount, JournalTag::genesis);
          model[key_a] += big(amount.raw());
          break;
        case 1:
        case 2:
          if (model[key_a] >= big(amount.raw())) {
            ledger.transfer(a, b, s, amount);
            model[key_a] -= big(amount.raw());
            model[key_b] += big(amount.raw());
          } else {
            EXPECT_THROW(ledger.transfer(a, b, s, amount), ProtocolError);
          }
          break;
        case 3:
          saved.emplace_back(ledger.checkpoint(), model);
          saved_journals.emplace_back(ledger.journal().begin(), ledger.journal().end());
          break;
        case 4:
          if (!saved.empty()) {
            ledger.rollback(saved.back().first);
            model = saved.back().second;
            EXPECT_EQ(std::vector<JournalRecord>(ledger.journal().begin(), ledger.journal().end()),
                      saved_journals.back());
            saved.pop_back();
            saved_journals.pop_back();
          }
          break;
        case 5:
          if (!saved.empty()) {
            ledger.commit(saved.back().first);
            saved.pop_back();
            saved_journals.pop_back();
          }
          break;
      }
    }
    for (const auto& [key, value] : model)
      EXPECT_EQ(big(ledger.balance(AccountId{key.first}, AssetId{key.second}).raw()), value);
    EXPECT_NO_THROW(ledger.audit());
    EXPECT_TRUE(ledger.replay_matches());
  }
}
