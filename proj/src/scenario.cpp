#include "lendsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lendsim/errors.hpp"

namespace lendsim {

using nlohmann::json;

std::string_view to_string(AgentKind kind) noexcept {
  switch (kind) {
    case AgentKind::depositor: return "depositor";
    case AgentKind::borrow_spiral: return "borrow_spiral";
    case AgentKind::leverage_spiral: return "leverage_spiral";
    case AgentKind::liquidator: return "liquidator";
    case AgentKind::arbitrageur: return "arbitrageur";
  }
  return "?";
}

namespace {

std::string join_messages(const std::vector<std::string>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += '\n';
    out += m;
  }
  return out;
}

std::string escape_token(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

/// Maps JSON pointers to the line where their value starts. nlohmann::json
/// keeps no source positions, so this is a separate lightweight scan of the
/// (already known to be well-formed) text.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) { scan(text); }

  std::size_t line(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      auto slash = pointer.rfind('/');
      if (slash == std::string::npos) return 1;
      pointer.resize(slash);
    }
  }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string key;
    bool expect_key;
  };

  std::string pointer() const {
    std::string p;
    for (const Frame& f : stack_) p += '/' + (f.array ? std::to_string(f.index) : escape_token(f.key));
    return p;
  }

  void value_at(std::size_t line) { lines_.try_emplace(pointer(), line); }

  void scan(std::string_view s) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      switch (c) {
        case '\n': ++line; break;
        case ' ': case '\t': case '\r': break;
        case '{':
          value_at(line);
          stack_.push_back({false, 0, {}, true});
          break;
        case '[':
          value_at(line);
          stack_.push_back({true, 0, {}, false});
          break;
        case '}': case ']':
          if (!stack_.empty()) stack_.pop_back();
          break;
        case ',':
          if (!stack_.empty()) {
            if (stack_.back().array)
              ++stack_.back().index;
            else
              stack_.back().expect_key = true;
          }
          break;
        case ':':
          if (!stack_.empty()) stack_.back().expect_key = false;
          break;
        case '"': {
          std::string text;
          for (++i; i < s.size() && s[i] != '"'; ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) ++i;
            text += s[i];
          }
          if (!stack_.empty() && !stack_.back().array && stack_.back().expect_key)
            stack_.back().key = std::move(text);
          else
            value_at(line);
          break;
        }
        default:
          value_at(line);
          while (i + 1 < s.size() && std::string_view(",]}\n \t\r").find(s[i + 1]) == std::string_view::npos) ++i;
      }
    }
  }

  std::vector<Frame> stack_;
  std::map<std::string, std::size_t> lines_;
};

/// Typed field access that records problems instead of throwing, so one
/// validation pass reports everything.
class Reader {
 public:
  explicit Reader(const LineIndex& index) : index_(index) {}

  void error(const std::string& ptr, const std::string& message) {
    errors_.push_back("line " + std::to_string(index_.line(ptr)) + ": " + (ptr.empty() ? "/" : ptr) + ": " +
                      message);
  }
  const std::vector<std::string>& errors() const { return errors_; }

  static std::string at(const std::string& ptr, std::string_view key) { return ptr + "/" + escape_token(key); }
  static std::string at(const std::string& ptr, std::size_t index) { return ptr + "/" + std::to_string(index); }

  const json* field(const json& obj, const std::string& ptr, std::string_view key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) error(ptr, "missing required field '" + std::string(key) + "'");
      return nullptr;
    }
    return &*it;
  }

  bool object(const json& v, const std::string& ptr) {
    if (v.is_object()) return true;
    error(ptr, "expected an object");
    return false;
  }

  bool array(const json& v, const std::string& ptr) {
    if (v.is_array()) return true;
    error(ptr, "expected an array");
    return false;
  }

  std::optional<Wad> wad(const json& v, const std::string& ptr) {
    if (!v.is_string()) {
      error(ptr, "expected a decimal string");
      return std::nullopt;
    }
    try {
      return Wad::parse(v.get<std::string>());
    } catch (const ProtocolError& e) {
      error(ptr, e.what());
      return std::nullopt;
    }
  }

  template <class T>
  void read_wad(const json& obj, const std::string& ptr, std::string_view key, T& out, bool required = false) {
    if (const json* v = field(obj, ptr, key, required))
      if (auto w = wad(*v, at(ptr, key))) out = *w;
  }

  void read_string(const json& obj, const std::string& ptr, std::string_view key, std::string& out,
                   bool required = false) {
    const json* v = field(obj, ptr, key, required);
    if (!v) return;
    if (!v->is_string() || v->get<std::string>().empty()) {
      error(at(ptr, key), "expected a non-empty string");
      return;
    }
    out = v->get<std::string>();
  }

  template <class T>
  void read_uint(const json& obj, const std::string& ptr, std::string_view key, T& out, bool required = false) {
    const json* v = field(obj, ptr, key, required);
    if (!v) return;
    if (!v->is_number_unsigned()) {
      error(at(ptr, key), "expected a non-negative integer");
      return;
    }
    auto value = v->get<std::uint64_t>();
    if (value > std::numeric_limits<T>::max()) {
      error(at(ptr, key), "integer out of range");
      return;
    }
    out = static_cast<T>(value);
  }

  void read_double(const json& obj, const std::string& ptr, std::string_view key, double& out) {
    const json* v = field(obj, ptr, key, false);
    if (!v) return;
    if (!v->is_number()) {
      error(at(ptr, key), "expected a number");
      return;
    }
    out = v->get<double>();
  }

  void read_bool(const json& obj, const std::string& ptr, std::string_view key, bool& out) {
    const json* v = field(obj, ptr, key, false);
    if (!v) return;
    if (!v->is_boolean()) {
      error(at(ptr, key), "expected true or false");
      return;
    }
    out = v->get<bool>();
  }

  std::map<std::string, Wad> amounts(const json& obj, const std::string& ptr, std::string_view key) {
    std::map<std::string, Wad> out;
    const json* v = field(obj, ptr, key, false);
    if (!v || !object(*v, at(ptr, key))) return out;
    for (const auto& [name, amount] : v->items())
      if (auto w = wad(amount, at(at(ptr, key), name))) out[name] = *w;
    return out;
  }

 private:
  const LineIndex& index_;
  std::vector<std::string> errors_;
};

class ScenarioParser {
 public:
  ScenarioParser(const LineIndex& index, std::filesystem::path base_dir) : r_(index), base_dir_(std::move(base_dir)) {}

  Scenario parse(const json& doc) {
    if (!r_.object(doc, "")) fail();
    if (const json* v = r_.field(doc, "", "schema_version", true)) {
      if (!v->is_number_integer() || v->get<int>() != kSchemaVersion)
        r_.error("/schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    }
    r_.read_uint(doc, "", "horizon", s_.horizon, true);
    if (doc.contains("horizon") && s_.horizon < 1) r_.error("/horizon", "horizon must be >= 1");
    r_.read_uint(doc, "", "seed", s_.seed);
    assets(doc);
    feeds(doc);
    gas(doc);
    pools(doc);
    cdp(doc);
    venues(doc);
    rewards(doc);
    accounts(doc);
    agents(doc);
    if (!r_.errors().empty()) fail();
    return std::move(s_);
  }

 private:
  [[noreturn]] void fail() { throw ScenarioError(false, r_.errors()); }

  bool known_asset(const std::string& symbol) const { return asset_set_.contains(symbol); }

  void require_asset(const std::string& ptr, const std::string& symbol) {
    if (!symbol.empty() && !known_asset(symbol)) r_.error(ptr, "undefined asset '" + symbol + "'");
  }

  void require_priced(const std::string& ptr, const std::string& symbol) {
    if (known_asset(symbol) && !s_.feeds.contains(symbol)) r_.error(ptr, "asset '" + symbol + "' has no price feed");
  }

  void assets(const json& doc) {
    const json* v = r_.field(doc, "", "assets", true);
    if (!v || !r_.array(*v, "/assets")) return;
    for (std::size_t i = 0; i < v->size(); ++i) {
      std::string ptr = Reader::at("/assets", i);
      const json& a = (*v)[i];
      if (!a.is_string() || a.get<std::string>().empty()) {
        r_.error(ptr, "asset symbol must be a non-empty string");
        continue;
      }
      std::string symbol = a.get<std::string>();
      if (!asset_set_.insert(symbol).second) r_.error(ptr, "duplicate asset '" + symbol + "'");
      s_.assets.push_back(symbol);
    }
  }

  void feeds(const json& doc) {
    const json* v = r_.field(doc, "", "feeds", true);
    if (!v || !r_.object(*v, "/feeds")) return;
    for (const auto& [symbol, f] : v->items()) {
      std::string ptr = Reader::at("/feeds", symbol);
      require_asset(ptr, symbol);
      if (!r_.object(f, ptr)) continue;
      std::string kind;
      r_.read_string(f, ptr, "kind", kind, true);
      FeedSpec spec;
      if (kind == "replay") {
        spec.kind = FeedSpec::Kind::replay;
        replay_points(f, ptr, spec);
      } else if (kind == "walk") {
        spec.kind = FeedSpec::Kind::walk;
        r_.read_wad(f, ptr, "initial", spec.initial, true);
        r_.read_double(f, ptr, "drift", spec.drift);
        r_.read_double(f, ptr, "volatility", spec.volatility);
        if (spec.volatility < 0) r_.error(Reader::at(ptr, "volatility"), "volatility must be >= 0");
        if (f.contains("seed")) {
          std::uint64_t seed = 0;
          r_.read_uint(f, ptr, "seed", seed);
          spec.seed = seed;
        }
        if (spec.initial.is_zero()) r_.error(Reader::at(ptr, "initial"), "initial price must be > 0");
      } else if (kind == "file") {
        spec.kind = FeedSpec::Kind::replay;
        csv_points(f, ptr, symbol, spec);
      } else if (!kind.empty()) {
        r_.error(Reader::at(ptr, "kind"), "unknown feed kind '" + kind + "' (replay, walk, file)");
      }
      s_.feeds[symbol] = std::move(spec);
    }
  }

  void replay_points(const json& f, const std::string& ptr, FeedSpec& spec) {
    const json* pts = r_.field(f, ptr, "points", true);
    std::string pp = Reader::at(ptr, "points");
    if (!pts || !r_.array(*pts, pp)) return;
    for (std::size_t i = 0; i < pts->size(); ++i) {
      const json& p = (*pts)[i];
      std::string ip = Reader::at(pp, i);
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned()) {
        r_.error(ip, "expected [step, \"price\"]");
        continue;
      }
      if (auto price = r_.wad(p[1], Reader::at(ip, std::size_t{1})))
        spec.points.push_back({p[0].get<std::size_t>(), *price});
    }
    check_points(pp, spec.points);
  }

  void csv_points(const json& f, const std::string& ptr, const std::string& symbol, FeedSpec& spec) {
    std::string path;
    r_.read_string(f, ptr, "path", path, true);
    if (path.empty()) return;
    std::filesystem::path full = base_dir_ / path;
    std::ifstream in(full);
    if (!in) {
      r_.error(Reader::at(ptr, "path"), "cannot read price file " + full.string());
      return;
    }
    try {
      auto series = read_price_csv(in);
      auto it = series.find(symbol);
      if (it == series.end()) {
        r_.error(Reader::at(ptr, "path"), "price file has no rows for " + symbol);
        return;
      }
      spec.points = it->second;
    } catch (const ProtocolError& e) {
      r_.error(Reader::at(ptr, "path"), e.what());
      return;
    }
    check_points(Reader::at(ptr, "path"), spec.points);
  }

  void check_points(const std::string& ptr, const std::vector<PricePoint>& points) {
    if (points.empty()) {
      r_.error(ptr, "a replay feed needs at least one point");
      return;
    }
    if (points.front().step != 0) r_.error(ptr, "the first price point must be at step 0");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].step <= points[i - 1].step) r_.error(ptr, "price steps must be strictly increasing");
    for (const auto& p : points)
      if (p.price.is_zero()) r_.error(ptr, "prices must be > 0");
  }

  void gas(const json& doc) {
    const json* g = r_.field(doc, "", "gas", false);
    if (!g) {
      if (!s_.assets.empty()) s_.gas_asset = s_.assets.front();
      return;
    }
    if (!r_.object(*g, "/gas")) return;
    r_.read_string(*g, "/gas", "asset", s_.gas_asset, true);
    require_asset("/gas/asset", s_.gas_asset);
    r_.read_wad(*g, "/gas", "fee", s_.gas_fee);
  }

  void rate_model(const json& p, const std::string& ptr, RateModelParams& m) {
    const json* v = r_.field(p, ptr, "rate_model", true);
    std::string mp = Reader::at(ptr, "rate_model");
    if (!v || !r_.object(*v, mp)) return;
    r_.read_wad(*v, mp, "base_rate", m.base_rate);
    r_.read_wad(*v, mp, "slope1", m.slope1, true);
    r_.read_wad(*v, mp, "slope2", m.slope2, true);
    r_.read_wad(*v, mp, "kink", m.kink, true);
    r_.read_wad(*v, mp, "reserve_factor", m.reserve_factor);
  }

  void pools(const json& doc) {
    const json* v = r_.field(doc, "", "pools", false);
    if (!v || !r_.array(*v, "/pools")) return;
    std::set<std::string> ids, pooled, iou_names;
    for (std::size_t i = 0; i < v->size(); ++i) {
      std::string ptr = Reader::at("/pools", i);
      const json& p = (*v)[i];
      if (!r_.object(p, ptr)) continue;
      PoolSpec spec;
      r_.read_string(p, ptr, "id", spec.id, true);
      r_.read_string(p, ptr, "asset", spec.asset, true);
      if (!spec.id.empty() && !ids.insert(spec.id).second) r_.error(Reader::at(ptr, "id"), "duplicate pool id");
      require_asset(Reader::at(ptr, "asset"), spec.asset);
      require_priced(Reader::at(ptr, "asset"), spec.asset);
      if (known_asset(spec.asset) && !pooled.insert(spec.asset).second)
        r_.error(Reader::at(ptr, "asset"), "asset '" + spec.asset + "' already has a pool");

      PoolParams& pp = spec.params;
      r_.read_wad(p, ptr, "collateral_factor", pp.collateral_factor, true);
      r_.read_wad(p, ptr, "liquidation_threshold", pp.liquidation_threshold, true);
      r_.read_wad(p, ptr, "liquidation_bonus", pp.liquidation_bonus, true);
      pp.close_factor = Wad::from_raw(Wad::kScale / 2);
      r_.read_wad(p, ptr, "close_factor", pp.close_factor);
      pp.flash_fee = Wad::from_raw(Wad::kScale / 10'000 * 9);
      r_.read_wad(p, ptr, "flash_fee", pp.flash_fee);
      r_.read_wad(p, ptr, "stable_rate_premium", pp.stable_rate_premium);
      std::string mode = "exchange_rate";
      r_.read_string(p, ptr, "iou_mode", mode);
      if (mode == "rebasing")
        pp.iou_mode = IouMode::rebasing;
      else if (mode != "exchange_rate")
        r_.error(Reader::at(ptr, "iou_mode"), "iou_mode must be exchange_rate or rebasing");
      rate_model(p, ptr, pp.rate_model);
      for (const auto& e : validate(pp)) r_.error(ptr, e);

      std::string iou = (pp.iou_mode == IouMode::exchange_rate ? "c" : "a") + spec.asset;
      if (known_asset(iou) || !iou_names.insert(iou).second)
        r_.error(Reader::at(ptr, "asset"), "IOU symbol '" + iou + "' collides with another asset");

      if (const json* d = r_.field(p, ptr, "deposits", false)) {
        std::string dp = Reader::at(ptr, "deposits");
        if (r_.object(*d, dp))
          for (const auto& [who, amount] : d->items())
            if (auto w = r_.wad(amount, Reader::at(dp, who))) spec.deposits.emplace_back(who, *w);
      }
      s_.pools.push_back(std::move(spec));
    }
  }

  void cdp(const json& doc) {
    const json* v = r_.field(doc, "", "cdp", false);
    if (!v || !r_.object(*v, "/cdp")) return;
    CdpSpec c;
    r_.read_string(*v, "/cdp", "stablecoin", c.stablecoin, true);
    require_asset("/cdp/stablecoin", c.stablecoin);
    require_priced("/cdp/stablecoin", c.stablecoin);
    c.issuance_fraction = r_.amounts(*v, "/cdp", "issuance_fraction");
    if (c.issuance_fraction.empty()) r_.error("/cdp", "issuance_fraction must list at least one collateral asset");
    for (const auto& [asset, frac] : c.issuance_fraction) {
      std::string fp = Reader::at("/cdp/issuance_fraction", asset);
      require_asset(fp, asset);
      require_priced(fp, asset);
      if (asset == c.stablecoin) r_.error(fp, "the stablecoin cannot back itself");
      if (frac.is_zero() || frac >= Wad::one()) r_.error(fp, "issuance fraction must be in (0, 1)");
    }
    r_.read_wad(*v, "/cdp", "stability_fee", c.stability_fee);
    r_.read_wad(*v, "/cdp", "liquidation_penalty", c.liquidation_penalty);
    if (const json* fp = r_.field(*v, "/cdp", "fee_policy", false); fp && r_.object(*fp, "/cdp/fee_policy")) {
      std::string kind = "constant";
      r_.read_string(*fp, "/cdp/fee_policy", "kind", kind);
      if (kind == "proportional")
        c.fee_policy.kind = FeePolicy::Kind::proportional;
      else if (kind != "constant")
        r_.error("/cdp/fee_policy/kind", "fee policy must be constant or proportional");
      r_.read_wad(*fp, "/cdp/fee_policy", "gain", c.fee_policy.gain);
      r_.read_wad(*fp, "/cdp/fee_policy", "max_fee", c.fee_policy.max_fee);
      r_.read_wad(*fp, "/cdp/fee_policy", "target", c.fee_policy.target);
    }
    if (const json* vs = r_.field(*v, "/cdp", "vaults", false); vs && r_.array(*vs, "/cdp/vaults")) {
      for (std::size_t i = 0; i < vs->size(); ++i) {
        std::string ptr = Reader::at("/cdp/vaults", i);
        const json& j = (*vs)[i];
        if (!r_.object(j, ptr)) continue;
        VaultSpec vault;
        r_.read_string(j, ptr, "owner", vault.owner, true);
        vault.collateral = r_.amounts(j, ptr, "collateral");
        for (const auto& [asset, amount] : vault.collateral)
          if (!c.issuance_fraction.contains(asset))
            r_.error(Reader::at(Reader::at(ptr, "collateral"), asset), "'" + asset + "' is not a vault collateral");
        r_.read_wad(j, ptr, "debt", vault.debt);
        c.vaults.push_back(std::move(vault));
      }
    }
    s_.cdp = std::move(c);
  }

  void venues(const json& doc) {
    const json* v = r_.field(doc, "", "venues", false);
    if (!v || !r_.array(*v, "/venues")) return;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < v->size(); ++i) {
      std::string ptr = Reader::at("/venues", i);
      const json& j = (*v)[i];
      if (!r_.object(j, ptr)) continue;
      VenueSpec spec;
      r_.read_string(j, ptr, "id", spec.id, true);
      if (!spec.id.empty() && !ids.insert(spec.id).second) r_.error(Reader::at(ptr, "id"), "duplicate venue id");
      r_.read_uint(j, ptr, "fee_bps", spec.fee_bps);
      if (spec.fee_bps >= 10'000) r_.error(Reader::at(ptr, "fee_bps"), "fee_bps must be < 10000");
      std::string kind;
      r_.read_string(j, ptr, "kind", kind, true);
      if (kind == "quote") {
        spec.kind = VenueSpec::Kind::quote;
        r_.read_string(j, ptr, "numeraire", spec.numeraire, true);
        require_asset(Reader::at(ptr, "numeraire"), spec.numeraire);
        quotes(j, ptr, spec);
        spec.inventory = r_.amounts(j, ptr, "inventory");
        for (const auto& [asset, amount] : spec.inventory)
          require_asset(Reader::at(Reader::at(ptr, "inventory"), asset), asset);
      } else if (kind == "amm") {
        spec.kind = VenueSpec::Kind::amm;
        const json* pair = r_.field(j, ptr, "reserves", true);
        std::string rp = Reader::at(ptr, "reserves");
        if (pair && r_.object(*pair, rp)) {
          if (pair->size() != 2) r_.error(rp, "an AMM needs exactly two reserve assets");
          std::size_t k = 0;
          for (const auto& [asset, amount] : pair->items()) {
            require_asset(Reader::at(rp, asset), asset);
            auto w = r_.wad(amount, Reader::at(rp, asset));
            if (w && w->is_zero()) r_.error(Reader::at(rp, asset), "reserves must be > 0");
            if (k == 0) {
              spec.asset0 = asset;
              spec.reserve0 = w.value_or(Wad{});
            } else if (k == 1) {
              spec.asset1 = asset;
              spec.reserve1 = w.value_or(Wad{});
            }
            ++k;
          }
        }
      } else if (!kind.empty()) {
        r_.error(Reader::at(ptr, "kind"), "venue kind must be quote or amm");
      }
      s_.venues.push_back(std::move(spec));
    }
  }

  void quotes(const json& j, const std::string& ptr, VenueSpec& spec) {
    const json* q = r_.field(j, ptr, "quotes", true);
    std::string qp = Reader::at(ptr, "quotes");
    if (!q || !r_.object(*q, qp)) return;
    for (const auto& [asset, src] : q->items()) {
      std::string ap = Reader::at(qp, asset);
      require_asset(ap, asset);
      if (asset == spec.numeraire) r_.error(ap, "a venue cannot quote its own numeraire");
      QuoteSource source;
      if (src.is_string()) {
        source.fixed = r_.wad(src, ap);
      } else if (r_.object(src, ap)) {
        if (src.contains("price")) {
          Wad fixed{};
          r_.read_wad(src, ap, "price", fixed);
          source.fixed = fixed;
        }
        r_.read_wad(src, ap, "multiplier", source.multiplier);
        if (!source.fixed) {
          require_priced(ap, asset);
          require_priced(Reader::at(ptr, "numeraire"), spec.numeraire);
        }
      }
      if (source.fixed && source.fixed->is_zero()) r_.error(ap, "quote price must be > 0");
      spec.quotes[asset] = source;
    }
  }

  void rewards(const json& doc) {
    const json* v = r_.field(doc, "", "rewards", false);
    if (!v || !r_.object(*v, "/rewards")) return;
    RewardParams p;
    r_.read_wad(*v, "/rewards", "emission_per_step", p.emission_per_step, true);
    r_.read_wad(*v, "/rewards", "supply_share", p.supply_share);
    if (p.supply_share > Wad::one()) r_.error("/rewards/supply_share", "supply_share must be in [0, 1]");
    s_.rewards = p;
  }

  void accounts(const json& doc) {
    const json* v = r_.field(doc, "", "accounts", false);
    if (!v || !r_.object(*v, "/accounts")) return;
    for (const auto& [name, balances] : v->items()) {
      std::string ptr = Reader::at("/accounts", name);
      if (!r_.object(balances, ptr)) continue;
      auto& out = s_.accounts[name];
      for (const auto& [asset, amount] : balances.items()) {
        require_asset(Reader::at(ptr, asset), asset);
        if (auto w = r_.wad(amount, Reader::at(ptr, asset))) out[asset] = *w;
      }
    }
  }

  bool has_pool(const std::string& id) const {
    return std::any_of(s_.pools.begin(), s_.pools.end(), [&](const PoolSpec& p) { return p.id == id; });
  }

  const PoolSpec* pool_spec(const std::string& id) const {
    for (const auto& p : s_.pools)
      if (p.id == id) return &p;
    return nullptr;
  }

  void agents(const json& doc) {
    const json* v = r_.field(doc, "", "agents", false);
    if (!v || !r_.array(*v, "/agents")) return;
    static const std::map<std::string, AgentKind> kinds{{"depositor", AgentKind::depositor},
                                                        {"borrow_spiral", AgentKind::borrow_spiral},
                                                        {"leverage_spiral", AgentKind::leverage_spiral},
                                                        {"liquidator", AgentKind::liquidator},
                                                        {"arbitrageur", AgentKind::arbitrageur}};
    std::set<std::string> names;
    for (std::size_t i = 0; i < v->size(); ++i) {
      std::string ptr = Reader::at("/agents", i);
      const json& j = (*v)[i];
      if (!r_.object(j, ptr)) continue;
      AgentSpec a;
      r_.read_string(j, ptr, "name", a.name, true);
      if (!a.name.empty() && (!names.insert(a.name).second || s_.accounts.contains(a.name)))
        r_.error(Reader::at(ptr, "name"), "duplicate account name '" + a.name + "'");
      std::string kind;
      r_.read_string(j, ptr, "kind", kind, true);
      if (auto it = kinds.find(kind); it != kinds.end())
        a.kind = it->second;
      else if (!kind.empty())
        r_.error(Reader::at(ptr, "kind"), "unknown agent kind '" + kind + "'");

      a.endowment = r_.amounts(j, ptr, "endowment");
      for (const auto& [asset, amount] : a.endowment) require_asset(Reader::at(Reader::at(ptr, "endowment"), asset), asset);
      r_.read_uint(j, ptr, "start", a.start);
      if (j.contains("end")) {
        std::size_t end = 0;
        r_.read_uint(j, ptr, "end", end);
        a.end = end;
        if (end < a.start) r_.error(Reader::at(ptr, "end"), "activation window must satisfy start <= end");
      }
      r_.read_wad(j, ptr, "min_action", a.min_action);
      if (a.min_action.is_zero()) r_.error(Reader::at(ptr, "min_action"), "min_action (epsilon) must be > 0");
      r_.read_wad(j, ptr, "buffer", a.buffer);
      r_.read_uint(j, ptr, "max_iterations", a.max_iterations);
      r_.read_string(j, ptr, "pool", a.pool);
      r_.read_string(j, ptr, "borrow_pool", a.borrow_pool);
      r_.read_string(j, ptr, "venue", a.venue);
      if (j.contains("amount")) {
        Wad amount{};
        r_.read_wad(j, ptr, "amount", amount);
        a.amount = amount;
      }
      r_.read_double(j, ptr, "churn", a.churn);
      if (a.churn < 0 || a.churn > 1) r_.error(Reader::at(ptr, "churn"), "churn must be a probability in [0, 1]");
      std::string mode = "flash";
      r_.read_string(j, ptr, "mode", mode);
      if (mode == "direct")
        a.use_flash = false;
      else if (mode != "flash")
        r_.error(Reader::at(ptr, "mode"), "liquidator mode must be flash or direct");
      if (a.borrow_pool.empty()) a.borrow_pool = a.pool;
      agent_refs(a, ptr);
      s_.agents.push_back(std::move(a));
    }
  }

  void agent_refs(const AgentSpec& a, const std::string& ptr) {
    bool needs_pool = a.kind == AgentKind::depositor || a.kind == AgentKind::borrow_spiral ||
                      a.kind == AgentKind::leverage_spiral;
    if (needs_pool && a.pool.empty()) r_.error(ptr, "agent kind '" + std::string(to_string(a.kind)) + "' needs a pool");
    if (!a.pool.empty() && !has_pool(a.pool)) r_.error(Reader::at(ptr, "pool"), "undefined pool '" + a.pool + "'");
    if (!a.borrow_pool.empty() && !has_pool(a.borrow_pool))
      r_.error(Reader::at(ptr, "borrow_pool"), "undefined pool '" + a.borrow_pool + "'");
    if (a.kind == AgentKind::leverage_spiral) {
      if (a.venue.empty())
        r_.error(ptr, "a leverage spiral needs a venue");
      else if (std::none_of(s_.venues.begin(), s_.venues.end(), [&](const VenueSpec& v) { return v.id == a.venue; }))
        r_.error(Reader::at(ptr, "venue"), "undefined venue '" + a.venue + "'");
      if (a.borrow_pool == a.pool && !a.pool.empty())
        r_.error(Reader::at(ptr, "borrow_pool"), "a leverage spiral borrows a different asset than it deposits");
    }
    if (a.kind == AgentKind::borrow_spiral && a.borrow_pool != a.pool)
      r_.error(Reader::at(ptr, "borrow_pool"), "a borrow spiral re-deposits into the pool it borrows from");
    if (a.kind == AgentKind::borrow_spiral || a.kind == AgentKind::leverage_spiral) {
      if (const PoolSpec* p = pool_spec(a.pool); p && a.buffer > p->params.collateral_factor)
        r_.error(Reader::at(ptr, "buffer"), "buffer exceeds the pool's collateral factor");
    }
  }

  Reader r_;
  std::filesystem::path base_dir_;
  Scenario s_;
  std::set<std::string> asset_set_;
};

}  // namespace

ScenarioError::ScenarioError(bool parse, std::vector<std::string> messages)
    : std::runtime_error(join_messages(messages)), parse_(parse), messages_(std::move(messages)) {}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ScenarioError(true, {"line " + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what()});
  }
  LineIndex index(text);
  return ScenarioParser(index, base_dir).parse(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

}  // namespace lendsim
