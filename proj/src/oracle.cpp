#include "lendsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <random>
#include <sstream>

#include "lendsim/errors.hpp"

namespace lendsim {

namespace {

// Uniform in (0, 1) from the top 53 bits; never returns 0 so log() is safe.
double unit_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Wad to_wad_floor(double value) {
  if (!(value > 0.0)) return Wad::from_raw(1);
  double whole = std::floor(value);
  if (whole >= 1e20) throw ProtocolError(ErrorCode::overflow, "walk price");
  auto int_part = static_cast<u128>(whole);
  auto frac = static_cast<u128>((value - whole) * 1e18);
  u128 raw = int_part * Wad::kScale + frac;
  return Wad::from_raw(raw == 0 ? 1 : raw);
}

}  // namespace

std::uint64_t symbol_salt(std::string_view symbol) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : symbol) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

PriceFeed PriceFeed::replay(std::vector<PricePoint> points) {
  if (points.empty()) throw ProtocolError(ErrorCode::invalid_argument, "replay feed has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].price.is_zero()) throw ProtocolError(ErrorCode::invalid_argument, "price must be positive");
    if (i > 0 && points[i].step <= points[i - 1].step)
      throw ProtocolError(ErrorCode::invalid_argument, "replay steps must be strictly increasing");
  }
  PriceFeed feed;
  feed.points_ = std::move(points);
  return feed;
}

PriceFeed PriceFeed::walk(WalkParams params, std::uint64_t salt, std::size_t precompute) {
  if (params.initial.is_zero()) throw ProtocolError(ErrorCode::invalid_argument, "walk initial price must be positive");
  if (params.volatility < 0) throw ProtocolError(ErrorCode::invalid_argument, "negative volatility");
  PriceFeed feed;
  feed.walk_ = params;
  feed.salt_ = salt;
  feed.walk_path_ = generate(params, salt, precompute + 1);
  return feed;
}

std::vector<Wad> PriceFeed::generate(const WalkParams& params, std::uint64_t salt, std::size_t steps) {
  std::mt19937_64 rng(splitmix64(params.seed ^ splitmix64(salt)));
  std::vector<Wad> path;
  path.reserve(steps);
  double price = params.initial.to_double();
  path.push_back(params.initial);
  constexpr double two_pi = 6.283185307179586476925286766559;
  while (path.size() < steps) {
    // Box-Muller keeps the draw sequence identical across standard libraries.
    double u1 = unit_open(rng);
    double u2 = unit_open(rng);
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    price *= std::exp(params.drift + params.volatility * z);
    path.push_back(to_wad_floor(price));
  }
  return path;
}

Wad PriceFeed::price_at(std::size_t step) const {
  if (!walk_path_.empty()) {
    if (step < walk_path_.size()) return walk_path_[step];
    return generate(walk_, salt_, step + 1).back();
  }
  if (points_.empty() || step < points_.front().step)
    throw ProtocolError(ErrorCode::step_before_first_point, "step " + std::to_string(step));
  // Latest point with point.step <= step.
  auto it = std::upper_bound(points_.begin(), points_.end(), step,
                             [](std::size_t s, const PricePoint& p) { return s < p.step; });
  return std::prev(it)->price;
}

void PriceOracle::set_feed(AssetId asset, PriceFeed feed) { feeds_.insert_or_assign(asset.index, std::move(feed)); }

Wad PriceOracle::price_at(AssetId asset, std::size_t step) const {
  auto it = feeds_.find(asset.index);
  if (it == feeds_.end()) throw ProtocolError(ErrorCode::missing_feed, "asset #" + std::to_string(asset.index));
  return it->second.price_at(step);
}

Wad PriceOracle::value_usd(Wad amount, AssetId asset, std::size_t step, Rounding rounding) const {
  return mul(amount, price_at(asset, step), rounding);
}

std::map<std::string, std::vector<PricePoint>> read_price_csv(std::istream& in) {
  std::map<std::string, std::vector<PricePoint>> series;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    return ProtocolError(ErrorCode::parse_error, "price csv line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "step,asset,price") throw fail("expected header 'step,asset,price'");
      continue;
    }
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string step_text, symbol, price_text;
    if (!std::getline(fields, step_text, ',') || !std::getline(fields, symbol, ',') || !std::getline(fields, price_text))
      throw fail("expected three fields");
    std::size_t step = 0;
    try {
      std::size_t used = 0;
      step = std::stoull(step_text, &used);
      if (used != step_text.size()) throw fail("bad step");
    } catch (const std::logic_error&) {
      throw fail("bad step '" + step_text + "'");
    }
    Wad price;
    try {
      price = Wad::parse(price_text);
    } catch (const ProtocolError& e) {
      throw fail(e.what());
    }
    if (price.is_zero()) throw fail("price must be positive");
    auto& points = series[symbol];
    if (!points.empty() && points.back().step >= step) throw fail("steps for " + symbol + " must strictly increase");
    points.push_back({step, price});
  }
  if (line_no == 0) throw ProtocolError(ErrorCode::parse_error, "price csv is empty");
  return series;
}

}  // namespace lendsim
