#include "scs/screening.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "scs/errors.hpp"

namespace scs {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double modified_lucb_half_width(std::size_t t, std::size_t k, double alpha) {
  if (t < 1) throw ValidationError("modified LUCB needs T >= 1");
  require_level(alpha);
  const double kd = static_cast<double>(k);
  const double td = static_cast<double>(t);
  // log(5 k^5 T^4 / (4 alpha)) expanded to avoid overflow for large k, T
  const double log_term =
      std::log(5.0 / 4.0) + 5.0 * std::log(kd) + 4.0 * std::log(td) - std::log(alpha);
  return std::sqrt(log_term / (2.0 * td));
}

BoundPair modified_lucb_bounds(const ArmState& state, std::size_t k, double alpha) {
  require_level(alpha);
  if (state.obs_count == 0) return unbounded_pair(alpha);
  const double mean = state.raw_sum / static_cast<double>(state.obs_count);
  const double half = modified_lucb_half_width(state.obs_count, k, alpha);
  return BoundPair{mean - half, mean + half, alpha};
}

// ---------------------------------------------------------------------------

std::string BoundConstructor::name() const {
  return std::visit(overloaded{
                        [](const SubGaussianConfig&) { return std::string("subgaussian"); },
                        [](const HeavyTailConfig&) { return std::string("heavytail"); },
                        [](const QuantileConfig&) { return std::string("quantile"); },
                        [](const MissingDataConfig&) { return std::string("missing"); },
                        [](const ModifiedLucbConfig&) { return std::string("lucb"); },
                    },
                    config_);
}

RetainMode BoundConstructor::retain() const {
  if (std::holds_alternative<QuantileConfig>(config_)) return {.sorted = true, .history = false};
  if (std::holds_alternative<HeavyTailConfig>(config_)) return {.sorted = false, .history = true};
  return {};
}

double BoundConstructor::next_lambda(const ArmState& before) const {
  return std::visit(overloaded{
                        [&](const SubGaussianConfig& c) { return c.schedule(before); },
                        [&](const HeavyTailConfig& c) { return c.schedule(before); },
                        [](const QuantileConfig&) { return 1.0; },
                        [](const MissingDataConfig& c) { return c.lambda; },
                        [](const ModifiedLucbConfig&) { return 1.0; },
                    },
                    config_);
}

BoundPair BoundConstructor::bounds(const ArmState& state, double alpha) const {
  return std::visit(
      overloaded{
          [&](const SubGaussianConfig& c) { return subgaussian_bounds(state, c, alpha); },
          [&](const HeavyTailConfig& c) { return heavytail_bounds(state.history, c, alpha).pair; },
          [&](const QuantileConfig& c) { return quantile_bounds(state, c, alpha); },
          [&](const MissingDataConfig& c) { return missing_data_bounds(state, c, alpha); },
          [&](const ModifiedLucbConfig& c) { return modified_lucb_bounds(state, c.k, alpha); },
      },
      config_);
}

double BoundConstructor::center(const ArmState& state) const {
  return std::visit(overloaded{
                        [&](const SubGaussianConfig&) { return state.weighted_mean(); },
                        [&](const QuantileConfig& c) {
                          if (state.obs_count == 0) return std::nan("");
                          return upper_empirical_quantile(state.sorted_obs,
                                                          std::min(c.q, 1.0 - 1e-12));
                        },
                        [&](const auto&) { return state.raw_mean(); },
                    },
                    config_);
}

void BoundConstructor::validate() const {
  std::visit(overloaded{
                 [](const SubGaussianConfig& c) {
                   if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
                     throw ValidationError("sigma2 must be > 0");
                   }
                 },
                 [](const HeavyTailConfig& c) {
                   if (!(c.p > 1.0 && c.p <= 2.0)) throw ValidationError("p must lie in (1,2]");
                   if (!(c.v > 0.0)) throw ValidationError("v must be > 0");
                   if (!(c.bracket_lo < c.bracket_hi)) throw ValidationError("empty bracket");
                 },
                 [](const QuantileConfig& c) {
                   if (!(c.q > 0.0 && c.q < 1.0)) throw ValidationError("q must lie in (0,1)");
                 },
                 [](const MissingDataConfig& c) {
                   if (!(c.sigma2 > 0.0)) throw ValidationError("sigma2 must be > 0");
                   if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) {
                     throw ValidationError("lambda must be > 0");
                   }
                 },
                 [](const ModifiedLucbConfig& c) {
                   if (c.k < 1) throw ValidationError("LUCB k must be >= 1");
                 },
             },
             config_);
}

void ScreeningConfig::validate() const {
  if (k < 2) throw ValidationError("k must be >= 2");
  if (m < 1 || m >= k) throw ValidationError("m must satisfy 1 <= m < k");
  require_level(alpha);
  constructor.validate();
}

double effective_level(std::size_t k, std::size_t m, double alpha) {
  if (k < 2 || m < 1 || m >= k) throw ValidationError("need 1 <= m < k");
  require_level(alpha);
  return alpha / (2.0 * static_cast<double>(m) * static_cast<double>(k - m));
}

double effective_level(const ScreeningConfig& cfg) {
  return effective_level(cfg.k, cfg.m, cfg.alpha);
}

// ---------------------------------------------------------------------------

ScreeningState initial_state(const ScreeningConfig& cfg) {
  cfg.validate();
  const double level = effective_level(cfg);
  ScreeningState s;
  s.survivors.resize(cfg.k);
  std::iota(s.survivors.begin(), s.survivors.end(), std::size_t{0});
  s.eliminated_at.assign(cfg.k, std::nullopt);
  const RetainMode retain = cfg.constructor.retain();
  s.arms.reserve(cfg.k);
  for (std::size_t i = 0; i < cfg.k; ++i) s.arms.push_back(make_arm_state(i, retain));
  s.bounds.assign(cfg.k, unbounded_pair(level));
  return s;
}

RuleOutcome apply_screening_rule(std::span<const std::size_t> survivors,
                                 std::span<const BoundPair> bounds, std::size_t m) {
  RuleOutcome out;
  if (survivors.size() < m || m == 0) {
    out.survivors.assign(survivors.begin(), survivors.end());
    return out;
  }
  std::vector<double> lowers;
  lowers.reserve(survivors.size());
  for (std::size_t arm : survivors) lowers.push_back(bounds[arm].lower);
  auto nth = lowers.begin() + static_cast<std::ptrdiff_t>(m - 1);
  std::nth_element(lowers.begin(), nth, lowers.end(), std::greater<>{});
  out.threshold = *nth;

  out.survivors.reserve(survivors.size());
  for (std::size_t arm : survivors) {
    if (!(bounds[arm].upper < out.threshold)) out.survivors.push_back(arm);
  }
  return out;
}

void advance(ScreeningState& state, std::span<const std::optional<double>> observations,
             const ScreeningConfig& cfg) {
  if (observations.size() != state.arms.size()) {
    throw ValidationError("observation vector has " + std::to_string(observations.size()) +
                          " entries for " + std::to_string(state.arms.size()) + " arms");
  }
  const double level = effective_level(cfg);
  state.time += 1;
  for (std::size_t i = 0; i < state.arms.size(); ++i) {
    ArmState& arm = state.arms[i];
    if (observations[i]) update_arm(arm, observations[i], cfg.constructor.next_lambda(arm));
    state.bounds[i] = cfg.constructor.bounds(arm, level);
  }

  RuleOutcome outcome = apply_screening_rule(state.survivors, state.bounds, cfg.m);
  for (std::size_t arm : state.survivors) {
    if (!std::binary_search(outcome.survivors.begin(), outcome.survivors.end(), arm)) {
      state.eliminated_at[arm] = state.time;
    }
  }
  state.survivors = std::move(outcome.survivors);
  state.threshold = outcome.threshold;
}

ScreeningState scs_step(ScreeningState state, std::span<const std::optional<double>> observations,
                        const ScreeningConfig& cfg) {
  advance(state, observations, cfg);
  return state;
}

// ---------------------------------------------------------------------------

StopRule StopRule::never() {
  StopRule r;
  r.name_ = "none";
  r.predicate_ = [](const ScreeningState&) { return false; };
  return r;
}

StopRule StopRule::at_time(std::size_t t) {
  StopRule r;
  r.name_ = "fixed:" + std::to_string(t);
  r.predicate_ = [t](const ScreeningState& s) { return s.time >= t; };
  return r;
}

StopRule StopRule::size_reached(std::size_t m) {
  StopRule r;
  r.name_ = "size-m";
  r.predicate_ = [m](const ScreeningState& s) { return s.survivors.size() <= m; };
  return r;
}

StopRule StopRule::stable_for(std::size_t window) {
  if (window == 0) throw ValidationError("stability window must be >= 1");
  StopRule r;
  r.name_ = "stable:" + std::to_string(window);
  r.window_ = window;
  return r;
}

StopRule StopRule::custom(std::string name, Predicate predicate) {
  StopRule r;
  r.name_ = std::move(name);
  r.predicate_ = std::move(predicate);
  return r;
}

void StopRule::reset() { sizes_.clear(); }

bool StopRule::operator()(const ScreeningState& state) {
  if (predicate_) return predicate_(state);
  // stable_for: sizes_[T] = |S_T|, fed once per time index
  if (sizes_.size() <= state.time) sizes_.resize(state.time + 1, 0);
  sizes_[state.time] = state.survivors.size();
  // the full set is never "stable": nothing has been screened out yet
  return state.time >= window_ && state.survivors.size() < state.arms.size() &&
         sizes_[state.time] == sizes_[state.time - window_];
}

StopRule parse_stop_rule(const std::string& text, std::size_t m) {
  auto number_after = [&](std::size_t prefix) {
    const std::string digits = text.substr(prefix);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw ValidationError("bad stop rule '" + text + "'");
    }
    return static_cast<std::size_t>(std::stoull(digits));
  };
  if (text == "none") return StopRule::never();
  if (text == "size-m") return StopRule::size_reached(m);
  if (text.rfind("fixed:", 0) == 0) return StopRule::at_time(number_after(6));
  if (text.rfind("stable:", 0) == 0) return StopRule::stable_for(number_after(7));
  throw ValidationError("unknown stop rule '" + text + "' (none | fixed:T | size-m | stable:W)");
}

// ---------------------------------------------------------------------------

namespace {

TraceRecord make_record(const ScreeningState& s, const ScreeningConfig& cfg, std::int64_t stamp,
                        bool with_bounds) {
  TraceRecord r;
  r.time = s.time;
  r.stamp = stamp;
  r.survivors = s.survivors;
  r.threshold = s.threshold;
  if (with_bounds) {
    r.bounds = s.bounds;
    r.centers.reserve(s.arms.size());
    for (const auto& arm : s.arms) r.centers.push_back(cfg.constructor.center(arm));
  }
  return r;
}

}  // namespace

ScreeningTrace run_scs(const ObservationStream& stream, const ScreeningConfig& cfg, StopRule stop,
                       const TraceOptions& options) {
  if (stream.k != cfg.k) {
    throw ValidationError("stream has " + std::to_string(stream.k) + " arms but config k = " +
                          std::to_string(cfg.k));
  }
  ScreeningTrace trace;
  trace.k = cfg.k;
  trace.m = cfg.m;
  trace.alpha = cfg.alpha;
  trace.level = effective_level(cfg);
  trace.constructor = cfg.constructor.name();
  trace.stop_rule = stop.name();

  auto wants_snapshot = [&](std::size_t t) {
    return std::find(options.snapshot_times.begin(), options.snapshot_times.end(), t) !=
           options.snapshot_times.end();
  };

  ScreeningState state = initial_state(cfg);
  stop.reset();
  trace.records.push_back(make_record(state, cfg, 0, options.record_bounds));
  if (wants_snapshot(0)) trace.snapshots.emplace(0, state);
  bool stopped = stop(state);
  for (std::size_t i = 0; i < stream.steps.size() && !stopped; ++i) {
    advance(state, stream.steps[i], cfg);
    const std::int64_t stamp =
        i < stream.times.size() ? stream.times[i] : static_cast<std::int64_t>(state.time);
    trace.records.push_back(make_record(state, cfg, stamp, options.record_bounds));
    if (wants_snapshot(state.time)) trace.snapshots.emplace(state.time, state);
    stopped = stop(state);
  }
  trace.snapshots.insert_or_assign(state.time, std::move(state));
  return trace;
}

bool lucb_stopping(std::span<const BoundPair> bounds, std::span<const double> estimates,
                   std::size_t m) {
  const std::size_t k = bounds.size();
  if (estimates.size() != k) throw ValidationError("bounds and estimates differ in length");
  if (k < 2 || m < 1 || m >= k) throw ValidationError("need 1 <= m < k");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // NaN estimates (no data yet) rank last
  auto key = [&](std::size_t i) { return std::isnan(estimates[i]) ? -kInf : estimates[i]; };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });

  double min_top_lower = kInf;
  for (std::size_t j = 0; j < m; ++j) min_top_lower = std::min(min_top_lower, bounds[order[j]].lower);
  double max_rest_upper = -kInf;
  for (std::size_t j = m; j < k; ++j) {
    max_rest_upper = std::max(max_rest_upper, bounds[order[j]].upper);
  }
  return max_rest_upper < min_top_lower;
}

}  // namespace scs
