#include "scs/confseq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "scs/errors.hpp"

namespace scs {

namespace {

constexpr std::size_t kScheduleTableSize = std::size_t{1} << 15;

// q*T snapped to the nearest integer when rounding noise is all that separates them.
double scaled_rank(double q, std::size_t n) {
  const double r = q * static_cast<double>(n);
  const double nearest = std::round(r);
  return std::abs(r - nearest) <= 1e-9 * std::max(1.0, std::abs(r)) ? nearest : r;
}

}  // namespace

void require_level(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError(std::string(what) + " must lie in (0,1), got " + std::to_string(alpha));
  }
}

BoundPair make_bound_pair(double lower, double upper, double level) {
  require_level(level, "level");
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper)) {
    throw ValidationError("bound pair requires lower < upper");
  }
  return BoundPair{lower, upper, level};
}

BoundPair unbounded_pair(double level) { return BoundPair{-kInf, kInf, level}; }

double ArmState::raw_mean() const {
  return obs_count == 0 ? std::nan("") : raw_sum / static_cast<double>(obs_count);
}

double ArmState::weighted_mean() const {
  return lambda_sum > 0.0 ? weighted_sum / lambda_sum : std::nan("");
}

ArmState make_arm_state(std::size_t arm_id, RetainMode retain) {
  ArmState s;
  s.arm_id = arm_id;
  s.retain = retain;
  return s;
}

void update_arm(ArmState& state, std::optional<double> observation, double lambda) {
  if (!std::isfinite(lambda) || !(lambda > 0.0)) {
    throw ValidationError("lambda must be finite and > 0");
  }
  if (!observation) return;
  const double x = *observation;
  if (!std::isfinite(x)) throw ValidationError("observation must be finite");

  state.obs_count += 1;
  state.weighted_sum += lambda * x;
  state.lambda_sum += lambda;
  state.lambda_sq_sum += lambda * lambda;
  state.raw_sum += x;
  if (state.retain.sorted) {
    auto pos = std::upper_bound(state.sorted_obs.begin(), state.sorted_obs.end(), x);
    state.sorted_obs.insert(pos, x);
  }
  if (state.retain.history) state.history.push_back({lambda, x});
}

// ---------------------------------------------------------------------------

double default_lambda(std::size_t t, double alpha) {
  if (t < 1) throw ValidationError("schedule index t must be >= 1");
  require_level(alpha);
  const double td = static_cast<double>(t);
  const double raw = std::sqrt(8.0 * std::log(1.0 / alpha) / (td * std::log(td + 1.0)));
  return std::min(raw, 1.0);
}

LambdaSchedule LambdaSchedule::constant(double lambda) {
  if (!std::isfinite(lambda) || !(lambda > 0.0)) {
    throw ValidationError("constant lambda must be finite and > 0");
  }
  LambdaSchedule s;
  s.kind_ = Kind::constant;
  s.value_ = lambda;
  return s;
}

LambdaSchedule LambdaSchedule::shrinking(double alpha) {
  require_level(alpha);
  LambdaSchedule s;
  s.kind_ = Kind::shrinking;
  s.value_ = alpha;
  auto table = std::make_shared<std::vector<double>>(kScheduleTableSize + 1, 0.0);
  for (std::size_t t = 1; t <= kScheduleTableSize; ++t) (*table)[t] = default_lambda(t, alpha);
  s.table_ = std::move(table);
  return s;
}

LambdaSchedule LambdaSchedule::custom(Rule rule) {
  if (!rule) throw ValidationError("custom lambda rule is empty");
  LambdaSchedule s;
  s.kind_ = Kind::custom;
  s.rule_ = std::move(rule);
  return s;
}

double LambdaSchedule::operator()(const ArmState& before) const {
  const std::size_t t = before.obs_count + 1;
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::shrinking:
      return t < table_->size() ? (*table_)[t] : default_lambda(t, value_);
    case Kind::custom:
      break;
  }
  return rule_(t, before);
}

std::string LambdaSchedule::describe() const {
  char buf[64];
  switch (kind_) {
    case Kind::constant:
      std::snprintf(buf, sizeof buf, "constant(%.12g)", value_);
      return buf;
    case Kind::shrinking:
      std::snprintf(buf, sizeof buf, "shrinking(alpha=%.12g)", value_);
      return buf;
    case Kind::custom:
      break;
  }
  return "custom";
}

// ---------------------------------------------------------------------------

BoundPair subgaussian_bounds(const ArmState& state, const SubGaussianConfig& cfg, double alpha) {
  require_level(alpha);
  if (!(state.lambda_sum > 0.0)) return unbounded_pair(alpha);
  const double center = state.weighted_sum / state.lambda_sum;
  const double half =
      (cfg.sigma2 * state.lambda_sq_sum / 2.0 - std::log(alpha)) / state.lambda_sum;
  return BoundPair{center - half, center + half, alpha};
}

double subgaussian_log_eprocess(const ArmState& state, double theta, Side side, double sigma2) {
  if (!std::isfinite(theta)) throw ValidationError("theta must be finite");
  // sum lambda (x - theta) = weighted_sum - theta * lambda_sum
  const double drift = state.weighted_sum - theta * state.lambda_sum;
  const double penalty = sigma2 * state.lambda_sq_sum / 2.0;
  return (side == Side::plus ? -drift : drift) - penalty;
}

double subgaussian_log_eprocess(std::span<const WeightedObs> history, double theta, Side side,
                                double sigma2) {
  if (!std::isfinite(theta)) throw ValidationError("theta must be finite");
  const double sign = side == Side::plus ? -1.0 : 1.0;
  double acc = 0.0;
  for (const auto& [lambda, x] : history) {
    acc += sign * lambda * (x - theta) - sigma2 * lambda * lambda / 2.0;
  }
  return acc;
}

double evaluate_eprocess(const ArmState& state, double theta, Side side, double sigma2) {
  return std::exp(subgaussian_log_eprocess(state, theta, side, sigma2));
}

// ---------------------------------------------------------------------------

double phi_p(double x, double p) {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const double mag = std::log1p(ax + std::pow(ax, p) / p);
  return x > 0.0 ? mag : -mag;
}

double heavytail_log_eprocess(std::span<const WeightedObs> history, double theta, Side side,
                              const HeavyTailConfig& cfg) {
  const double sign = side == Side::plus ? -1.0 : 1.0;
  double acc = 0.0;
  for (const auto& [lambda, x] : history) {
    acc += sign * phi_p(lambda * (x - theta), cfg.p) - std::pow(lambda, cfg.p) * cfg.v / cfg.p;
  }
  return acc;
}

namespace {

void validate(const HeavyTailConfig& cfg) {
  if (!(cfg.p > 1.0 && cfg.p <= 2.0)) throw ValidationError("heavy-tail p must lie in (1,2]");
  if (!(cfg.v > 0.0) || !std::isfinite(cfg.v)) throw ValidationError("heavy-tail v must be > 0");
  if (!(cfg.bracket_lo < cfg.bracket_hi)) throw ValidationError("empty theta bracket");
  if (!(cfg.rel_tol > 0.0)) throw ValidationError("rel_tol must be > 0");
}

// Bisection on a monotone predicate over [lo, hi]; `crossed(lo)` is false and
// `crossed(hi)` true on entry. Returns the end of the final bracket that
// satisfies the predicate.
template <class Pred>
double bisect_crossing(double lo, double hi, double rel_tol, Pred crossed) {
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = lo + (hi - lo) / 2.0;
    if (hi - lo <= rel_tol * std::max(1.0, std::abs(mid))) break;
    if (crossed(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

HeavyTailBounds heavytail_bounds(std::span<const WeightedObs> history, const HeavyTailConfig& cfg,
                                 double alpha) {
  require_level(alpha);
  validate(cfg);
  const double target = std::log(1.0 / alpha);
  HeavyTailBounds out;
  out.pair = unbounded_pair(alpha);

  // upper = inf{theta : log M+(theta) >= target}; log M+ is nondecreasing.
  auto plus_crossed = [&](double th) {
    return heavytail_log_eprocess(history, th, Side::plus, cfg) >= target;
  };
  if (plus_crossed(cfg.bracket_hi)) {
    if (plus_crossed(cfg.bracket_lo)) {
      out.pair.upper = cfg.bracket_lo;  // crossing lies below the bracket; keep the wider value
    } else {
      out.pair.upper = bisect_crossing(cfg.bracket_lo, cfg.bracket_hi, cfg.rel_tol, plus_crossed);
      out.upper_bracketed = true;
    }
  }

  // lower = sup{theta : log M-(theta) >= target}; log M- is nonincreasing,
  // so bisect on the negated axis.
  auto minus_crossed = [&](double th) {
    return heavytail_log_eprocess(history, th, Side::minus, cfg) >= target;
  };
  if (minus_crossed(cfg.bracket_lo)) {
    if (minus_crossed(cfg.bracket_hi)) {
      out.pair.lower = cfg.bracket_hi;
    } else {
      const double neg = bisect_crossing(-cfg.bracket_hi, -cfg.bracket_lo, cfg.rel_tol,
                                         [&](double nt) { return minus_crossed(-nt); });
      out.pair.lower = -neg;
      out.lower_bracketed = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double quantile_boundary_l(std::size_t t, double alpha) {
  if (t < 1) throw ValidationError("quantile boundary needs t >= 1");
  require_level(alpha);
  const double td = static_cast<double>(t);
  return (1.4 * std::log(std::log(2.1 * td)) + std::log(5.0 / alpha)) / td;
}

double quantile_boundary_f(std::size_t t, double q, double alpha) {
  const double l = quantile_boundary_l(t, alpha);
  return 1.5 * std::sqrt(q * (1.0 - q) * l) + 0.8 * l;
}

double upper_empirical_quantile(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 0) return kInf;
  const double r = scaled_rank(q, n);
  if (r < 0.0) return -kInf;
  const double idx = std::floor(r);
  if (idx >= static_cast<double>(n)) return kInf;
  return sorted[static_cast<std::size_t>(idx)];
}

double lower_empirical_quantile(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 0) return -kInf;
  const double r = scaled_rank(q, n);
  if (r <= 0.0) return -kInf;
  const double idx = std::ceil(r) - 1.0;
  if (idx >= static_cast<double>(n)) return kInf;
  return sorted[static_cast<std::size_t>(idx)];
}

BoundPair quantile_bounds(const ArmState& state, const QuantileConfig& cfg, double alpha) {
  require_level(alpha);
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw ValidationError("quantile q must lie in (0,1)");
  if (!state.retain.sorted) throw ValidationError("quantile bounds need a sorted sample");
  const std::size_t n = state.obs_count;
  if (n == 0) return unbounded_pair(alpha);

  const double up_arg = cfg.q + quantile_boundary_f(n, cfg.q, alpha);
  const double lo_arg = cfg.q - quantile_boundary_f(n, 1.0 - cfg.q, alpha);
  const double upper = up_arg >= 1.0 ? kInf : lower_empirical_quantile(state.sorted_obs, up_arg);
  double lower = lo_arg <= 0.0 ? -kInf : upper_empirical_quantile(state.sorted_obs, lo_arg);
  // Tied samples can put both ends on the same order statistic; pulling the
  // lower end down keeps the pair strictly ordered and only shrinks
  // {theta <= L}.
  if (!(lower < upper)) lower = std::nextafter(upper, -kInf);
  return BoundPair{lower, upper, alpha};
}

// ---------------------------------------------------------------------------

BoundPair missing_data_bounds(const ArmState& state, const MissingDataConfig& cfg, double alpha) {
  require_level(alpha);
  if (!(cfg.lambda > 0.0) || !(cfg.sigma2 > 0.0)) {
    throw ValidationError("missing-data bounds need lambda > 0 and sigma2 > 0");
  }
  if (state.obs_count == 0) return unbounded_pair(alpha);
  const double n = static_cast<double>(state.obs_count);
  const double mean = state.raw_sum / n;
  const double half = std::log(1.0 / alpha) / (cfg.lambda * n) + cfg.sigma2 * cfg.lambda / 2.0;
  return BoundPair{mean - half, mean + half, alpha};
}

}  // namespace scs
