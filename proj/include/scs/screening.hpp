#pragma once

// Sequential correct screening (SCS).
//
// Starting from S_0 = [k], each step removes every surviving arm whose upper
// bound at level alpha_km = alpha / (2 m (k - m)) lies strictly below the m-th
// largest lower bound among the *previous* survivors. Membership is
// irreversible, so S_T is monotone in T and never drops below m arms as long
// as every bound pair is strictly ordered.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "scs/confseq.hpp"

namespace scs {

/// Symmetric interval around the plain sample mean,
/// mean -/+ sqrt(log(5 k^5 T^4 / (4 alpha)) / (2T)), T = observed count.
struct ModifiedLucbConfig {
  std::size_t k = 2;
};

double modified_lucb_half_width(std::size_t t, std::size_t k, double alpha);
BoundPair modified_lucb_bounds(const ArmState& state, std::size_t k, double alpha);

/// One of the bound families together with its parameters.
class BoundConstructor {
 public:
  using Config = std::variant<SubGaussianConfig, HeavyTailConfig, QuantileConfig,
                              MissingDataConfig, ModifiedLucbConfig>;

  BoundConstructor() : config_(SubGaussianConfig{}) {}
  BoundConstructor(Config config) : config_(std::move(config)) {}  // NOLINT(implicit)
  template <typename T>
    requires std::is_constructible_v<Config, T>
  BoundConstructor(T family) : config_(std::move(family)) {}  // NOLINT(implicit)

  [[nodiscard]] const Config& config() const { return config_; }
  [[nodiscard]] std::string name() const;
  [[nodiscard]] RetainMode retain() const;
  /// Weight for the next observation of an arm, given its state before it.
  [[nodiscard]] double next_lambda(const ArmState& before) const;
  [[nodiscard]] BoundPair bounds(const ArmState& state, double alpha) const;
  /// Point estimate drawn at the centre of plots; NaN before any data.
  [[nodiscard]] double center(const ArmState& state) const;
  /// Throws ValidationError on invalid family parameters.
  void validate() const;

 private:
  Config config_;
};

struct ScreeningConfig {
  std::size_t k = 2;
  std::size_t m = 1;
  double alpha = 0.1;
  BoundConstructor constructor;

  void validate() const;
};

/// alpha / (2 m (k - m))
double effective_level(std::size_t k, std::size_t m, double alpha);
double effective_level(const ScreeningConfig& cfg);

/// Observations arriving at one tick, indexed by arm; nullopt marks a missing value.
using StepObservations = std::vector<std::optional<double>>;

struct ScreeningState {
  std::size_t time = 0;
  std::vector<std::size_t> survivors;  // ascending arm indices (0-based)
  std::vector<std::optional<std::size_t>> eliminated_at;
  double threshold = -kInf;             // m-th largest survivor lower bound at `time`
  std::vector<ArmState> arms;
  std::vector<BoundPair> bounds;        // every arm, at the screening level

  [[nodiscard]] bool is_survivor(std::size_t arm) const { return !eliminated_at[arm].has_value(); }
};

ScreeningState initial_state(const ScreeningConfig& cfg);

struct RuleOutcome {
  std::vector<std::size_t> survivors;
  double threshold = -kInf;
};

/// The set update of one step on fixed bounds: threshold = m-th largest
/// lower bound among `survivors` (ties counted with multiplicity); keeps every
/// survivor whose upper bound is not strictly below it.
RuleOutcome apply_screening_rule(std::span<const std::size_t> survivors,
                                 std::span<const BoundPair> bounds, std::size_t m);

/// Ingests one tick for every arm (eliminated arms keep accumulating data),
/// recomputes all bounds at alpha_km and applies the set update in place.
/// Throws ValidationError when `observations` does not have exactly k entries.
void advance(ScreeningState& state, std::span<const std::optional<double>> observations,
             const ScreeningConfig& cfg);

/// Value form of `advance`.
ScreeningState scs_step(ScreeningState state, std::span<const std::optional<double>> observations,
                        const ScreeningConfig& cfg);

/// Stopping time for run_scs. Evaluated after every step (including T = 0).
class StopRule {
 public:
  using Predicate = std::function<bool(const ScreeningState&)>;

  static StopRule never();
  static StopRule at_time(std::size_t t);
  /// First T with |S_T| = m.
  static StopRule size_reached(std::size_t m);
  /// First T >= window with |S_T| = |S_{T-window}| < k (at least one arm removed).
  static StopRule stable_for(std::size_t window);
  static StopRule custom(std::string name, Predicate predicate);

  /// Stateful rules carry history; call reset() before reusing on a new run.
  void reset();
  bool operator()(const ScreeningState& state);
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  std::string name_;
  Predicate predicate_;
  std::size_t window_ = 0;
  std::vector<std::size_t> sizes_;
};

/// Parses "none", "fixed:<T>", "size-m" or "stable:<window>".
StopRule parse_stop_rule(const std::string& text, std::size_t m);

struct ObservationStream {
  std::size_t k = 0;
  std::vector<std::string> labels;          // arm labels, in arm-index order
  std::vector<std::int64_t> times;          // external time stamp for each step
  std::vector<StepObservations> steps;
};

struct TraceRecord {
  std::size_t time = 0;
  std::int64_t stamp = 0;               // external time label (0 for T = 0)
  std::vector<std::size_t> survivors;
  std::vector<BoundPair> bounds;        // empty when bounds were not recorded
  std::vector<double> centers;
  double threshold = -kInf;
};

struct ScreeningTrace {
  std::size_t k = 0;
  std::size_t m = 0;
  double alpha = 0.0;
  double level = 0.0;                   // alpha_km
  std::string constructor;
  std::string stop_rule;
  std::vector<TraceRecord> records;     // strictly increasing in time
  std::map<std::size_t, ScreeningState> snapshots;  // always holds the final time

  [[nodiscard]] const ScreeningState& final_state() const { return snapshots.rbegin()->second; }
};

struct TraceOptions {
  bool record_bounds = true;
  std::vector<std::size_t> snapshot_times;
};

/// Runs SCS over a stream until the stream ends or `stop` fires.
ScreeningTrace run_scs(const ObservationStream& stream, const ScreeningConfig& cfg, StopRule stop,
                       const TraceOptions& options = {});

/// LUCB stopping condition: the top-m arms by estimate (ties to the smaller
/// index) form U_T; true iff every upper bound outside U_T lies strictly below
/// every lower bound inside it.
bool lucb_stopping(std::span<const BoundPair> bounds, std::span<const double> estimates,
                   std::size_t m);

}  // namespace scs
