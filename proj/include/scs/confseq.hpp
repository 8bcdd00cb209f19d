#pragma once

// Anytime-valid confidence sequences for a single parameter.
//
// Every constructor here returns a pair (L_T(alpha), U_T(alpha)) such that
//   P(exists T: theta <= L_T(alpha)) <= alpha  and  P(exists T: theta >= U_T(alpha)) <= alpha.
// The sub-Gaussian, heavy-tailed and missing-data families are obtained by
// inverting nonnegative supermartingales M^+ / M^- at the threshold 1/alpha
// (Ville's inequality); the quantile family uses a stitched empirical-process
// boundary. All logarithms are natural and all products are accumulated as
// log-sums.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Lower/upper confidence-sequence values for one arm at one time.
/// Invariant: lower < upper (strict, also when one side is infinite).
struct BoundPair {
  double lower = -kInf;
  double upper = kInf;
  double level = 0.5;

  [[nodiscard]] bool contains(double theta) const { return lower < theta && theta < upper; }
  [[nodiscard]] double width() const { return upper - lower; }
  /// true iff this interval is contained in `other`.
  [[nodiscard]] bool within(const BoundPair& other) const {
    return other.lower <= lower && upper <= other.upper;
  }
};

/// Validating factory; throws ValidationError on lower >= upper, NaN, or a level outside (0,1).
BoundPair make_bound_pair(double lower, double upper, double level);

/// The unbounded pair returned before any data is seen.
BoundPair unbounded_pair(double level);

/// Throws ValidationError unless 0 < alpha < 1.
void require_level(double alpha, const char* what = "alpha");

/// One ingested observation together with the weight it was ingested with.
struct WeightedObs {
  double lambda;
  double x;
};

/// Which optional per-arm buffers an arm keeps besides its running sums.
struct RetainMode {
  bool sorted = false;   // sorted multiset of observations (quantile family)
  bool history = false;  // full (lambda, x) history (heavy-tailed family)
};

/// Per-arm sufficient statistics. Missing ticks leave the state untouched,
/// so obs_count is the number of *observed* points T_i.
struct ArmState {
  std::size_t arm_id = 0;
  std::size_t obs_count = 0;
  double weighted_sum = 0.0;   // sum lambda_t * x_t
  double lambda_sum = 0.0;     // sum lambda_t
  double lambda_sq_sum = 0.0;  // sum lambda_t^2
  double raw_sum = 0.0;        // sum x_t
  RetainMode retain{};
  std::vector<double> sorted_obs;     // kept only when retain.sorted
  std::vector<WeightedObs> history;   // kept only when retain.history

  [[nodiscard]] double raw_mean() const;
  [[nodiscard]] double weighted_mean() const;
};

ArmState make_arm_state(std::size_t arm_id, RetainMode retain = {});

/// Ingests one tick. An empty `observation` is a missing value and leaves the
/// state unchanged. Throws ValidationError on non-finite x, or lambda that is
/// not finite and strictly positive.
void update_arm(ArmState& state, std::optional<double> observation, double lambda);

// ---------------------------------------------------------------------------
// Weight schedules

/// min(1, sqrt(8 log(1/alpha) / (t log(t+1)))), t >= 1.
double default_lambda(std::size_t t, double alpha);

/// A predictable weight rule. The weight for the t-th observation of an arm
/// may depend on t and on the arm's state *before* that observation only;
/// the call signature gives no access to the value being weighted.
class LambdaSchedule {
 public:
  using Rule = std::function<double(std::size_t t, const ArmState& before)>;

  static LambdaSchedule constant(double lambda);
  /// The shrinking default schedule evaluated at a fixed level `alpha`.
  static LambdaSchedule shrinking(double alpha);
  static LambdaSchedule custom(Rule rule);

  /// Weight for the t-th observation (t = before.obs_count + 1).
  [[nodiscard]] double operator()(const ArmState& before) const;
  [[nodiscard]] bool is_constant() const { return kind_ == Kind::constant; }
  [[nodiscard]] std::string describe() const;

 private:
  enum class Kind { constant, shrinking, custom };
  Kind kind_ = Kind::constant;
  double value_ = 1.0;  // the constant, or the schedule's alpha
  std::shared_ptr<const std::vector<double>> table_;
  Rule rule_;
};

// ---------------------------------------------------------------------------
// Sub-Gaussian family

struct SubGaussianConfig {
  double sigma2 = 1.0;
  LambdaSchedule schedule = LambdaSchedule::constant(0.5);
};

/// (V - W, V + W) with V = sum(lambda x)/sum(lambda),
/// W = (sigma2 * sum(lambda^2)/2 - log alpha) / sum(lambda). Unbounded when sum(lambda) = 0.
BoundPair subgaussian_bounds(const ArmState& state, const SubGaussianConfig& cfg, double alpha);

enum class Side { plus, minus };

/// log M^{+/-}_T(theta) = sum_t [ -/+ lambda_t (x_t - theta) - sigma2 lambda_t^2 / 2 ],
/// evaluated from the running sums. M^+ crosses 1/alpha exactly when theta >= U_T(alpha),
/// M^- exactly when theta <= L_T(alpha).
double subgaussian_log_eprocess(const ArmState& state, double theta, Side side, double sigma2);

/// Same process evaluated by summing an explicit (lambda, x) history.
double subgaussian_log_eprocess(std::span<const WeightedObs> history, double theta, Side side,
                                double sigma2);

/// exp(log M); may overflow to +inf for extreme theta, never negative.
double evaluate_eprocess(const ArmState& state, double theta, Side side, double sigma2);

// ---------------------------------------------------------------------------
// Heavy-tailed family (bounded p-th central moment, 1 < p <= 2)

struct HeavyTailConfig {
  double p = 2.0;
  double v = 1.0;
  LambdaSchedule schedule = LambdaSchedule::constant(0.5);
  double bracket_lo = -1e6;
  double bracket_hi = 1e6;
  double rel_tol = 1e-9;
};

/// sgn(x) log(1 + |x| + |x|^p / p).
double phi_p(double x, double p);

/// log M^{+/-}(theta) = sum_t [ -/+ phi_p(lambda_t (x_t - theta)) - lambda_t^p v / p ].
/// Nondecreasing in theta for Side::plus, nonincreasing for Side::minus.
double heavytail_log_eprocess(std::span<const WeightedObs> history, double theta, Side side,
                              const HeavyTailConfig& cfg);

struct HeavyTailBounds {
  BoundPair pair;
  // false when no crossing of 1/alpha was found inside the bracket
  bool lower_bracketed = false;
  bool upper_bracketed = false;
};

/// Inverts the heavy-tailed supermartingales by bisection inside [bracket_lo, bracket_hi].
/// A side with no crossing inside the bracket becomes infinite and is reported unbracketed.
HeavyTailBounds heavytail_bounds(std::span<const WeightedObs> history, const HeavyTailConfig& cfg,
                                 double alpha);

// ---------------------------------------------------------------------------
// Quantile family

struct QuantileConfig {
  double q = 0.5;
};

/// l(t) = (1.4 log log(2.1 t) + log(5/alpha)) / t
double quantile_boundary_l(std::size_t t, double alpha);
/// f_t(q) = 1.5 sqrt(q (1-q) l(t)) + 0.8 l(t)
double quantile_boundary_f(std::size_t t, double q, double alpha);

/// sup{x : F_T(x) <= q} over a sorted sample (+inf when the whole sample qualifies).
double upper_empirical_quantile(std::span<const double> sorted, double q);
/// sup{x : F_T(x) < q} over a sorted sample (-inf when no point qualifies).
double lower_empirical_quantile(std::span<const double> sorted, double q);

/// Requires state.retain.sorted.
BoundPair quantile_bounds(const ArmState& state, const QuantileConfig& cfg, double alpha);

// ---------------------------------------------------------------------------
// Missing-data sub-Gaussian family with a fixed weight

struct MissingDataConfig {
  double sigma2 = 25.0;
  double lambda = 0.15;
};

/// Xbar -/+ (log(1/alpha) / (lambda T_i) + sigma2 lambda / 2) over observed points only;
/// unbounded when T_i = 0.
BoundPair missing_data_bounds(const ArmState& state, const MissingDataConfig& cfg, double alpha);

}  // namespace scs
