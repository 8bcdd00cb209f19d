#pragma once

// Seeded Monte Carlo harness for screening experiments.
//
// Replication r of an experiment with master seed s draws its data from a
// mt19937_64 engine seeded with replication_seed(s, r), so the result of a
// replication does not depend on how replications are scheduled across
// threads. Aggregates are reduced in replication order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scs/psi.hpp"
#include "scs/screening.hpp"

namespace scs {

enum class ArmKind { bernoulli, gaussian, custom_quantile };

ArmKind parse_arm_kind(const std::string& text);
std::string to_string(ArmKind kind);

/// Ground truth for a simulated experiment. `theta` is the mean (bernoulli,
/// gaussian) or the q-th quantile (custom_quantile: theta_i plus centred
/// standard Cauchy noise).
struct ArmModel {
  ArmKind kind = ArmKind::bernoulli;
  std::vector<double> theta;
  double sigma = 1.0;  // gaussian only
  double q = 0.5;      // custom_quantile only

  /// theta_i = 1 - i/k, i = 1..k
  static ArmModel bernoulli_linear(std::size_t k);
  static ArmModel gaussian(std::vector<double> means, double sigma = 1.0);

  void validate() const;
  /// {i : theta_i >= m-th largest theta}, ascending.
  [[nodiscard]] std::vector<std::size_t> top_set(std::size_t m) const;
};

/// splitmix64 finaliser applied to master + golden_gamma * (index + 1).
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index);

/// Draws one tick for every arm at a time, in arm order.
class StreamGenerator {
 public:
  StreamGenerator(ArmModel model, std::uint64_t seed);

  void next_into(std::vector<std::optional<double>>& out);
  StepObservations next();

 private:
  double uniform();

  ArmModel model_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double quantile_shift_ = 0.0;
};

/// A fully materialised stream of `t_max` ticks.
ObservationStream generate_stream(const ArmModel& model, std::size_t t_max, std::uint64_t seed);

/// Fraction of `selected` arms whose interval misses the truth; 0 for an empty selection.
double compute_fcp(std::span<const std::size_t> selected, std::span<const BoundPair> intervals,
                   std::span<const double> truth);

/// |a ∩ b| / |a ∪ b|; 1 when both are empty.
double compute_jac(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct ExperimentConfig {
  ScreeningConfig screening;
  ArmModel model;
  std::size_t reps = 200;
  std::vector<std::size_t> checkpoints{100, 1000, 10000};
  PsiMethod psi_method = PsiMethod::psi;
  std::optional<double> fcr_alpha;           // defaults to screening.alpha
  std::optional<std::size_t> stable_window = 50;  // data-dependent stopping time
  std::uint64_t seed = 20240601;
  unsigned threads = 0;                      // 0: hardware concurrency
  bool keep_replications = true;

  [[nodiscard]] std::size_t horizon() const;
  void validate() const;
};

struct ReplicationSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool monotone_ok = true;              // S_T subset of S_{T-1} at every step
  bool floor_ok = true;                 // |S_T| >= m at every step
  bool uniform_coverage_ok = true;      // top set inside S_T at every step
  std::optional<std::size_t> first_miss;     // first T where a top arm was dropped
  std::optional<std::size_t> identified_at;  // first T with S_T equal to the top set
  std::vector<std::size_t> size_trajectory;  // per checkpoint
  std::vector<double> fcp_trajectory;        // configured PSI method, per checkpoint
  std::vector<double> fcp_psi;               // PSI intervals, per checkpoint
  std::vector<double> fcp_bonferroni;        // Bonferroni-PSI intervals, per checkpoint
  std::vector<double> fcp_screening;         // alpha_km intervals, per checkpoint
  std::vector<double> jac_trajectory;        // JAC(top set, S_T), per checkpoint
  std::optional<std::size_t> stopped_tau;    // data-dependent stopping time
  double stopped_fcp = 0.0;
  double stopped_fcp_bonferroni = 0.0;
};

struct CheckpointAggregate {
  std::size_t time = 0;
  double mean_size = 0.0;
  double median_size = 0.0;
  double mean_jac = 0.0;
  double fcr = 0.0;             // mean FCP of the configured PSI method
  double fcr_se = 0.0;
  double fcr_psi = 0.0;
  double fcr_bonferroni = 0.0;
  double fcr_screening = 0.0;
  double coverage_failure_rate = 0.0;  // fraction of runs with a top arm dropped by this time
  double identification_rate = 0.0;    // fraction of runs with S_T equal to the top set
};

struct MeanWithError {
  double mean = 0.0;
  double se = 0.0;
};

struct ExperimentReport {
  std::size_t k = 0;
  std::size_t m = 0;
  double alpha = 0.0;
  double fcr_alpha = 0.0;
  std::string constructor;
  std::string model;
  std::string psi_method;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::vector<CheckpointAggregate> checkpoints;
  double coverage_failure_rate = 0.0;   // over the full horizon
  std::size_t monotone_violations = 0;
  std::size_t floor_violations = 0;
  std::optional<std::size_t> stable_window;
  double mean_stopped_tau = 0.0;
  MeanWithError stopped_fcr_psi;
  MeanWithError stopped_fcr_bonferroni;
  std::vector<ReplicationSummary> replications;
};

ReplicationSummary run_replication(const ExperimentConfig& cfg, std::size_t index);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Sample mean and its standard error.
MeanWithError mean_and_se(std::span<const double> values);

}  // namespace scs
