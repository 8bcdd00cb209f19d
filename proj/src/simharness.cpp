#include "scs/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "scs/errors.hpp"

namespace scs {

ArmKind parse_arm_kind(const std::string& text) {
  if (text == "bernoulli") return ArmKind::bernoulli;
  if (text == "gaussian") return ArmKind::gaussian;
  if (text == "custom-quantile") return ArmKind::custom_quantile;
  throw ValidationError("unknown arm model '" + text + "' (bernoulli | gaussian | custom-quantile)");
}

std::string to_string(ArmKind kind) {
  switch (kind) {
    case ArmKind::bernoulli:
      return "bernoulli";
    case ArmKind::gaussian:
      return "gaussian";
    case ArmKind::custom_quantile:
      return "custom-quantile";
  }
  return "?";
}

ArmModel ArmModel::bernoulli_linear(std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  ArmModel model;
  model.kind = ArmKind::bernoulli;
  model.theta.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    model.theta[i] = 1.0 - static_cast<double>(i + 1) / static_cast<double>(k);
  }
  return model;
}

ArmModel ArmModel::gaussian(std::vector<double> means, double sigma) {
  ArmModel model;
  model.kind = ArmKind::gaussian;
  model.theta = std::move(means);
  model.sigma = sigma;
  return model;
}

void ArmModel::validate() const {
  if (theta.empty()) throw ValidationError("arm model has no arms");
  for (double t : theta) {
    if (!std::isfinite(t)) throw ValidationError("arm parameters must be finite");
    if (kind == ArmKind::bernoulli && (t < 0.0 || t > 1.0)) {
      throw ValidationError("bernoulli theta must lie in [0,1]");
    }
  }
  if (kind == ArmKind::gaussian && !(sigma > 0.0)) throw ValidationError("sigma must be > 0");
  if (kind == ArmKind::custom_quantile && !(q > 0.0 && q < 1.0)) {
    throw ValidationError("q must lie in (0,1)");
  }
}

std::vector<std::size_t> ArmModel::top_set(std::size_t m) const {
  if (m < 1 || m > theta.size()) throw ValidationError("need 1 <= m <= k");
  std::vector<double> sorted = theta;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1),
                   sorted.end(), std::greater<>{});
  const double cut = sorted[m - 1];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] >= cut) out.push_back(i);
  }
  return out;
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

StreamGenerator::StreamGenerator(ArmModel model, std::uint64_t seed)
    : model_(std::move(model)), engine_(seed) {
  model_.validate();
  if (model_.kind == ArmKind::custom_quantile) {
    quantile_shift_ = std::tan(std::numbers::pi * (model_.q - 0.5));
  }
}

double StreamGenerator::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

void StreamGenerator::next_into(std::vector<std::optional<double>>& out) {
  out.resize(model_.theta.size());
  for (std::size_t i = 0; i < model_.theta.size(); ++i) {
    const double theta = model_.theta[i];
    switch (model_.kind) {
      case ArmKind::bernoulli:
        out[i] = uniform() < theta ? 1.0 : 0.0;
        break;
      case ArmKind::gaussian:
        out[i] = theta + model_.sigma * normal_(engine_);
        break;
      case ArmKind::custom_quantile: {
        // open interval keeps tan finite
        double u = uniform();
        while (u == 0.0) u = uniform();
        out[i] = theta + std::tan(std::numbers::pi * (u - 0.5)) - quantile_shift_;
        break;
      }
    }
  }
}

StepObservations StreamGenerator::next() {
  StepObservations out;
  next_into(out);
  return out;
}

ObservationStream generate_stream(const ArmModel& model, std::size_t t_max, std::uint64_t seed) {
  if (t_max < 1) throw ValidationError("T_max must be >= 1");
  StreamGenerator gen(model, seed);
  ObservationStream stream;
  stream.k = model.theta.size();
  for (std::size_t i = 0; i < stream.k; ++i) stream.labels.push_back(std::to_string(i + 1));
  stream.steps.reserve(t_max);
  stream.times.reserve(t_max);
  for (std::size_t t = 1; t <= t_max; ++t) {
    stream.steps.push_back(gen.next());
    stream.times.push_back(static_cast<std::int64_t>(t));
  }
  return stream;
}

// ---------------------------------------------------------------------------

double compute_fcp(std::span<const std::size_t> selected, std::span<const BoundPair> intervals,
                   std::span<const double> truth) {
  if (selected.empty()) return 0.0;
  std::size_t misses = 0;
  for (std::size_t arm : selected) {
    if (arm >= intervals.size() || arm >= truth.size()) {
      throw ValidationError("selected arm out of range");
    }
    if (!intervals[arm].contains(truth[arm])) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(selected.size());
}

double compute_jac(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<std::size_t> sa(a.begin(), a.end());
  std::vector<std::size_t> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::vector<std::size_t> inter;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  const std::size_t uni = sa.size() + sb.size() - inter.size();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

MeanWithError mean_and_se(std::span<const double> values) {
  MeanWithError out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t ExperimentConfig::horizon() const {
  return checkpoints.empty() ? 0 : *std::max_element(checkpoints.begin(), checkpoints.end());
}

void ExperimentConfig::validate() const {
  screening.validate();
  model.validate();
  if (model.theta.size() != screening.k) {
    throw ValidationError("arm model has " + std::to_string(model.theta.size()) +
                          " arms but k = " + std::to_string(screening.k));
  }
  if (reps < 1) throw ValidationError("reps must be >= 1");
  if (checkpoints.empty()) throw ValidationError("need at least one checkpoint");
  for (std::size_t c : checkpoints) {
    if (c < 1) throw ValidationError("checkpoints must be >= 1");
  }
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end()) {
    throw ValidationError("checkpoints must be strictly increasing");
  }
  if (fcr_alpha) require_level(*fcr_alpha, "fcr alpha");
  if (stable_window && *stable_window == 0) throw ValidationError("stable window must be >= 1");
}

namespace {

// FCP of the selected arms under intervals rebuilt at `level`.
double fcp_at_level(const ScreeningState& state, const ScreeningConfig& cfg, double level,
                    const std::vector<double>& truth) {
  if (state.survivors.empty()) return 0.0;
  std::size_t misses = 0;
  for (std::size_t arm : state.survivors) {
    if (!cfg.constructor.bounds(state.arms[arm], level).contains(truth[arm])) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(state.survivors.size());
}

}  // namespace

ReplicationSummary run_replication(const ExperimentConfig& cfg, std::size_t index) {
  const ScreeningConfig& sc = cfg.screening;
  const double fcr_alpha = cfg.fcr_alpha.value_or(sc.alpha);
  const double screening_level = effective_level(sc);
  const double bonf_level = bonferroni_level(sc.m, sc.k, fcr_alpha);
  const std::vector<std::size_t> top = cfg.model.top_set(sc.m);
  const std::vector<double>& truth = cfg.model.theta;

  ReplicationSummary out;
  out.index = index;
  out.seed = replication_seed(cfg.seed, index);

  StreamGenerator gen(cfg.model, out.seed);
  ScreeningState state = initial_state(sc);
  std::vector<std::optional<double>> obs(sc.k);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> sizes{state.survivors.size()};

  const std::size_t horizon = cfg.horizon();
  std::size_t next_checkpoint = 0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    previous = state.survivors;
    gen.next_into(obs);
    advance(state, obs, sc);

    const auto& now = state.survivors;
    if (!std::includes(previous.begin(), previous.end(), now.begin(), now.end())) {
      out.monotone_ok = false;
    }
    if (now.size() < sc.m) out.floor_ok = false;
    if (out.uniform_coverage_ok && !std::includes(now.begin(), now.end(), top.begin(), top.end())) {
      out.uniform_coverage_ok = false;
      out.first_miss = t;
    }
    if (!out.identified_at && now == top) out.identified_at = t;

    sizes.push_back(now.size());
    if (cfg.stable_window && !out.stopped_tau) {
      const std::size_t w = *cfg.stable_window;
      if ((t >= w && now.size() < sc.k && sizes[t] == sizes[t - w]) || t == horizon) {
        out.stopped_tau = t;
        out.stopped_fcp =
            fcp_at_level(state, sc, psi_level(now.size(), sc.k, fcr_alpha), truth);
        out.stopped_fcp_bonferroni = fcp_at_level(state, sc, bonf_level, truth);
      }
    }

    if (next_checkpoint < cfg.checkpoints.size() && t == cfg.checkpoints[next_checkpoint]) {
      const double psi_fcp = fcp_at_level(state, sc, psi_level(now.size(), sc.k, fcr_alpha), truth);
      const double bonf_fcp = fcp_at_level(state, sc, bonf_level, truth);
      out.size_trajectory.push_back(now.size());
      out.fcp_trajectory.push_back(cfg.psi_method == PsiMethod::psi ? psi_fcp : bonf_fcp);
      out.fcp_psi.push_back(psi_fcp);
      out.fcp_bonferroni.push_back(bonf_fcp);
      out.fcp_screening.push_back(fcp_at_level(state, sc, screening_level, truth));
      out.jac_trajectory.push_back(compute_jac(top, now));
      ++next_checkpoint;
    }
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  std::vector<ReplicationSummary> runs(cfg.reps);
  unsigned threads = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.reps)));
  if (threads == 1) {
    for (std::size_t r = 0; r < cfg.reps; ++r) runs[r] = run_replication(cfg, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = next++; r < cfg.reps; r = next++) runs[r] = run_replication(cfg, r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  ExperimentReport report;
  report.k = cfg.screening.k;
  report.m = cfg.screening.m;
  report.alpha = cfg.screening.alpha;
  report.fcr_alpha = cfg.fcr_alpha.value_or(cfg.screening.alpha);
  report.constructor = cfg.screening.constructor.name();
  report.model = to_string(cfg.model.kind);
  report.psi_method = to_string(cfg.psi_method);
  report.seed = cfg.seed;
  report.reps = cfg.reps;
  report.stable_window = cfg.stable_window;

  const double n = static_cast<double>(cfg.reps);
  for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
    const std::size_t t = cfg.checkpoints[c];
    CheckpointAggregate agg;
    agg.time = t;
    std::vector<double> sizes, fcp, fcp_psi, fcp_bonf, fcp_raw, jac;
    std::size_t failures = 0, identified = 0;
    for (const auto& run : runs) {
      sizes.push_back(static_cast<double>(run.size_trajectory[c]));
      fcp.push_back(run.fcp_trajectory[c]);
      fcp_psi.push_back(run.fcp_psi[c]);
      fcp_bonf.push_back(run.fcp_bonferroni[c]);
      fcp_raw.push_back(run.fcp_screening[c]);
      jac.push_back(run.jac_trajectory[c]);
      if (run.first_miss && *run.first_miss <= t) ++failures;
      if (run.identified_at && *run.identified_at <= t) ++identified;
    }
    const MeanWithError f = mean_and_se(fcp);
    agg.mean_size = mean_and_se(sizes).mean;
    agg.median_size = median_of(sizes);
    agg.mean_jac = mean_and_se(jac).mean;
    agg.fcr = f.mean;
    agg.fcr_se = f.se;
    agg.fcr_bonferroni = mean_and_se(fcp_bonf).mean;
    agg.fcr_psi = mean_and_se(fcp_psi).mean;
    agg.fcr_screening = mean_and_se(fcp_raw).mean;
    agg.coverage_failure_rate = static_cast<double>(failures) / n;
    agg.identification_rate = static_cast<double>(identified) / n;
    report.checkpoints.push_back(agg);
  }

  std::size_t failures = 0;
  std::vector<double> taus, stopped_psi, stopped_bonf;
  for (const auto& run : runs) {
    if (!run.uniform_coverage_ok) ++failures;
    if (!run.monotone_ok) ++report.monotone_violations;
    if (!run.floor_ok) ++report.floor_violations;
    if (run.stopped_tau) {
      taus.push_back(static_cast<double>(*run.stopped_tau));
      stopped_psi.push_back(run.stopped_fcp);
      stopped_bonf.push_back(run.stopped_fcp_bonferroni);
    }
  }
  report.coverage_failure_rate = static_cast<double>(failures) / n;
  report.mean_stopped_tau = mean_and_se(taus).mean;
  report.stopped_fcr_psi = mean_and_se(stopped_psi);
  report.stopped_fcr_bonferroni = mean_and_se(stopped_bonf);
  if (cfg.keep_replications) report.replications = std::move(runs);
  return report;
}

}  // namespace scs
