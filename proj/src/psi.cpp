#include "scs/psi.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>

#include "scs/errors.hpp"

namespace scs {

PsiMethod parse_psi_method(const std::string& text) {
  if (text == "psi") return PsiMethod::psi;
  if (text == "bonferroni") return PsiMethod::bonferroni;
  throw ValidationError("unknown PSI method '" + text + "' (psi | bonferroni)");
}

std::string to_string(PsiMethod method) {
  return method == PsiMethod::psi ? "psi" : "bonferroni";
}

double psi_level(std::size_t selected, std::size_t k, double alpha) {
  require_level(alpha);
  if (selected < 1 || selected > k) throw ValidationError("need 1 <= |S| <= k");
  return alpha * static_cast<double>(selected) / (2.0 * static_cast<double>(k));
}

double bonferroni_level(std::size_t m, std::size_t k, double alpha) {
  require_level(alpha);
  if (m < 1 || m >= k) throw ValidationError("need 1 <= m < k");
  return static_cast<double>(m) * alpha / (2.0 * static_cast<double>(k));
}

PsiReport build_psi_report(const ScreeningState& at_tau, PsiMethod method,
                           const ScreeningConfig& cfg, double fcr_alpha) {
  cfg.validate();
  require_level(fcr_alpha, "fcr alpha");
  if (at_tau.arms.size() != cfg.k) throw ValidationError("state does not match config k");

  PsiReport report;
  report.tau = at_tau.time;
  report.selected = at_tau.survivors;
  report.method = method;
  report.fcr_alpha = fcr_alpha;
  report.screening_level = effective_level(cfg);
  report.level_used = method == PsiMethod::psi
                          ? psi_level(report.selected.size(), cfg.k, fcr_alpha)
                          : bonferroni_level(cfg.m, cfg.k, fcr_alpha);

  report.intervals.reserve(report.selected.size());
  for (std::size_t arm : report.selected) {
    const ArmState& state = at_tau.arms[arm];
    report.intervals.push_back(PsiInterval{
        .arm = arm,
        .adjusted = cfg.constructor.bounds(state, report.level_used),
        .screening = cfg.constructor.bounds(state, report.screening_level),
        .center = cfg.constructor.center(state),
    });
  }
  return report;
}

PsiReport build_psi_report(const ScreeningTrace& trace, std::size_t tau, PsiMethod method,
                           const ScreeningConfig& cfg, double fcr_alpha) {
  auto it = trace.snapshots.find(tau);
  if (it == trace.snapshots.end()) {
    throw ValidationError("trace holds no state at tau = " + std::to_string(tau));
  }
  return build_psi_report(it->second, method, cfg, fcr_alpha);
}

std::string to_string(LevelCase c) {
  switch (c) {
    case LevelCase::m1_single:
      return "a-i";
    case LevelCase::m1_multiple:
      return "a-ii";
    case LevelCase::interior:
      return "b";
    case LevelCase::top_heavy:
      return "c";
  }
  return "?";
}

namespace {

// Levels as p/q multiples of alpha, compared by cross-multiplication.
struct Ratio {
  std::uint64_t num;
  std::uint64_t den;
};

Relation compare(Ratio a, Ratio b) {
  const std::uint64_t lhs = a.num * b.den;
  const std::uint64_t rhs = b.num * a.den;
  if (lhs < rhs) return Relation::less;
  if (lhs > rhs) return Relation::greater;
  return Relation::equal;
}

}  // namespace

LevelComparison compare_levels(std::size_t k, std::size_t m, std::size_t selected, double alpha) {
  if (k < 2 || m < 1 || m >= k) throw ValidationError("need 1 <= m < k");
  if (selected < m || selected > k) throw ValidationError("need m <= |S| <= k");

  LevelComparison out;
  out.alpha_km = effective_level(k, m, alpha);
  out.bonferroni = bonferroni_level(m, k, alpha);
  out.psi = psi_level(selected, k, alpha);

  if (m == 1) {
    out.level_case = selected == 1 ? LevelCase::m1_single : LevelCase::m1_multiple;
  } else if (m == k - 1) {
    out.level_case = LevelCase::top_heavy;
  } else {
    out.level_case = LevelCase::interior;
  }

  const Ratio km{1, 2 * m * (k - m)};
  const Ratio bonf{m, 2 * k};
  const Ratio psi{selected, 2 * k};
  out.km_vs_bonferroni = compare(km, bonf);
  out.bonferroni_vs_psi = compare(bonf, psi);
  out.km_vs_psi = compare(km, psi);

  // Render the total order, smallest first.
  std::array<std::pair<const char*, Ratio>, 3> items{
      {{"alpha_km", km}, {"alpha_B", bonf}, {"alpha_psi", psi}}};
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return compare(a.second, b.second) == Relation::less;
  });
  out.ordering = items[0].first;
  for (std::size_t i = 1; i < items.size(); ++i) {
    out.ordering += compare(items[i - 1].second, items[i].second) == Relation::equal ? " = " : " < ";
    out.ordering += items[i].first;
  }
  return out;
}

}  // namespace scs
