#pragma once

// Post-screening inference: confidence intervals for the arms kept by SCS at
// a stopping time tau, with the level adjusted so that the expected fraction
// of selected arms whose interval misses (the stopped false coverage rate)
// stays below alpha.
//
//   psi        : level alpha * |S_tau| / (2k)
//   bonferroni : level m * alpha / (2k)

#include <cstddef>
#include <string>
#include <vector>

#include "scs/confseq.hpp"
#include "scs/screening.hpp"

namespace scs {

enum class PsiMethod { psi, bonferroni };

PsiMethod parse_psi_method(const std::string& text);
std::string to_string(PsiMethod method);

/// alpha * selected / (2k); requires 1 <= selected <= k.
double psi_level(std::size_t selected, std::size_t k, double alpha);
/// m * alpha / (2k); requires 1 <= m < k.
double bonferroni_level(std::size_t m, std::size_t k, double alpha);

struct PsiInterval {
  std::size_t arm = 0;
  BoundPair adjusted;   // at level_used
  BoundPair screening;  // at alpha_km, for comparison
  double center = 0.0;
};

struct PsiReport {
  std::size_t tau = 0;
  std::vector<std::size_t> selected;
  PsiMethod method = PsiMethod::psi;
  double fcr_alpha = 0.0;
  double level_used = 0.0;
  double screening_level = 0.0;
  std::vector<PsiInterval> intervals;  // one per selected arm, in arm order
};

/// Builds the report from the screening state at tau. `fcr_alpha` is the FCR
/// target (the screening alpha by default).
PsiReport build_psi_report(const ScreeningState& at_tau, PsiMethod method,
                           const ScreeningConfig& cfg, double fcr_alpha);

/// Looks up the snapshot at `tau` in the trace; throws ValidationError if the
/// trace kept no state for that time.
PsiReport build_psi_report(const ScreeningTrace& trace, std::size_t tau, PsiMethod method,
                           const ScreeningConfig& cfg, double fcr_alpha);

/// Which clause of the level-ordering result applies to (k, m).
enum class LevelCase {
  m1_single,     // m = 1, |S| = 1:  bonferroni = psi < alpha_km
  m1_multiple,   // m = 1, |S| >= 2: bonferroni < alpha_km <= psi
  interior,      // 2 <= m <= k-2:   alpha_km <= bonferroni <= psi
  top_heavy,     // m = k-1, k >= 3: alpha_km < bonferroni <= psi
};

std::string to_string(LevelCase c);

enum class Relation { less, equal, greater };

struct LevelComparison {
  double alpha_km = 0.0;
  double bonferroni = 0.0;
  double psi = 0.0;
  LevelCase level_case = LevelCase::interior;
  // pairwise relations, decided exactly on the rational coefficients of alpha
  Relation km_vs_bonferroni = Relation::equal;
  Relation bonferroni_vs_psi = Relation::equal;
  Relation km_vs_psi = Relation::equal;
  std::string ordering;  // e.g. "alpha_km < alpha_B = alpha_psi"
};

/// Requires 1 <= m < k and m <= selected <= k.
LevelComparison compare_levels(std::size_t k, std::size_t m, std::size_t selected,
                               double alpha = 0.1);

}  // namespace scs
