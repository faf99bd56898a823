#pragma once

#include <span>
#include <string>
#include <vector>

#include "mvnav/metrics.hpp"

namespace mvnav {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Royston's AS R94 algorithm: W and its p-value. Requires 3 <= n <= 5000
// and a nonzero range.
TestResult shapiro_wilk(std::span<const double> sample);

// Welch's unequal-variance t-test, two-sided, with Welch-Satterthwaite
// degrees of freedom. Each sample needs at least two values and the pooled
// standard error must be nonzero.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of sample a (midranks for ties)
  double p_value = 1.0;
  bool exact = false;
};

// Exact two-sided p by enumeration of the null distribution when there are no
// ties and n1 * n2 <= 400; otherwise the normal approximation with tie and
// continuity corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// P(U = u) numerators: counts[u] for u = 0..n1*n2 over all C(n1+n2, n1)
// equally likely rank assignments.
std::vector<double> mann_whitney_null_counts(int n1, int n2);

struct ComparisonRow {
  std::string metric;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::string test;  // "welch_t" or "mann_whitney_u"
  double statistic = 0.0;
  double p_value = 1.0;
};

// Per metric: Welch t-test when both groups pass Shapiro-Wilk at `alpha`
// (p >= alpha), Mann-Whitney U otherwise. Needs at least 3 runs per group.
std::vector<ComparisonRow> compare_report(const std::vector<MetricsReport>& group_a,
                                          const std::vector<MetricsReport>& group_b,
                                          double alpha = 0.05);

// CSV `metric,mean_a,mean_b,test,stat,p`.
std::string format_comparison_csv(const std::vector<ComparisonRow>& rows);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace mvnav
