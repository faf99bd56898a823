#include "mvnav/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mvnav/error.hpp"

namespace mvnav {

namespace {

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_upper_tail(double z, double mean = 0.0, double sd = 1.0) {
  return boost::math::cdf(
      boost::math::complement(boost::math::normal_distribution<double>(mean, sd), z));
}

// cc[0] + cc[1] x + ... + cc[n-1] x^(n-1)
double poly(const double* cc, int n, double x) {
  double ret = cc[0];
  if (n > 1) {
    double p = x * cc[n - 1];
    for (int j = n - 2; j > 0; --j) p = (p + cc[j]) * x;
    ret += p;
  }
  return ret;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_variance(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace

TestResult shapiro_wilk(std::span<const double> sample) {
  const int n = static_cast<int>(sample.size());
  if (n < 3 || n > 5000) throw InputError("Shapiro-Wilk needs 3 <= n <= 5000");

  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19) || !(range > 1e-10 * std::abs(x.front()))) {
    throw InputError("Shapiro-Wilk sample has zero variance");
  }

  // Coefficients a[1..n/2] (1-based) for the lower half of the order
  // statistics, antisymmetric about the median.
  const int nn2 = n / 2;
  const double an = n;
  std::vector<double> a(std::size_t(nn2) + 1, 0.0);
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    std::vector<double> m(std::size_t(nn2) + 1, 0.0);
    const double an25 = an + 0.25;
    double summ2 = 0.0;
    for (int i = 1; i <= nn2; ++i) {
      m[i] = normal_quantile((i - 0.375) / an25);
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
    int i1 = 0;
    double fac = 0.0;
    if (n > 5) {
      i1 = 3;
      const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (int i = i1; i <= nn2; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation between the scaled data and coefficients.
  auto coef = [&](int i) -> double {  // signed coefficient of order statistic i (0-based)
    const int j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[std::size_t(i) + 1] : a[std::size_t(j) + 1];
  };
  double sa = 0.0;
  double sx = 0.0;
  for (int i = 0; i < n; ++i) {
    sa += coef(i);
    sx += x[i] / range;
  }
  sa /= n;
  sx /= n;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double asa = coef(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  double pw = 0.0;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6 / pi
    constexpr double stqr = 1.04719755119660;  // pi / 3
    pw = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    return {w, pw};
  }
  double y = std::log(w1);
  const double lxx = std::log(an);
  double mu = 0.0;
  double sd = 0.0;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sd = std::exp(poly(c4, 4, an));
  } else {
    mu = poly(c5, 4, lxx);
    sd = std::exp(poly(c6, 3, lxx));
  }
  pw = normal_upper_tail(y, mu, sd);
  return {w, pw};
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("Welch t-test needs two values per sample");
  const double va = sample_variance(a) / double(a.size());
  const double vb = sample_variance(b) / double(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw InputError("Welch t-test samples have zero variance");
  const double diff = mean_of(a) - mean_of(b);
  const double t = diff / std::sqrt(se2);
  const double df =
      se2 * se2 / (va * va / double(a.size() - 1) + vb * vb / double(b.size() - 1));
  const boost::math::students_t_distribution<double> dist(df);
  const double p = t == 0.0 ? 1.0 : 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p)};
}

std::vector<double> mann_whitney_null_counts(int n1, int n2) {
  if (n1 < 0 || n2 < 0) throw InputError("sample sizes must be nonnegative");
  // counts[i][j][u]: arrangements of i a-values and j b-values with U = u.
  // Built row by row over i, keeping only the previous row.
  const int umax = n1 * n2;
  std::vector<std::vector<double>> prev(std::size_t(n2) + 1,
                                        std::vector<double>(std::size_t(umax) + 1, 0.0));
  for (int j = 0; j <= n2; ++j) prev[j][0] = 1.0;  // i = 0
  for (int i = 1; i <= n1; ++i) {
    std::vector<std::vector<double>> cur(std::size_t(n2) + 1,
                                         std::vector<double>(std::size_t(umax) + 1, 0.0));
    cur[0][0] = 1.0;
    for (int j = 1; j <= n2; ++j) {
      // Largest value is an a-value (beats all j b-values) or a b-value.
      for (int u = 0; u <= i * j; ++u) {
        double c = cur[j - 1][u];
        if (u >= j) c += prev[j][u - j];
        cur[j][u] = c;
      }
    }
    prev = std::move(cur);
  }
  return prev[n2];
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("Mann-Whitney U needs nonempty samples");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double midrank = 0.5 * double(i + j) + 1.0;
    const double t = double(j - i + 1);
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k <= j; ++k) {
      if (pooled[k].second == 0) rank_sum_a += midrank;
    }
    i = j + 1;
  }

  MannWhitneyResult res;
  res.u = rank_sum_a - double(n1) * double(n1 + 1) / 2.0;
  const double mu = double(n1) * double(n2) / 2.0;

  if (!ties && n1 * n2 <= 400) {
    res.exact = true;
    const auto counts = mann_whitney_null_counts(int(n1), int(n2));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(res.u));
    const double lower = std::accumulate(counts.begin(), counts.begin() + std::ptrdiff_t(u) + 1, 0.0);
    const double upper = std::accumulate(counts.begin() + std::ptrdiff_t(u), counts.end(), 0.0);
    res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    return res;
  }

  const double var = double(n1) * double(n2) / 12.0 *
                     (double(n + 1) - tie_term / (double(n) * double(n - 1)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = (std::abs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p_value = z <= 0.0 ? 1.0 : std::min(1.0, 2.0 * normal_upper_tail(z));
  return res;
}

std::vector<ComparisonRow> compare_report(const std::vector<MetricsReport>& group_a,
                                          const std::vector<MetricsReport>& group_b,
                                          double alpha) {
  if (group_a.size() < 3 || group_b.size() < 3) {
    throw InputError("comparison needs at least 3 runs per group");
  }
  struct Metric {
    const char* name;
    double (*get)(const MetricsReport&);
  };
  static constexpr Metric kMetrics[] = {
      {"Va", [](const MetricsReport& r) { return r.average_speed; }},
      {"TOC", [](const MetricsReport& r) { return r.time_of_completion; }},
      {"G", [](const MetricsReport& r) { return r.gracefulness; }},
      {"S", [](const MetricsReport& r) { return r.smoothness; }},
      {"C", [](const MetricsReport& r) { return double(r.collisions); }},
  };

  auto normal = [alpha](const std::vector<double>& v) {
    try {
      return shapiro_wilk(v).p_value >= alpha;
    } catch (const InputError&) {
      return false;  // constant sample
    }
  };

  std::vector<ComparisonRow> rows;
  for (const auto& m : kMetrics) {
    std::vector<double> a, b;
    for (const auto& r : group_a) a.push_back(m.get(r));
    for (const auto& r : group_b) b.push_back(m.get(r));
    ComparisonRow row;
    row.metric = m.name;
    row.mean_a = mean_of(a);
    row.mean_b = mean_of(b);
    if (normal(a) && normal(b)) {
      const auto t = welch_t_test(a, b);
      row.test = "welch_t";
      row.statistic = t.statistic;
      row.p_value = t.p_value;
    } else {
      const auto u = mann_whitney_u(a, b);
      row.test = "mann_whitney_u";
      row.statistic = u.u;
      row.p_value = u.p_value;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "metric,mean_a,mean_b,test,stat,p\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.10g,%.10g,%s,%.10g,%.10g\n", r.metric.c_str(),
                  r.mean_a, r.mean_b, r.test.c_str(), r.statistic, r.p_value);
    out += line;
  }
  return out;
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %14s %14s %-15s %12s %10s\n", "metric", "mean_a",
                "mean_b", "test", "stat", "p");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %14.4f %14.4f %-15s %12.4f %10.4g\n",
                  r.metric.c_str(), r.mean_a, r.mean_b, r.test.c_str(), r.statistic, r.p_value);
    out += line;
  }
  return out;
}

}  // namespace mvnav
