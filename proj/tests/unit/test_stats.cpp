#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mvnav/error.hpp"
#include "oracles.hpp"
#include "mvnav/stats.hpp"

using namespace mvnav;

namespace {

struct SwCase {
  const char* name;
  std::vector<double> data;
  double w;
  double p;
};

// Reference values from scipy.stats.shapiro (scipy 1.15.3).
const std::vector<SwCase>& sw_cases() {
  static const std::vector<SwCase> cases{
      {"n3", {1.0, 2.0, 4.0}, 0.964285714286, 0.636886845029},
      {"n5", {1.0, 2.0, 3.0, 4.0, 5.0}, 0.986762155212, 0.967173934973},
      {"n7", {2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8}, 0.940136678198, 0.639951374615},
      {"n11", {148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236}, 0.788814694863, 0.0067038140619},
      {"n12",
       {0.139, 0.157, 0.175, 0.256, 0.344, 0.413, 0.503, 0.577, 0.614, 0.655, 0.954, 1.392},
       0.881157749976,
       0.0906926285472},
      {"n20",
       {10.0025, 10.5975, 9.4517, 8.2188, 9.0907, 8.0167, 10.1203, 12.6804, 9.0156, 8.7591,
        10.9797, 10.7138, 10.2108, 8.1391, 9.9415, 11.3906, 7.3116, 9.0848, 6.1976, 7.4209},
       0.992122459573,
       0.999643804678},
      {"n30",
       {0.1976, 0.3484, 0.8836, 0.0751, 0.06,   1.2236, 0.7729, 2.196,  0.4752, 0.5213,
        1.1808, 0.5265, 0.0222, 0.2933, 1.0143, 0.6347, 1.3966, 0.0083, 0.9038, 0.2503,
        0.3556, 3.0749, 1.4044, 3.7954, 1.7481, 2.243,  0.1449, 0.3026, 0.2388, 1.1482},
       0.834791379452,
       0.000302694481248},
      {"n50",
       {0.3613, 0.5982, 0.0593, 0.3876, 0.323,  0.1502, 0.8163, 0.3794, 0.9787, 0.59,
        0.6051, 0.638,  0.6765, 0.1508, 0.4403, 0.2396, 0.4025, 0.0967, 0.9678, 0.215,
        0.6718, 0.3004, 0.8741, 0.6622, 0.1316, 0.8451, 0.9449, 0.9039, 0.5697, 0.1455,
        0.1925, 0.9279, 0.5523, 0.1806, 0.8841, 0.6416, 0.5697, 0.3763, 0.411,  0.2395,
        0.0381, 0.8762, 0.4677, 0.5476, 0.3222, 0.7513, 0.0252, 0.3722, 0.0304, 0.1229},
       0.946873736025,
       0.0254201006698},
  };
  return cases;
}

MetricsReport report(double va, double toc, double g, double s, std::size_t c) {
  return {va, toc, g, s, c};
}

}  // namespace

TEST_CASE("Shapiro-Wilk matches reference values") {
  for (const auto& c : sw_cases()) {
    CAPTURE(c.name);
    const auto r = shapiro_wilk(c.data);
    CHECK(r.statistic == doctest::Approx(c.w).epsilon(1e-6));
    CHECK(r.p_value == doctest::Approx(c.p).epsilon(2e-3));
  }
}

TEST_CASE("Shapiro-Wilk invariances and errors") {
  const std::vector<double> x{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8};
  std::vector<double> y;
  for (double v : x) y.push_back(-3.0 * v + 100.0);
  const auto a = shapiro_wilk(x), b = shapiro_wilk(y);
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
  CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-9));
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), InputError);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{3.0, 3.0, 3.0, 3.0}), InputError);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  int rejected = 0;
  for (int k = 0; k < 400; ++k) {
    std::vector<double> s(30);
    for (auto& v : s) v = nd(rng);
    rejected += shapiro_wilk(s).p_value < 0.05;
  }
  CHECK(rejected > 5);  // roughly 5% under the null
  CHECK(rejected < 40);
}

TEST_CASE("Welch t-test: reference and quadrature oracle") {
  const std::vector<double> a{19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0};
  const std::vector<double> b{28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7,
                              23.2, 17.5, 20.6, 18.0, 23.9, 21.6, 24.3, 20.4, 23.9, 13.3};
  const auto r = welch_t_test(a, b);
  CHECK(r.statistic == doctest::Approx(-2.225512039969852).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.035484530830010325).epsilon(1e-8));

  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> x(3 + k), y(5 + 2 * k);
    for (auto& v : x) v = nd(rng) * (1 + k % 3);
    for (auto& v : y) v = nd(rng) + 0.3 * k;
    double t = 0;
    const double p = oracles::welch_oracle(x, y, &t);
    const auto w = welch_t_test(x, y);
    CHECK(w.statistic == doctest::Approx(t).epsilon(1e-12));
    CHECK(w.p_value == doctest::Approx(p).epsilon(1e-7).scale(1e-3));
  }
  CHECK_THROWS_AS(welch_t_test(std::vector<double>{1.0}, b), InputError);
  CHECK_THROWS_AS(welch_t_test(std::vector<double>{1, 1, 1}, std::vector<double>{2, 2}), InputError);
}

TEST_CASE("Mann-Whitney U: exact p against brute-force enumeration") {
  double u = 0;
  const std::vector<double> a1{1, 2}, b1{3, 4};
  const auto r1 = mann_whitney_u(a1, b1);
  CHECK(r1.exact);
  CHECK(r1.u == 0.0);
  CHECK(r1.p_value == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ud(0, 1);
  for (int n1 = 1; n1 <= 6; ++n1) {
    for (int n2 = 1; n1 + n2 <= 10; ++n2) {
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<double> a(n1), b(n2);
        for (auto& v : a) v = ud(rng);
        for (auto& v : b) v = ud(rng) + 0.2 * rep;
        std::vector<double> counts;
        const double p = oracles::mwu_enumeration_p(a, b, &u, &counts);
        const auto r = mann_whitney_u(a, b);
        CAPTURE(n1);
        CAPTURE(n2);
        CHECK(r.exact);
        CHECK(r.u == u);
        CHECK(r.p_value == doctest::Approx(p).epsilon(1e-12));
        CHECK(mann_whitney_null_counts(n1, n2) == counts);
      }
    }
  }
}

TEST_CASE("Mann-Whitney U: normal approximation with ties") {
  const std::vector<double> a{1.5, 2.5, 2.5, 7, 9}, b{2.5, 3, 4, 8, 8, 10};
  const auto r = mann_whitney_u(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.u == 9.0);
  CHECK(r.p_value == doctest::Approx(0.3097402725973859).epsilon(1e-10));
  const std::vector<double> same{4, 4, 4};
  CHECK(mann_whitney_u(same, same).p_value == 1.0);
  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, same), InputError);
}

TEST_CASE("compare_report picks the test per metric") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  std::exponential_distribution<double> ed(1.0);
  std::vector<MetricsReport> ga, gb;
  for (int i = 0; i < 20; ++i) {
    ga.push_back(report(100 + 5 * nd(rng), 10 + nd(rng), -2 + 0.1 * nd(rng), std::pow(ed(rng), 3), 0));
    gb.push_back(report(140 + 5 * nd(rng), 10 + nd(rng), -2 + 0.1 * nd(rng), std::pow(ed(rng), 3), std::size_t(i % 4)));
  }
  const auto rows = compare_report(ga, gb);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].metric == "Va");
  CHECK(rows[0].test == "welch_t");
  CHECK(rows[0].p_value < 1e-10);  // clearly separated speeds
  CHECK(rows[1].test == "welch_t");
  CHECK(rows[1].p_value > 1e-3);
  CHECK(rows[3].metric == "S");
  CHECK(rows[3].test == "mann_whitney_u");  // heavy tails fail normality
  CHECK(rows[4].metric == "C");
  CHECK(rows[4].test == "mann_whitney_u");  // constant group

  const auto csv = format_comparison_csv(rows);
  CHECK(csv.rfind("metric,mean_a,mean_b,test,stat,p\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(format_comparison_table(rows).find("Va") != std::string::npos);

  std::vector<MetricsReport> two(ga.begin(), ga.begin() + 2);
  CHECK_THROWS_AS(compare_report(two, gb), InputError);
}
