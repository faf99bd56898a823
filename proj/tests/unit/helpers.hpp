#pragma once

#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "mvnav/occupancy_grid.hpp"

namespace testing {

inline mvnav::OccupancyGrid open_grid(int w, int h, double radius) {
  return mvnav::OccupancyGrid(w, h, std::vector<std::uint8_t>(std::size_t(w) * h, 1), radius);
}

// Upper-tail p-value of Pearson's statistic for observed vs expected counts.
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++bins;
  }
  boost::math::chi_squared_distribution<double> dist(bins - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace testing
