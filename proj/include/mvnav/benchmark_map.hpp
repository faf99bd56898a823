#pragma once

#include <string_view>

#include "mvnav/env.hpp"
#include "mvnav/image_io.hpp"

namespace mvnav {

inline constexpr std::string_view kCorridorBenchmarkName = "benchmark:corridor";

// 200x200 desk-scale vessel: an L-shaped lumen (horizontal arm across the
// top, vertical arm down the right side) 40 px wide, so a radius-6 agent
// has a 28 px wide band of free centers.
GrayImage corridor_benchmark_image();

// Environment parameters scaled to the benchmark: radius 6, arrival 10,
// step cap 2000.
EnvConfig corridor_benchmark_config();

}  // namespace mvnav
