#include "mvnav/benchmark_map.hpp"

namespace mvnav {

GrayImage corridor_benchmark_image() {
  constexpr int kSide = 200;
  GrayImage img{kSide, kSide, std::vector<std::uint8_t>(kSide * kSide, 0)};
  auto fill = [&](int x0, int y0, int x1, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) img.pixels[y * kSide + x] = 255;
    }
  };
  fill(20, 20, 180, 60);    // horizontal arm
  fill(140, 20, 180, 180);  // vertical arm
  return img;
}

EnvConfig corridor_benchmark_config() {
  EnvConfig c;
  c.agent_radius = 6.0;
  c.arrival_threshold = 10.0;
  c.max_steps = 2000;
  return c;
}

}  // namespace mvnav
