#include "mvnav/occupancy_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "mvnav/benchmark_map.hpp"
#include "mvnav/error.hpp"

namespace mvnav {

namespace {

constexpr std::array<char, 7> kGridMagic = {'M', 'V', 'G', 'R', 'I', 'D', '1'};

// One-dimensional squared distance transform of a sampled function
// (lower envelope of parabolas).
void distance_transform_1d(const double* f, double* d, int n, std::vector<int>& v,
                           std::vector<double>& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = f[p] == kInf ? kInf : (double(q) - p) * (double(q) - p) + f[p];
  }
}

void pack_bits(const std::vector<std::uint8_t>& mask, std::vector<std::uint8_t>& out) {
  const std::size_t nbytes = (mask.size() + 7) / 8;
  const std::size_t base = out.size();
  out.resize(base + nbytes, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out[base + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
}

std::vector<std::uint8_t> unpack_bits(const std::uint8_t* data, std::size_t count) {
  std::vector<std::uint8_t> mask(count);
  for (std::size_t i = 0; i < count; ++i) mask[i] = (data[i / 8] >> (i % 8)) & 1u;
  return mask;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace

std::vector<double> squared_distance_to_wall(int width, int height,
                                             const std::vector<std::uint8_t>& navigable) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Pad by one wall cell on every side so the grid border acts as wall.
  const int pw = width + 2;
  const int ph = height + 2;
  std::vector<double> grid(static_cast<std::size_t>(pw) * ph, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (navigable[static_cast<std::size_t>(y) * width + x]) {
        grid[static_cast<std::size_t>(y + 1) * pw + x + 1] = kInf;
      }
    }
  }

  const int n = std::max(pw, ph);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < pw; ++x) {
    for (int y = 0; y < ph; ++y) f[y] = grid[static_cast<std::size_t>(y) * pw + x];
    distance_transform_1d(f.data(), d.data(), ph, v, z);
    for (int y = 0; y < ph; ++y) grid[static_cast<std::size_t>(y) * pw + x] = d[y];
  }
  for (int y = 0; y < ph; ++y) {
    double* row = grid.data() + static_cast<std::size_t>(y) * pw;
    std::copy(row, row + pw, f.begin());
    distance_transform_1d(f.data(), d.data(), pw, v, z);
    std::copy(d.begin(), d.begin() + pw, row);
  }

  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out[static_cast<std::size_t>(y) * width + x] =
          grid[static_cast<std::size_t>(y + 1) * pw + x + 1];
    }
  }
  return out;
}

OccupancyGrid::OccupancyGrid(int width, int height, std::vector<std::uint8_t> navigable,
                             double agent_radius)
    : width_(width), height_(height), navigable_(std::move(navigable)) {
  if (width <= 0 || height <= 0) throw InputError("empty image");
  if (navigable_.size() != static_cast<std::size_t>(width) * height) {
    throw InputError("mask size does not match grid dimensions");
  }
  if (!(agent_radius > 0.0)) throw InputError("agent radius must be positive");
  for (auto& c : navigable_) c = c ? 1 : 0;

  const auto dist2 = squared_distance_to_wall(width, height, navigable_);
  const double r2 = agent_radius * agent_radius;
  inflated_.resize(navigable_.size());
  for (std::size_t i = 0; i < navigable_.size(); ++i) inflated_[i] = dist2[i] > r2 ? 1 : 0;
  finish();
}

OccupancyGrid OccupancyGrid::from_masks(int width, int height, std::vector<std::uint8_t> navigable,
                                        std::vector<std::uint8_t> inflated) {
  if (width <= 0 || height <= 0) throw InputError("empty image");
  const auto n = static_cast<std::size_t>(width) * height;
  if (navigable.size() != n || inflated.size() != n) {
    throw InputError("mask size does not match grid dimensions");
  }
  OccupancyGrid g;
  g.width_ = width;
  g.height_ = height;
  g.navigable_ = std::move(navigable);
  g.inflated_ = std::move(inflated);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.inflated_[i] && !g.navigable_[i]) {
      throw InputError("inflated mask is not a subset of the navigable mask");
    }
  }
  g.finish();
  return g;
}

void OccupancyGrid::finish() {
  free_cells_.clear();
  for (std::size_t i = 0; i < inflated_.size(); ++i) {
    if (inflated_[i]) free_cells_.push_back(static_cast<std::uint32_t>(i));
  }
  if (free_cells_.empty()) throw InputError("no navigable region");
}

bool OccupancyGrid::is_free(const Vec2& p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  const double rx = std::round(p.x);
  const double ry = std::round(p.y);
  if (rx < 0 || ry < 0 || rx >= width_ || ry >= height_) return false;
  return inflated_[index(static_cast<int>(rx), static_cast<int>(ry))] != 0;
}

GrayImage OccupancyGrid::to_image() const {
  GrayImage img{width_, height_, std::vector<std::uint8_t>(navigable_.size())};
  for (std::size_t i = 0; i < navigable_.size(); ++i) img.pixels[i] = navigable_[i] ? 255 : 0;
  return img;
}

std::vector<std::uint8_t> OccupancyGrid::serialize() const {
  std::vector<std::uint8_t> out(kGridMagic.begin(), kGridMagic.end());
  put_u32(out, static_cast<std::uint32_t>(width_));
  put_u32(out, static_cast<std::uint32_t>(height_));
  pack_bits(navigable_, out);
  pack_bits(inflated_, out);
  return out;
}

OccupancyGrid OccupancyGrid::deserialize(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kHeader = kGridMagic.size() + 8;
  if (bytes.size() < kHeader || !std::equal(kGridMagic.begin(), kGridMagic.end(), bytes.begin())) {
    throw InputError("not an MVGRID1 grid cache");
  }
  const auto w = get_u32(bytes.data() + kGridMagic.size());
  const auto h = get_u32(bytes.data() + kGridMagic.size() + 4);
  const std::size_t cells = std::size_t(w) * h;
  const std::size_t packed = (cells + 7) / 8;
  if (w == 0 || h == 0 || bytes.size() != kHeader + 2 * packed) {
    throw InputError("truncated or oversized grid cache");
  }
  return from_masks(static_cast<int>(w), static_cast<int>(h),
                    unpack_bits(bytes.data() + kHeader, cells),
                    unpack_bits(bytes.data() + kHeader + packed, cells));
}

void OccupancyGrid::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  write_file_atomic(path,
                    std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

OccupancyGrid OccupancyGrid::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open grid cache '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

OccupancyGrid ingest_map(const GrayImage& bitmap, int threshold, double agent_radius) {
  if (bitmap.width <= 0 || bitmap.height <= 0 || bitmap.pixels.empty()) {
    throw InputError("empty image");
  }
  if (threshold < 0 || threshold > 255) throw InputError("threshold must be in 0..255");
  std::vector<std::uint8_t> mask(bitmap.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = bitmap.pixels[i] >= threshold ? 1 : 0;
  return OccupancyGrid(bitmap.width, bitmap.height, std::move(mask), agent_radius);
}

OccupancyGrid load_map(const std::string& spec, int threshold, double agent_radius) {
  if (spec == kCorridorBenchmarkName) {
    return ingest_map(corridor_benchmark_image(), threshold, agent_radius);
  }
  const std::filesystem::path path(spec);
  if (path.extension() == ".mvgrid") return OccupancyGrid::load(path);
  return ingest_map(read_png(path), threshold, agent_radius);
}

}  // namespace mvnav
