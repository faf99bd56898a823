#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvnav/geometry.hpp"
#include "mvnav/image_io.hpp"

namespace mvnav {

// Binary lumen mask plus its erosion by the agent disc.
//
// Cell (i, j) is centered at pixel coordinate (i, j). A cell is
// inflated-navigable when every cell within Euclidean distance
// `agent_radius` of it (inclusive) is navigable and inside the grid, so
// testing an agent center against the inflated mask is equivalent to testing
// the whole disc against the navigable mask. Immutable after construction.
class OccupancyGrid {
 public:
  // Computes the inflated mask with an exact Euclidean distance transform.
  // Throws InputError if the mask is empty or nothing survives inflation.
  OccupancyGrid(int width, int height, std::vector<std::uint8_t> navigable, double agent_radius);

  // Rebuilds a grid from stored masks without recomputing the inflation.
  static OccupancyGrid from_masks(int width, int height, std::vector<std::uint8_t> navigable,
                                  std::vector<std::uint8_t> inflated);

  int width() const { return width_; }
  int height() const { return height_; }

  bool navigable(int x, int y) const { return in_bounds(x, y) && navigable_[index(x, y)] != 0; }
  bool inflated(int x, int y) const { return in_bounds(x, y) && inflated_[index(x, y)] != 0; }

  // Agent-center collision test: true when a disc centered at `p` fits.
  bool is_free(const Vec2& p) const;

  const std::vector<std::uint8_t>& navigable_mask() const { return navigable_; }
  const std::vector<std::uint8_t>& inflated_mask() const { return inflated_; }

  // Row-major indices of the inflated-navigable cells.
  const std::vector<std::uint32_t>& free_cells() const { return free_cells_; }
  Vec2 cell_center(std::uint32_t index) const {
    return {static_cast<double>(index % width_), static_cast<double>(index / width_)};
  }

  // Grayscale rendering: lumen 255, wall 0.
  GrayImage to_image() const;

  // Cache format: "MVGRID1", width and height as little-endian u32, then the
  // navigable and inflated masks, each row-major and bit-packed LSB-first.
  std::vector<std::uint8_t> serialize() const;
  static OccupancyGrid deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static OccupancyGrid load(const std::filesystem::path& path);

 private:
  OccupancyGrid() = default;
  void finish();
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> navigable_;
  std::vector<std::uint8_t> inflated_;
  std::vector<std::uint32_t> free_cells_;
};

// Squared Euclidean distance from every cell to the nearest non-navigable
// cell, with everything outside the grid treated as non-navigable.
std::vector<double> squared_distance_to_wall(int width, int height,
                                             const std::vector<std::uint8_t>& navigable);

// Thresholds a grayscale bitmap (pixel >= threshold is lumen) and inflates.
OccupancyGrid ingest_map(const GrayImage& bitmap, int threshold, double agent_radius);

// Loads a map from a PNG, an MVGRID1 cache (".mvgrid"), or the builtin
// desk-scale benchmark ("benchmark:corridor").
OccupancyGrid load_map(const std::string& spec, int threshold, double agent_radius);

}  // namespace mvnav
