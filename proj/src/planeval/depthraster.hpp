#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "planeval/detection.hpp"

namespace planeval {

// Dense per-pixel predicted distance (range, not z-depth) for one frame.
// Values are held in double precision; PFM storage is 32-bit. Entries that
// are non-positive or non-finite are invalid pixels.
class DepthRaster {
 public:
  DepthRaster(std::size_t width, std::size_t height, std::vector<double> values,
              std::string frame_id = {});

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::string& frame_id() const noexcept { return frame_id_; }
  void set_frame_id(std::string id) { frame_id_ = std::move(id); }

  // Row-major, row 0 at the top of the image.
  double at(std::size_t col, std::size_t row) const noexcept {
    return values_[row * width_ + col];
  }

  static bool is_valid(double value) noexcept;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
  std::string frame_id_;
};

struct ExtractionParams {
  double alpha = 1.0;  // (0, 1]
  double beta = 50.0;  // [0, 100]
};

void validate(const ExtractionParams& p);

// Center-anchored resize of the detection's box by alpha.
Box shrink_box(const Box& box, double alpha);
Box shrink_box(const Detection& d, double alpha);

// Valid raster values at integer pixel centers inside the half-open shrunk
// box, clamped to the raster.
std::vector<double> region_values(const DepthRaster& r, const Box& region);

// beta-th percentile of region_values(shrink_box(d, alpha)). Throws
// EmptyRegion when no valid pixel remains.
double extract_distance(const DepthRaster& r, const Detection& d, const ExtractionParams& p);

// Grayscale PFM ("Pf"). Rows are stored bottom-up; the writer emits a
// little-endian payload with scale -1.0.
DepthRaster read_pfm(const std::filesystem::path& path);
void write_pfm(const DepthRaster& r, const std::filesystem::path& path);
DepthRaster decode_pfm(const std::string& bytes);
std::string encode_pfm(const DepthRaster& r);

}  // namespace planeval
