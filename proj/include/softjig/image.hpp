#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace softjig {

// Row-major scalar image. Used both for 8-bit intensities and for filter
// responses, which may be negative.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  double& at(int u, int v) { return pixels_[index(u, v)]; }
  double at(int u, int v) const { return pixels_[index(u, v)]; }

  // Clamp-to-edge access.
  double clamped(int u, int v) const;

  std::vector<double>& pixels() { return pixels_; }
  const std::vector<double>& pixels() const { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// Binary 8-bit PGM (P5). Values are rounded and clamped to [0, 255] on write.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace softjig
