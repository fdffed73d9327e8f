#pragma once

#include <vector>

#include "softjig/geometry.hpp"
#include "softjig/image.hpp"

namespace softjig {

struct LoGParams {
  double sigma = 2.0;
  double response_threshold = 10.0;
  int border_margin = 6;

  void validate() const;
};

// LoG parameters tuned to a blob of the given image radius: sigma = r / sqrt(2),
// border margin ceil(3 sigma).
LoGParams log_params_for_marker_radius(double radius_px, double response_threshold);

struct PixelPeak {
  int u = 0;
  int v = 0;
  double response = 0.0;
};

enum class RefineStatus { ok, clamped, degenerate };

struct SubpixelResult {
  Vec2 center;
  RefineStatus status = RefineStatus::ok;
};

struct MarkerDetection {
  Vec2 center;
  double response = 0.0;
  PixelPeak peak;
  RefineStatus status = RefineStatus::ok;
};

// sigma^2-normalized negative Laplacian of Gaussian; bright blobs give
// positive peaks. Separable Gaussian then 5-point Laplacian, both with
// clamp-to-edge padding.
GrayImage log_filter(const GrayImage& img, double sigma);

// Strict 8-neighborhood maxima above the threshold, outside the border
// margin, sorted by descending response.
std::vector<PixelPeak> detect_local_maxima(const GrayImage& resp, const LoGParams& params);

// Least-squares quadratic fit over the 3x3 neighborhood of the peak. Offsets
// are clamped to [-0.5, 0.5]; a non-concave fit falls back to the integer peak.
SubpixelResult refine_subpixel(const GrayImage& resp, int u, int v);

std::vector<MarkerDetection> detect_markers(const GrayImage& img, const LoGParams& params);

// Threshold at `fraction` of the global LoG response maximum of a reference image.
double auto_response_threshold(const GrayImage& reference, double sigma, double fraction = 0.1);

}  // namespace softjig
