#include "softjig/marker_detect.hpp"

#include <algorithm>
#include <cmath>

#include "softjig/errors.hpp"

namespace softjig {

void LoGParams::validate() const {
  if (!(sigma > 0.0)) throw DomainError("LoG sigma must be positive");
  if (border_margin < static_cast<int>(std::ceil(3.0 * sigma))) {
    throw DomainError("LoG border_margin must be at least ceil(3 * sigma)");
  }
}

LoGParams log_params_for_marker_radius(double radius_px, double response_threshold) {
  LoGParams p;
  p.sigma = radius_px / std::sqrt(2.0);
  p.response_threshold = response_threshold;
  p.border_margin = static_cast<int>(std::ceil(3.0 * p.sigma));
  return p;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& x : k) x /= sum;
  return k;
}

}  // namespace

GrayImage log_filter(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("log_filter: sigma must be positive");
  if (img.empty()) throw DomainError("log_filter: empty image");
  const int w = img.width(), h = img.height();
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);

  // Horizontal then vertical pass; each output pixel sums taps in a fixed order.
  GrayImage tmp(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      if (u >= r && u < w - r) {
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(u + i, v);
      } else {
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.clamped(u + i, v);
      }
      tmp.at(u, v) = acc;
    }
  }
  GrayImage smooth(w, h);
  for (int v = 0; v < h; ++v) {
    const bool interior = v >= r && v < h - r;
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      if (interior) {
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(u, v + i);
      } else {
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(u, v + i);
      }
      smooth.at(u, v) = acc;
    }
  }

  GrayImage resp(w, h);
  const double s2 = sigma * sigma;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double lap = smooth.clamped(u - 1, v) + smooth.clamped(u + 1, v) +
                         smooth.clamped(u, v - 1) + smooth.clamped(u, v + 1) -
                         4.0 * smooth.at(u, v);
      resp.at(u, v) = -s2 * lap;
    }
  }
  return resp;
}

std::vector<PixelPeak> detect_local_maxima(const GrayImage& resp, const LoGParams& params) {
  std::vector<PixelPeak> peaks;
  const int m = std::max(1, params.border_margin);
  for (int v = m; v < resp.height() - m; ++v) {
    for (int u = m; u < resp.width() - m; ++u) {
      const double c = resp.at(u, v);
      if (!(c > params.response_threshold)) continue;
      bool is_max = true;
      for (int dv = -1; dv <= 1 && is_max; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          if ((du != 0 || dv != 0) && !(c > resp.at(u + du, v + dv))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({u, v, c});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const PixelPeak& a, const PixelPeak& b) { return a.response > b.response; });
  return peaks;
}

namespace {

// Maps the 9 neighborhood samples (row-major, dv outer) to the coefficients
// of c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2.
const Eigen::Matrix<double, 6, 9>& quadratic_fit_operator() {
  static const Eigen::Matrix<double, 6, 9> op = [] {
    Eigen::Matrix<double, 9, 6> a;
    int row = 0;
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        a.row(row++) << 1.0, du, dv, du * du, du * dv, dv * dv;
      }
    }
    const Eigen::Matrix<double, 6, 6> ata = a.transpose() * a;
    return Eigen::Matrix<double, 6, 9>(ata.ldlt().solve(a.transpose()));
  }();
  return op;
}

}  // namespace

SubpixelResult refine_subpixel(const GrayImage& resp, int u, int v) {
  if (u < 1 || v < 1 || u >= resp.width() - 1 || v >= resp.height() - 1) {
    throw DomainError("refine_subpixel: peak must be at least one pixel from the border");
  }
  Eigen::Matrix<double, 9, 1> z;
  int i = 0;
  for (int dv = -1; dv <= 1; ++dv) {
    for (int du = -1; du <= 1; ++du) z(i++) = resp.at(u + du, v + dv);
  }
  const Eigen::Matrix<double, 6, 1> c = quadratic_fit_operator() * z;

  const double huu = 2.0 * c(3), hvv = 2.0 * c(5), huv = c(4);
  const double det = huu * hvv - huv * huv;
  const Vec2 integer_peak(u, v);
  if (!(huu < 0.0) || !(det > 0.0)) return {integer_peak, RefineStatus::degenerate};

  // Vertex of the concave quadratic: H * d = -g.
  const double du = (-c(1) * hvv + c(2) * huv) / det;
  const double dv = (-c(2) * huu + c(1) * huv) / det;
  const double cu = std::clamp(du, -0.5, 0.5);
  const double cv = std::clamp(dv, -0.5, 0.5);
  const RefineStatus status =
      (cu != du || cv != dv) ? RefineStatus::clamped : RefineStatus::ok;
  return {integer_peak + Vec2(cu, cv), status};
}

std::vector<MarkerDetection> detect_markers(const GrayImage& img, const LoGParams& params) {
  params.validate();
  const GrayImage resp = log_filter(img, params.sigma);
  std::vector<MarkerDetection> out;
  for (const PixelPeak& p : detect_local_maxima(resp, params)) {
    const SubpixelResult r = refine_subpixel(resp, p.u, p.v);
    out.push_back({r.center, p.response, p, r.status});
  }
  return out;
}

double auto_response_threshold(const GrayImage& reference, double sigma, double fraction) {
  const GrayImage resp = log_filter(reference, sigma);
  const double peak = *std::max_element(resp.pixels().begin(), resp.pixels().end());
  return fraction * std::max(peak, 0.0);
}

}  // namespace softjig
