#include <algorithm>
#include <cmath>
#include <limits>

#include "lipdyn/error.hpp"
#include "lipdyn/texture.hpp"

namespace lipdyn::texture {

cv::Mat1d glcm(const cv::Mat1d& response, const cv::Rect& rect,
               const cv::Mat1b& valid, const GlcmOptions& options) {
  if (options.levels < 2) throw Error(ErrorCode::InvalidConfig, "GLCM needs >= 2 levels");
  if (options.distance < 1) throw Error(ErrorCode::InvalidConfig, "GLCM distance must be >= 1");
  const cv::Rect r = rect & cv::Rect(0, 0, response.cols, response.rows);
  auto ok = [&](int y, int x) { return valid.empty() || valid(y, x) != 0; };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = r.y; y < r.y + r.height; ++y) {
    for (int x = r.x; x < r.x + r.width; ++x) {
      if (!ok(y, x)) continue;
      lo = std::min(lo, response(y, x));
      hi = std::max(hi, response(y, x));
    }
  }

  const int levels = options.levels;
  auto quantize = [&](double v) {
    if (!(hi > lo)) return 0;
    const int q = static_cast<int>(std::floor((v - lo) / (hi - lo) * levels));
    return std::clamp(q, 0, levels - 1);
  };

  cv::Mat1i counts(levels, levels, 0);
  long pairs = 0;
  const int d = options.distance;
  for (int y = r.y; y < r.y + r.height; ++y) {
    for (int x = r.x; x + d < r.x + r.width; ++x) {
      if (!ok(y, x) || !ok(y, x + d)) continue;
      const int a = quantize(response(y, x));
      const int b = quantize(response(y, x + d));
      ++counts(a, b);
      ++counts(b, a);
      ++pairs;
    }
  }
  if (pairs < 2) {
    throw Error(ErrorCode::TooFewPixels,
                "region has " + std::to_string(pairs) + " valid pixel pairs");
  }

  cv::Mat1d p(levels, levels);
  const double total = 2.0 * static_cast<double>(pairs);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) p(i, j) = counts(i, j) / total;
  }
  return p;
}

GlcmStats glcm_stats(const cv::Mat1d& p) {
  double sum = 0.0;
  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      if (p(i, j) < 0.0 || !std::isfinite(p(i, j))) {
        throw Error(ErrorCode::NotNormalized, "GLCM has a negative or non-finite cell");
      }
      sum += p(i, j);
    }
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotNormalized, "GLCM sums to " + std::to_string(sum));
  }

  double mu_i = 0.0, mu_j = 0.0;
  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      mu_i += i * p(i, j);
      mu_j += j * p(i, j);
    }
  }

  GlcmStats s{};
  double var_i = 0.0, var_j = 0.0, cov = 0.0;
  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      const double v = p(i, j);
      const double diff = i - j;
      s[kAsm] += v * v;
      s[kContrast] += diff * diff * v;
      s[kIdm] += v / (1.0 + diff * diff);
      if (v > 0.0) s[kEntropy] -= v * std::log2(v);
      var_i += (i - mu_i) * (i - mu_i) * v;
      var_j += (j - mu_j) * (j - mu_j) * v;
      cov += (i - mu_i) * (j - mu_j) * v;
    }
  }
  const double denom = std::sqrt(var_i) * std::sqrt(var_j);
  s[kCorrelation] = denom > 1e-15 ? std::clamp(cov / denom, -1.0, 1.0) : 0.0;
  return s;
}

}  // namespace lipdyn::texture
