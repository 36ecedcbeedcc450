#include <cmath>
#include <numbers>

#include "lipdyn/texture.hpp"

namespace lipdyn::texture {

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Kernels {
  int radius = 0;
  std::vector<double> g;  // Gaussian, 1-D unit mass
  std::vector<double> d1;  // first derivative
  std::vector<double> d2;  // second derivative
  double d2_sum = 0.0;
  double at(const std::vector<double>& k, int x) const { return k[x + radius]; }
};

Kernels make_kernels(double sigma) {
  Kernels k;
  k.radius = steerable_radius(sigma);
  const double s2 = sigma * sigma;
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  for (int x = -k.radius; x <= k.radius; ++x) {
    const double g = norm * std::exp(-(x * x) / (2.0 * s2));
    k.g.push_back(g);
    k.d1.push_back(-x / s2 * g);
    k.d2.push_back((x * x / s2 - 1.0) / s2 * g);
  }
  for (double v : k.d2) k.d2_sum += v;
  return k;
}

enum class Axis { Row, Col };

// out(r, c) = sum_k w(k) * (in(pos + k) - in(pos)) when dc_free, else plain.
cv::Mat1d pass_even(const cv::Mat1d& in, const Kernels& kern,
                    const std::vector<double>& w, Axis axis, bool dc_free) {
  cv::Mat1d out(in.size(), 0.0);
  const int rows = in.rows, cols = in.cols, rad = kern.radius;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double center = in(r, c);
      double acc = dc_free ? 0.0 : kern.at(w, 0) * center;
      for (int k = 1; k <= rad; ++k) {
        double a, b;
        if (axis == Axis::Row) {
          a = in(r, reflect101(c - k, cols));
          b = in(r, reflect101(c + k, cols));
        } else {
          a = in(reflect101(r - k, rows), c);
          b = in(reflect101(r + k, rows), c);
        }
        acc += dc_free ? kern.at(w, k) * ((a - center) + (b - center))
                       : kern.at(w, k) * (a + b);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

// Odd kernel: out = sum_{k>0} w(k) * (in(pos + k) - in(pos - k)).
cv::Mat1d pass_odd(const cv::Mat1d& in, const Kernels& kern,
                   const std::vector<double>& w, Axis axis) {
  cv::Mat1d out(in.size(), 0.0);
  const int rows = in.rows, cols = in.cols, rad = kern.radius;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 1; k <= rad; ++k) {
        double a, b;
        if (axis == Axis::Row) {
          a = in(r, reflect101(c - k, cols));
          b = in(r, reflect101(c + k, cols));
        } else {
          a = in(reflect101(r - k, rows), c);
          b = in(reflect101(r + k, rows), c);
        }
        acc += kern.at(w, k) * (b - a);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

int steerable_radius(double sigma) { return static_cast<int>(std::ceil(3.0 * sigma)); }

SteerableBasis steerable_basis(const cv::Mat& gray, double sigma) {
  cv::Mat1d img;
  gray.convertTo(img, CV_64F);
  const Kernels k = make_kernels(sigma);

  // Gxx - S*delta = g(y) * [d2(x) dc-free] + sum(d2) * [g(y) dc-free].
  SteerableBasis b;
  b.xx = pass_even(pass_even(img, k, k.d2, Axis::Row, true), k, k.g, Axis::Col, false) +
         k.d2_sum * pass_even(img, k, k.g, Axis::Col, true);
  b.yy = pass_even(pass_even(img, k, k.d2, Axis::Col, true), k, k.g, Axis::Row, false) +
         k.d2_sum * pass_even(img, k, k.g, Axis::Row, true);
  b.xy = pass_odd(pass_odd(img, k, k.d1, Axis::Row), k, k.d1, Axis::Col);
  return b;
}

cv::Mat1d steer(const SteerableBasis& basis, double orientation_deg) {
  const double a = orientation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  cv::Mat1d out(basis.xx.size());
  for (int r = 0; r < out.rows; ++r) {
    for (int col = 0; col < out.cols; ++col) {
      out(r, col) = c * c * basis.xx(r, col) + 2.0 * c * s * basis.xy(r, col) +
                    s * s * basis.yy(r, col);
    }
  }
  return out;
}

cv::Mat1d steerable_response(const cv::Mat& gray, double orientation_deg, double sigma) {
  return steer(steerable_basis(gray, sigma), orientation_deg);
}

}  // namespace lipdyn::texture
