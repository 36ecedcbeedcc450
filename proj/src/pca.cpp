#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "lipdyn/error.hpp"
#include "lipdyn/texture.hpp"

namespace lipdyn::texture {

std::array<double, 2> PcaBasis::apply(std::span<const double, kOrientationCount> v) const {
  std::array<double, 2> out{};
  for (int k = 0; k < 2; ++k) {
    double acc = 0.0;
    for (int i = 0; i < kOrientationCount; ++i) acc += (v[i] - mean[i]) * components[k][i];
    out[k] = acc;
  }
  return out;
}

PcaBasis pca_fit(std::span<const std::array<double, kOrientationCount>> training) {
  constexpr int d = kOrientationCount;
  if (training.size() < 3) {
    throw Error(ErrorCode::InsufficientData, "PCA needs at least 3 training vectors");
  }
  PcaBasis basis;
  const double n = static_cast<double>(training.size());
  for (const auto& v : training) {
    for (int i = 0; i < d; ++i) basis.mean[i] += v[i];
  }
  for (double& m : basis.mean) m /= n;

  Eigen::Matrix<double, d, d> cov = Eigen::Matrix<double, d, d>::Zero();
  for (const auto& v : training) {
    Eigen::Matrix<double, d, 1> c;
    for (int i = 0; i < d; ++i) c(i) = v[i] - basis.mean[i];
    cov.noalias() += c * c.transpose();
  }
  cov /= (n - 1.0);

  const double scale = cov.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    basis.rank_deficient = true;
    return basis;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, d, d>> solver(cov);
  // Eigenvalues ascend; take the last two.
  for (int k = 0; k < 2; ++k) {
    const int col = d - 1 - k;
    Eigen::Matrix<double, d, 1> vec = solver.eigenvectors().col(col);
    int pivot = 0;
    for (int i = 1; i < d; ++i) {
      if (std::abs(vec(i)) > std::abs(vec(pivot)) + 1e-12) pivot = i;
    }
    if (vec(pivot) < 0.0) vec = -vec;
    for (int i = 0; i < d; ++i) basis.components[k][i] = vec(i);
    basis.variance[k] = std::max(0.0, solver.eigenvalues()(col));
  }
  return basis;
}

TextureProjection TextureProjection::fit(
    std::span<const std::array<double, kRawTextureSize>> raw) {
  TextureProjection proj;
  std::vector<std::array<double, kOrientationCount>> rows(raw.size());
  for (int block = 0; block < kRegionCount * kGlcmStatCount; ++block) {
    for (std::size_t n = 0; n < raw.size(); ++n) {
      std::copy_n(raw[n].begin() + block * kOrientationCount, kOrientationCount,
                  rows[n].begin());
    }
    proj.bases[block] = pca_fit(rows);
  }
  return proj;
}

std::array<double, kTextureBlockSize> TextureProjection::apply(
    std::span<const double, kRawTextureSize> raw) const {
  std::array<double, kTextureBlockSize> out{};
  for (int block = 0; block < kRegionCount * kGlcmStatCount; ++block) {
    const auto v = bases[block].apply(
        raw.subspan(static_cast<std::size_t>(block) * kOrientationCount).first<kOrientationCount>());
    out[2 * block] = v[0];
    out[2 * block + 1] = v[1];
  }
  return out;
}

bool TextureProjection::any_rank_deficient() const {
  return std::any_of(bases.begin(), bases.end(),
                     [](const PcaBasis& b) { return b.rank_deficient; });
}

}  // namespace lipdyn::texture
