#include "planeval/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/NonLinearOptimization>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

bool finite(const Eigen::Matrix3d& m) { return m.allFinite(); }

// Similarity transform taking the points to zero centroid and mean distance
// sqrt(2) from the origin.
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    fail(ErrorCode::DegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d apply(const Eigen::Matrix3d& t, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = t * p.homogeneous();
  return q.hnormalized();
}

// Plane-space reprojection residuals of a homography in normalized
// coordinates, with one entry of the matrix held fixed to remove the scale.
struct ReprojectionFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<Eigen::Vector2d>& img;
  const std::vector<Eigen::Vector2d>& pln;
  int fixed;
  double fixed_value;

  int inputs() const { return 8; }
  int values() const { return static_cast<int>(2 * img.size()); }

  Eigen::Matrix<double, 9, 1> full(const Eigen::VectorXd& x) const {
    Eigen::Matrix<double, 9, 1> h;
    for (int i = 0, j = 0; i < 9; ++i) h(i) = i == fixed ? fixed_value : x(j++);
    return h;
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    const auto h = full(x);
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double u = img[i].x();
      const double v = img[i].y();
      const double w = h(6) * u + h(7) * v + h(8);
      const auto r = static_cast<Eigen::Index>(2 * i);
      fvec(r) = (h(0) * u + h(1) * v + h(2)) / w - pln[i].x();
      fvec(r + 1) = (h(3) * u + h(4) * v + h(5)) / w - pln[i].y();
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    const auto h = full(x);
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double u = img[i].x();
      const double v = img[i].y();
      const double w = h(6) * u + h(7) * v + h(8);
      const double px = (h(0) * u + h(1) * v + h(2)) / w;
      const double py = (h(3) * u + h(4) * v + h(5)) / w;
      Eigen::Matrix<double, 2, 9> g = Eigen::Matrix<double, 2, 9>::Zero();
      g.block<1, 3>(0, 0) << u / w, v / w, 1.0 / w;
      g.block<1, 3>(1, 3) << u / w, v / w, 1.0 / w;
      g.block<1, 3>(0, 6) << -px * u / w, -px * v / w, -px / w;
      g.block<1, 3>(1, 6) << -py * u / w, -py * v / w, -py / w;
      const auto r = static_cast<Eigen::Index>(2 * i);
      for (int c = 0, j = 0; c < 9; ++c) {
        if (c == fixed) continue;
        fjac(r, j) = g(0, c);
        fjac(r + 1, j) = g(1, c);
        ++j;
      }
    }
    return 0;
  }
};

double reprojection_cost(const Eigen::Matrix3d& h, const std::vector<Eigen::Vector2d>& img,
                         const std::vector<Eigen::Vector2d>& pln) {
  double cost = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) cost += (apply(h, img[i]) - pln[i]).squaredNorm();
  return cost;
}

// Least-squares refinement of the plane-space residuals starting from the
// algebraic solution. Returns the start when refinement does not improve it.
Eigen::Matrix3d refine_geometric(const Eigen::Matrix3d& start,
                                 const std::vector<Eigen::Vector2d>& img,
                                 const std::vector<Eigen::Vector2d>& pln) {
  if (img.size() <= 4) return start;
  Eigen::Matrix<double, 9, 1> h0;
  for (int i = 0; i < 9; ++i) h0(i) = start(i / 3, i % 3);
  Eigen::Index fixed = 0;
  h0.cwiseAbs().maxCoeff(&fixed);
  ReprojectionFunctor f{img, pln, static_cast<int>(fixed), h0(fixed)};
  Eigen::VectorXd x(8);
  for (int i = 0, j = 0; i < 9; ++i) {
    if (i != fixed) x(j++) = h0(i);
  }
  Eigen::LevenbergMarquardt<ReprojectionFunctor> lm(f);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 4000;
  lm.minimize(x);
  const auto h = f.full(x);
  Eigen::Matrix3d out;
  out << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  if (!out.allFinite()) return start;
  return reprojection_cost(out, img, pln) <= reprojection_cost(start, img, pln) ? out : start;
}

}  // namespace

Eigen::Matrix3d canonicalize(const Eigen::Matrix3d& m) {
  Eigen::Matrix3d out = m;
  const double norm = out.norm();
  // Skipping near-unit norms keeps canonicalize idempotent bit for bit.
  if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
    out /= norm;
  }
  double sign_ref = out(2, 2);
  if (std::abs(sign_ref) <= 1e-9) {
    sign_ref = 0.0;
    for (int i = 0; i < 9 && sign_ref == 0.0; ++i) {
      sign_ref = out(i / 3, i % 3);
    }
  }
  if (sign_ref < 0.0) out = -out;
  return out;
}

Homography::Homography(const Eigen::Matrix3d& m, double camera_height_m)
    : camera_height_m_(camera_height_m) {
  if (!finite(m)) fail(ErrorCode::InvalidArgument, "homography has non-finite entries");
  if (!(camera_height_m > 0.0) || !std::isfinite(camera_height_m)) {
    fail(ErrorCode::InvalidArgument, "camera height must be positive and finite");
  }
  if (m.norm() == 0.0) fail(ErrorCode::InvalidArgument, "homography is the zero matrix");
  m_ = canonicalize(m);
  if (std::abs(m_.determinant()) <= kSingularDetEps) {
    fail(ErrorCode::InvalidArgument, "homography is singular");
  }
}

Homography Homography::inverse() const {
  return Homography(m_.inverse(), camera_height_m_);
}

PlanePoint project(const Homography& h, PixelPoint p) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.u, p.v, 1.0);
  if (std::abs(q.z()) <= kPointAtInfinityEps) {
    fail(ErrorCode::PointAtInfinity,
         "pixel (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
             ") lies on the horizon of the homography");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

double ground_distance(const Homography& h, PixelPoint p) {
  const PlanePoint g = project(h, p);
  const double hh = h.camera_height_m();
  return std::sqrt(g.x * g.x + g.y * g.y + hh * hh);
}

Homography estimate_homography(std::span<const Correspondence> corrs,
                               double camera_height_m) {
  if (corrs.size() < 4) {
    fail(ErrorCode::InsufficientPoints,
         "need at least 4 correspondences, got " + std::to_string(corrs.size()));
  }
  std::vector<Eigen::Vector2d> img;
  std::vector<Eigen::Vector2d> pln;
  img.reserve(corrs.size());
  pln.reserve(corrs.size());
  for (const auto& c : corrs) {
    if (!std::isfinite(c.image.u) || !std::isfinite(c.image.v) ||
        !std::isfinite(c.plane.x) || !std::isfinite(c.plane.y)) {
      fail(ErrorCode::InvalidArgument, "non-finite correspondence");
    }
    img.emplace_back(c.image.u, c.image.v);
    pln.emplace_back(c.plane.x, c.plane.y);
  }

  const Eigen::Matrix3d t_img = normalizing_transform(img);
  const Eigen::Matrix3d t_pln = normalizing_transform(pln);

  // Each correspondence x -> X contributes the two rows of X' x (H x) = 0.
  const auto n = static_cast<Eigen::Index>(corrs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d x = apply(t_img, img[static_cast<std::size_t>(i)]);
    const Eigen::Vector2d y = apply(t_pln, pln[static_cast<std::size_t>(i)]);
    const double u = x.x();
    const double v = x.y();
    a.row(2 * i) << 0.0, 0.0, 0.0, -u, -v, -1.0, y.y() * u, y.y() * v, y.y();
    a.row(2 * i + 1) << u, v, 1.0, 0.0, 0.0, 0.0, -y.x() * u, -y.x() * v, -y.x();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // sv[7] is the second-smallest singular value for n >= 5 and the smallest
  // returned one for n == 4; a near-zero value there means the null space
  // is at least two dimensional.
  if (sv(0) <= 0.0 || sv(7) / sv(0) < kDegenerateSingularGap) {
    fail(ErrorCode::DegenerateConfiguration,
         "design matrix is rank deficient (collinear or duplicate points)");
  }
  const Eigen::VectorXd hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2),
        hvec(3), hvec(4), hvec(5),
        hvec(6), hvec(7), hvec(8);

  std::vector<Eigen::Vector2d> img_n;
  std::vector<Eigen::Vector2d> pln_n;
  for (std::size_t i = 0; i < img.size(); ++i) {
    img_n.push_back(apply(t_img, img[i]));
    pln_n.push_back(apply(t_pln, pln[i]));
  }
  hn = refine_geometric(hn, img_n, pln_n);

  const Eigen::Matrix3d h = t_pln.inverse() * hn * t_img;
  if (!h.allFinite() || h.norm() == 0.0 ||
      std::abs(canonicalize(h).determinant()) <= kSingularDetEps) {
    fail(ErrorCode::DegenerateConfiguration, "fitted homography is singular");
  }
  return Homography(h, camera_height_m);
}

Homography transfer_homography(const Homography& base,
                               std::span<const PixelPair> pairs,
                               double camera_height_m) {
  if (pairs.size() < 4) {
    fail(ErrorCode::InsufficientPoints,
         "need at least 4 pixel pairs, got " + std::to_string(pairs.size()));
  }
  std::vector<Correspondence> corrs;
  corrs.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      corrs.push_back({pairs[i].shifted, project(base, pairs[i].base)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PointAtInfinity) throw;
      fail(ErrorCode::PointAtInfinity,
           "pair " + std::to_string(i) + ": " + e.what());
    }
  }
  return estimate_homography(corrs, camera_height_m);
}

}  // namespace planeval
