#include "tilehmm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tilehmm::emission {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Effective count below which a component is treated as lost.
constexpr double kCountFloor = 1e-8;
}  // namespace

double ConstrainedGaussianSet::angle(int k) const {
  switch (k) {
    case 0:
    case 1:
      return theta12;
    case 2:
      return theta3;
    case 3:
      return theta4;
    default:
      throw std::invalid_argument("group index out of range");
  }
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

double normalize_angle(double theta) {
  const double pi = std::numbers::pi;
  double t = std::fmod(theta, pi);
  if (t < 0) t += pi;
  if (t >= pi) t -= pi;  // fmod rounding at the boundary
  return t;
}

Mat2 ConstrainedGaussianSet::orientation(int k) const { return rotation(angle(k)); }

Mat2 ConstrainedGaussianSet::covariance(int k) const {
  const Mat2 r = orientation(k);
  return r * Eigen::DiagonalMatrix<double, 2>(u1[k], u2) * r.transpose();
}

void validate(const ConstrainedGaussianSet& g) {
  if (!g.mu.allFinite()) throw std::invalid_argument("non-finite component mean");
  if (!std::isfinite(g.theta12) || !std::isfinite(g.theta3) || !std::isfinite(g.theta4))
    throw std::invalid_argument("non-finite orientation angle");
  if (!(g.u2 > 0.0)) throw std::invalid_argument("second eigenvalue must be positive");
  for (int k = 0; k < kGroups; ++k)
    if (!(g.u1[k] > g.u2))
      throw std::invalid_argument("leading eigenvalue must exceed the shared second eigenvalue (group " +
                                  std::to_string(k + 1) + ")");
}

double log_density(const ConstrainedGaussianSet& g, int k, const Vec2& x) {
  // Work in the rotated frame: z = R^T (x - mu) has diagonal covariance.
  const Mat2 r = g.orientation(k);
  const Vec2 z = r.transpose() * (x - g.mean(k));
  const double log_det = std::log(g.u1[k]) + std::log(g.u2);
  const double quad = z[0] * z[0] / g.u1[k] + z[1] * z[1] / g.u2;
  return -kLog2Pi - 0.5 * log_det - 0.5 * quad;
}

MatX4 log_density_matrix(const ConstrainedGaussianSet& g, const MatX2& x) {
  const Index n = x.rows();
  MatX4 out(n, 4);
  for (int k = 0; k < kGroups; ++k) {
    const Mat2 rt = g.orientation(k).transpose();
    const double inv1 = 1.0 / g.u1[k];
    const double inv2 = 1.0 / g.u2;
    const double base = -kLog2Pi - 0.5 * (std::log(g.u1[k]) + std::log(g.u2));
    const Vec2 mu = g.mean(k);
    for (Index t = 0; t < n; ++t) {
      const double dx = x(t, 0) - mu[0];
      const double dy = x(t, 1) - mu[1];
      const double z0 = rt(0, 0) * dx + rt(0, 1) * dy;
      const double z1 = rt(1, 0) * dx + rt(1, 1) * dy;
      out(t, k) = base - 0.5 * (z0 * z0 * inv1 + z1 * z1 * inv2);
    }
  }
  return out;
}

ScatterSet accumulate_scatter(const MatX2& x, const MatX4& tau) {
  if (x.rows() != tau.rows())
    throw std::invalid_argument("posterior table does not match the data length");
  ScatterSet s;
  const Index n = x.rows();
  for (int k = 0; k < kGroups; ++k) {
    const double nk = tau.col(k).sum();
    if (nk < kCountFloor) throw EmptyComponentError(k + 1);
    s.n[k] = nk;
    s.mean.row(k) = (tau.col(k).transpose() * x) / nk;
    double w11 = 0.0, w12 = 0.0, w22 = 0.0;
    const double m0 = s.mean(k, 0);
    const double m1 = s.mean(k, 1);
    for (Index t = 0; t < n; ++t) {
      const double wt = tau(t, k);
      const double d0 = x(t, 0) - m0;
      const double d1 = x(t, 1) - m1;
      w11 += wt * d0 * d0;
      w12 += wt * d0 * d1;
      w22 += wt * d1 * d1;
    }
    s.w[k] << w11, w12, w12, w22;
  }
  return s;
}

ScatterSet accumulate_scatter(const ProbeSeries& series, const MatX4& tau) {
  return accumulate_scatter(series.intensities, tau);
}

ScatterSet merge_scatter(const ScatterSet& a, const ScatterSet& b) {
  // Chan et al. pairwise update: shift both scatters to the pooled mean.
  ScatterSet out;
  for (int k = 0; k < kGroups; ++k) {
    const double na = a.n[k], nb = b.n[k];
    const double n = na + nb;
    out.n[k] = n;
    if (n <= 0.0) continue;
    const Vec2 ma = a.mean.row(k).transpose();
    const Vec2 mb = b.mean.row(k).transpose();
    const Vec2 m = (na * ma + nb * mb) / n;
    out.mean.row(k) = m.transpose();
    const Vec2 delta = mb - ma;
    out.w[k] = a.w[k] + b.w[k] + (na * nb / n) * delta * delta.transpose();
  }
  return out;
}

double shared_orientation_objective(const ScatterSet& s, const Vec2& u1,
                                    double u2, double d, int sign) {
  const double sv = sign * std::sqrt(std::max(0.0, 1.0 - d * d));
  double f = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double w1 = s.w[k](0, 0);
    const double w2 = s.w[k](0, 1);
    const double w4 = s.w[k](1, 1);
    const double lead = d * d * w1 + 2.0 * w2 * d * sv + (1.0 - d * d) * w4;
    const double second = d * d * w4 - 2.0 * w2 * d * sv + (1.0 - d * d) * w1;
    f += lead / u1[k] + second / u2;
  }
  return f;
}

SharedOrientation estimate_shared_orientation(const ScatterSet& s, const Vec2& u1,
                                               double u2) {
  if (!(u1[0] > u2) || !(u1[1] > u2) || !(u2 > 0.0))
    throw std::invalid_argument("shared orientation requires u1 > u2 > 0 for groups 1 and 2");

  double a = 0.0;  // weighted diagonal contrast
  double b = 0.0;  // weighted off-diagonal mass
  for (int k = 0; k < 2; ++k) {
    const double scale = (u2 - u1[k]) / (u1[k] * u2);
    a += (s.w[k](0, 0) - s.w[k](1, 1)) * scale;
    b += s.w[k](0, 1) * scale;
  }

  SharedOrientation best;
  const double h = std::sqrt(a * a + 4.0 * b * b);
  if (h == 0.0) {
    best.d = 1.0;
    best.sign = 1;
    best.theta = 0.0;
    best.degenerate = true;
    best.objective = shared_orientation_objective(s, u1, u2, 1.0, 1);
    return best;
  }

  const double half = a / (2.0 * h);
  const double cand_sq[2] = {0.5 + half, 0.5 - half};
  bool first = true;
  for (double dsq : cand_sq) {
    const double d = std::sqrt(std::clamp(dsq, 0.0, 1.0));
    for (int sign : {1, -1}) {
      const double f = shared_orientation_objective(s, u1, u2, d, sign);
      if (first || f < best.objective) {
        best.d = d;
        best.sign = sign;
        best.objective = f;
        first = false;
      }
    }
  }
  best.theta = normalize_angle(std::atan2(best.sign * std::sqrt(std::max(0.0, 1.0 - best.d * best.d)),
                                          best.d));
  best.degenerate = false;
  return best;
}

FreeOrientation estimate_free_orientation(const Mat2& w) {
  const double w1 = w(0, 0);
  const double w2 = 0.5 * (w(0, 1) + w(1, 0));
  const double w4 = w(1, 1);
  FreeOrientation out;
  const double diff = w1 - w4;
  if (diff == 0.0 && w2 == 0.0) {
    out.theta = 0.0;
    out.degenerate = true;
    return out;
  }
  // Leading eigenvector of a symmetric 2x2: angle = atan2(2 w2, w1 - w4) / 2.
  out.theta = normalize_angle(0.5 * std::atan2(2.0 * w2, diff));
  out.degenerate = false;
  return out;
}

EigenvalueEstimate estimate_eigenvalues(const ScatterSet& s,
                                        const std::array<Mat2, 4>& orientations) {
  EigenvalueEstimate est;
  double b2_total = 0.0;
  for (int k = 0; k < kGroups; ++k) {
    if (s.n[k] < kCountFloor) throw EmptyComponentError(k + 1);
    const Mat2 bk = orientations[static_cast<std::size_t>(k)].transpose() * s.w[k] *
                    orientations[static_cast<std::size_t>(k)];
    est.u1[k] = bk(0, 0) / s.n[k];
    b2_total += bk(1, 1);
  }
  est.u2 = std::max(b2_total / s.total(), kVarianceFloor);
  for (int k = 0; k < kGroups; ++k)
    if (est.u1[k] <= est.u2) est.u1[k] = est.u2 * (1.0 + kEigenGapEps);
  return est;
}

ConstrainedGaussianSet m_step(const ScatterSet& s, const ConstrainedGaussianSet& prev) {
  ConstrainedGaussianSet out = prev;
  out.mu = s.mean;

  // (1) eigenvalues at the previous orientations
  std::array<Mat2, 4> d{prev.orientation(0), prev.orientation(1), prev.orientation(2),
                        prev.orientation(3)};
  EigenvalueEstimate ev = estimate_eigenvalues(s, d);

  // (2) orientations at the refreshed eigenvalues
  const SharedOrientation shared =
      estimate_shared_orientation(s, Vec2(ev.u1[0], ev.u1[1]), ev.u2);
  out.theta12 = shared.theta;
  out.theta3 = estimate_free_orientation(s.w[2]).theta;
  out.theta4 = estimate_free_orientation(s.w[3]).theta;

  // (3) eigenvalues again at the new orientations
  d = {rotation(out.theta12), rotation(out.theta12), rotation(out.theta3),
       rotation(out.theta4)};
  ev = estimate_eigenvalues(s, d);
  out.u1 = ev.u1;
  out.u2 = ev.u2;
  validate(out);
  return out;
}

double expected_complete_log_likelihood(const ScatterSet& s,
                                        const ConstrainedGaussianSet& g) {
  double total = 0.0;
  for (int k = 0; k < kGroups; ++k) {
    const Mat2 sigma = g.covariance(k);
    const Mat2 prec = sigma.inverse();
    const double log_det = std::log(g.u1[k]) + std::log(g.u2);
    const Vec2 dm = s.mean.row(k).transpose() - g.mean(k);
    const double quad = (prec * s.w[k]).trace() + s.n[k] * dm.dot(prec * dm);
    total += -s.n[k] * kLog2Pi - 0.5 * s.n[k] * log_det - 0.5 * quad;
  }
  return total;
}

}  // namespace tilehmm::emission
