#ifndef TILEHMM_EMISSION_HPP
#define TILEHMM_EMISSION_HPP

#include "tilehmm/types.hpp"

#include <array>

namespace tilehmm::emission {

/// Relative gap enforced between each leading eigenvalue and the shared
/// second eigenvalue when an estimate violates u1 > u2.
inline constexpr double kEigenGapEps = 1e-6;

/// Lower bound on the shared second eigenvalue.
inline constexpr double kVarianceFloor = 1e-8;

/// Four bivariate Gaussian components under the constrained eigenvalue
/// parametrization: Sigma_k = R(theta_k) diag(u1_k, u2) R(theta_k)^T with a
/// shared orientation for groups 1 and 2 and a shared second eigenvalue.
struct ConstrainedGaussianSet {
  Eigen::Matrix<double, 4, 2> mu = Eigen::Matrix<double, 4, 2>::Zero();
  double theta12 = 0.0;  // orientation of groups 1 and 2, radians in [0, pi)
  double theta3 = 0.0;
  double theta4 = 0.0;
  Vec4 u1 = Vec4::Constant(2.0);  // leading eigenvalues, u1[k] > u2
  double u2 = 1.0;                // shared second eigenvalue

  double angle(int k) const;       // 0-based group index
  Mat2 orientation(int k) const;   // rotation matrix R(angle(k))
  Mat2 covariance(int k) const;
  Vec2 mean(int k) const { return mu.row(k).transpose(); }
};

/// Throws std::invalid_argument if the parameter constraints are violated.
void validate(const ConstrainedGaussianSet& g);

/// Rotation matrix (c, -s; s, c) for angle theta.
Mat2 rotation(double theta);

/// Normalizes an orientation angle into [0, pi).
double normalize_angle(double theta);

/// Exact bivariate normal log-density of component k at x.
double log_density(const ConstrainedGaussianSet& g, int k, const Vec2& x);

/// n x 4 matrix of per-probe component log-densities.
MatX4 log_density_matrix(const ConstrainedGaussianSet& g, const MatX2& x);

/// Per-group weighted counts, means and scatter matrices
/// W_k = sum_t tau_tk (x_t - mean_k)(x_t - mean_k)^T.
struct ScatterSet {
  Vec4 n = Vec4::Zero();
  Eigen::Matrix<double, 4, 2> mean = Eigen::Matrix<double, 4, 2>::Zero();
  std::array<Mat2, 4> w{Mat2::Zero(), Mat2::Zero(), Mat2::Zero(), Mat2::Zero()};

  double total() const { return n.sum(); }
};

/// Accumulates weighted means and scatter matrices from posterior weights.
/// Throws EmptyComponentError when a group's effective count vanishes.
ScatterSet accumulate_scatter(const MatX2& x, const MatX4& tau);
ScatterSet accumulate_scatter(const ProbeSeries& series, const MatX4& tau);

/// Merges chunk-wise scatter accumulations (exact, order-independent up to
/// floating point) for multi-chain estimation.
ScatterSet merge_scatter(const ScatterSet& a, const ScatterSet& b);

/// Result of the shared-orientation estimator for groups 1 and 2.
struct SharedOrientation {
  double d = 1.0;       // cosine of the orientation angle, in [0, 1]
  int sign = 1;         // sign of the lower-left entry of the rotation
  double theta = 0.0;   // equivalent angle in [0, pi)
  bool degenerate = false;
  double objective = 0.0;
};

/// The trace objective minimized by the shared orientation: for rotation
/// columns d1, d2 this is sum_{k=1,2} d1^T W_k d1 / u1_k + d2^T W_k d2 / u2.
double shared_orientation_objective(const ScatterSet& s, const Vec2& u1,
                                    double u2, double d, int sign);

/// Closed-form maximum-likelihood orientation shared by groups 1 and 2,
/// given their leading eigenvalues and the shared second eigenvalue.
/// Candidate cosines come from d^2 - 1/2 = +- a / (2 sqrt(a^2 + 4 b^2)) with
/// a = sum_k (w1_k - w4_k)(u2 - u1_k)/(u1_k u2) and
/// b = sum_k w2_k (u2 - u1_k)/(u1_k u2); both off-diagonal signs of the
/// rotation are tried and the candidate with minimal objective wins.
SharedOrientation estimate_shared_orientation(const ScatterSet& s,
                                              const Vec2& u1, double u2);

struct FreeOrientation {
  double theta = 0.0;  // angle in [0, pi), leading eigenvector first
  bool degenerate = false;
};

/// Orientation of a single scatter matrix: the eigenvector basis of W with
/// the leading eigenvector in the first column.
FreeOrientation estimate_free_orientation(const Mat2& w);

struct EigenvalueEstimate {
  Vec4 u1 = Vec4::Zero();
  double u2 = 0.0;
};

/// Maximum-likelihood eigenvalues given fixed orientations:
/// u1_k = b1_k / n_k and u2 = sum_k b2_k / n with B_k = D_k^T W_k D_k,
/// followed by the floor on u2 and the u1 > u2 gap repair.
EigenvalueEstimate estimate_eigenvalues(const ScatterSet& s,
                                        const std::array<Mat2, 4>& orientations);

/// One conditional-maximization sweep of the constrained M-step:
/// means, then eigenvalues at the previous orientations, then orientations,
/// then eigenvalues again. Never decreases the expected complete-data
/// log-likelihood.
ConstrainedGaussianSet m_step(const ScatterSet& s, const ConstrainedGaussianSet& prev);

/// Expected complete-data log-likelihood of the emission part,
/// sum_k sum_t tau_tk log phi_k(x_t), written in terms of the scatter set.
double expected_complete_log_likelihood(const ScatterSet& s,
                                        const ConstrainedGaussianSet& g);

}  // namespace tilehmm::emission

#endif  // TILEHMM_EMISSION_HPP
