#ifndef TILEHMM_TYPES_HPP
#define TILEHMM_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tilehmm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using MatX2 = Eigen::MatrixX2d;
using MatX4 = Eigen::MatrixX4d;
using Index = Eigen::Index;

/// Number of hidden groups. Fixed by the model: noise, identical and the
/// two differential groups.
inline constexpr int kGroups = 4;

/// Canonical group names used in all text outputs (1-based group index).
const char* group_name(int group);

/// Inverse of group_name; throws std::invalid_argument on unknown names.
int group_from_name(const std::string& name);

/// A mixture/HMM component lost all posterior mass during estimation.
struct EmptyComponentError : std::runtime_error {
  explicit EmptyComponentError(int group_1based);
  int group;
};

/// Hard numerical failure (e.g. zero total likelihood at some probe).
struct NumericalError : std::runtime_error {
  NumericalError(const std::string& what, Index probe_index);
  Index probe;
};

/// One array probe: position on a chromosome, structural annotation
/// category (1-based) and the two log-intensities.
struct Probe {
  std::string chromosome;
  std::int64_t position = 0;
  int category = 1;
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Ordered per-chromosome probe sequence. Positions strictly increase,
/// intensities are finite; instances are immutable once built and safe to
/// share across threads.
struct ProbeSeries {
  std::string chromosome;
  std::vector<std::int64_t> positions;
  std::vector<int> categories;  // 1-based, aligned with intensity rows
  MatX2 intensities;            // column 0 = x1, column 1 = x2

  Index size() const { return intensities.rows(); }
  Vec2 x(Index t) const { return intensities.row(t).transpose(); }
  Probe probe(Index t) const;

  /// Assembles a series from row records (already sorted by position).
  static ProbeSeries from_probes(const std::string& chromosome,
                                 const std::vector<Probe>& rows);
};

/// Validates series invariants; max_category bounds the annotation index
/// (pass 0 to skip the upper-bound check).
void validate(const ProbeSeries& series, int max_category);

/// A named region over a probe series: an ordered list of disjoint
/// half-open probe-index intervals ("exons"), gaps between them being
/// "introns".
struct GeneStructure {
  std::string gene_id;
  std::string chromosome;
  std::vector<std::pair<Index, Index>> exons;  // half-open [first, last)

  Index exonic_probe_count() const;
  Index first_probe() const { return exons.front().first; }
  Index last_probe() const { return exons.back().second - 1; }
  bool covers(Index t) const;
};

void validate(const GeneStructure& gene, Index series_size);

/// log(sum_k exp(v_k)) with the usual max shift; -inf in == -inf out.
double log_sum_exp(const Vec4& v);

}  // namespace tilehmm

#endif  // TILEHMM_TYPES_HPP
