#include "tilehmm/types.hpp"

#include <algorithm>
#include <limits>

namespace tilehmm {

namespace {
const char* const kGroupNames[kGroups] = {"noise", "identical", "under", "over"};
}

const char* group_name(int group) {
  if (group < 1 || group > kGroups)
    throw std::invalid_argument("group index out of range: " + std::to_string(group));
  return kGroupNames[group - 1];
}

int group_from_name(const std::string& name) {
  for (int k = 0; k < kGroups; ++k)
    if (name == kGroupNames[k]) return k + 1;
  throw std::invalid_argument("unknown group name: '" + name +
                              "' (expected noise, identical, under or over)");
}

EmptyComponentError::EmptyComponentError(int group_1based)
    : std::runtime_error("component " + std::to_string(group_1based) +
                         " carries no posterior mass"),
      group(group_1based) {}

NumericalError::NumericalError(const std::string& what, Index probe_index)
    : std::runtime_error(what), probe(probe_index) {}

Probe ProbeSeries::probe(Index t) const {
  return Probe{chromosome, positions[static_cast<std::size_t>(t)],
               categories[static_cast<std::size_t>(t)], intensities(t, 0),
               intensities(t, 1)};
}

ProbeSeries ProbeSeries::from_probes(const std::string& chromosome,
                                     const std::vector<Probe>& rows) {
  ProbeSeries s;
  s.chromosome = chromosome;
  const Index n = static_cast<Index>(rows.size());
  s.positions.reserve(rows.size());
  s.categories.reserve(rows.size());
  s.intensities.resize(n, 2);
  for (Index t = 0; t < n; ++t) {
    const Probe& p = rows[static_cast<std::size_t>(t)];
    s.positions.push_back(p.position);
    s.categories.push_back(p.category);
    s.intensities(t, 0) = p.x1;
    s.intensities(t, 1) = p.x2;
  }
  validate(s, 0);
  return s;
}

void validate(const ProbeSeries& series, int max_category) {
  const Index n = series.size();
  if (n == 0) throw std::invalid_argument("probe series '" + series.chromosome + "' is empty");
  if (static_cast<Index>(series.positions.size()) != n ||
      static_cast<Index>(series.categories.size()) != n)
    throw std::invalid_argument("probe series '" + series.chromosome +
                                "' has inconsistent field lengths");
  for (Index t = 0; t < n; ++t) {
    const auto st = static_cast<std::size_t>(t);
    if (series.positions[st] < 1)
      throw std::invalid_argument("probe position must be >= 1 (chromosome " +
                                  series.chromosome + ", row " + std::to_string(t) + ")");
    if (t > 0 && series.positions[st] <= series.positions[st - 1])
      throw std::invalid_argument("probe positions not strictly increasing at " +
                                  series.chromosome + ":" +
                                  std::to_string(series.positions[st]));
    const int c = series.categories[st];
    if (c < 1 || (max_category > 0 && c > max_category))
      throw std::invalid_argument("annotation category out of range at " +
                                  series.chromosome + ":" +
                                  std::to_string(series.positions[st]));
    if (!std::isfinite(series.intensities(t, 0)) || !std::isfinite(series.intensities(t, 1)))
      throw std::invalid_argument("non-finite intensity at " + series.chromosome + ":" +
                                  std::to_string(series.positions[st]));
  }
}

Index GeneStructure::exonic_probe_count() const {
  Index total = 0;
  for (const auto& [lo, hi] : exons) total += hi - lo;
  return total;
}

bool GeneStructure::covers(Index t) const {
  for (const auto& [lo, hi] : exons)
    if (t >= lo && t < hi) return true;
  return false;
}

void validate(const GeneStructure& gene, Index series_size) {
  if (gene.exons.empty())
    throw std::invalid_argument("gene '" + gene.gene_id + "' has no exon intervals");
  Index prev_end = 0;
  bool first = true;
  for (const auto& [lo, hi] : gene.exons) {
    if (lo >= hi)
      throw std::invalid_argument("gene '" + gene.gene_id + "' has an empty exon interval");
    if (!first && lo < prev_end)
      throw std::invalid_argument("gene '" + gene.gene_id + "' has unordered or overlapping exons");
    if (lo < 0 || hi > series_size)
      throw std::invalid_argument("gene '" + gene.gene_id + "' refers to probes outside its series");
    prev_end = hi;
    first = false;
  }
}

double log_sum_exp(const Vec4& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a nan propagates)
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += std::exp(v[k] - m);
  return m + std::log(s);
}

}  // namespace tilehmm
