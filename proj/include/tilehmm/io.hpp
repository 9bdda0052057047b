#ifndef TILEHMM_IO_HPP
#define TILEHMM_IO_HPP

#include "tilehmm/hmm.hpp"
#include "tilehmm/region.hpp"
#include "tilehmm/simulate.hpp"
#include "tilehmm/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace tilehmm::io {

/// Annotation label table: maps labels to the 1-based category indices
/// used everywhere else. Defaults to exon, intron, intergenic.
class CategoryMap {
 public:
  CategoryMap();
  explicit CategoryMap(std::vector<std::string> labels);

  /// Parses a comma-separated label list ("exon,intron,intergenic").
  static CategoryMap parse(const std::string& comma_separated);

  int size() const { return static_cast<int>(labels_.size()); }
  int index_of(const std::string& label) const;  // throws, listing allowed labels
  const std::string& label(int index) const;     // 1-based
  const std::vector<std::string>& labels() const { return labels_; }
  std::string joined() const;

 private:
  std::vector<std::string> labels_;
};

/// Reads a probe TSV (chrom, position, category, x1, x2 with a header row)
/// into one position-sorted series per chromosome. Out-of-order rows are
/// sorted with a warning; duplicate positions, unknown labels and
/// non-finite intensities are errors.
std::vector<ProbeSeries> load_probe_series(const std::string& path,
                                           const CategoryMap& categories,
                                           std::vector<std::string>* warnings = nullptr);

void save_probe_series(const std::string& path, const std::vector<ProbeSeries>& series,
                       const CategoryMap& categories);

/// Averages a dye-swap pair: each output probe gets
/// x1 = mean(a.x1, b.x2) and x2 = mean(a.x2, b.x1). Both tables must hold
/// the same probes in the same order.
std::vector<ProbeSeries> normalize_dyeswap(const std::vector<ProbeSeries>& rep_a,
                                           const std::vector<ProbeSeries>& rep_b);

/// Reads a gene TSV (gene_id, chrom, exon_start, exon_end in base pairs,
/// inclusive start / exclusive end) and converts base-pair intervals to
/// probe-index intervals against the given series. Genes covering no probe
/// and genes on unknown chromosomes are dropped with a warning.
std::vector<GeneStructure> load_gene_structures(const std::string& path,
                                                const std::vector<ProbeSeries>& series,
                                                std::vector<std::string>* warnings = nullptr);

void save_gene_structures(const std::string& path, const std::vector<GeneStructure>& genes,
                          const std::vector<ProbeSeries>& series);

/// Flat key-value model file; doubles are written with 17 significant
/// digits so load(save(params)) is exact.
void save_model(const std::string& path, const hmm::ModelParams& params,
                const CategoryMap& categories);

struct LoadedModel {
  hmm::ModelParams params;
  CategoryMap categories;
};

LoadedModel load_model(const std::string& path);

/// Per-probe posterior TSV: chrom, position, category, tau1..tau4, label.
void save_posteriors(const std::string& path,
                     const std::vector<const ProbeSeries*>& chains,
                     const std::vector<const MatX4*>& taus, const CategoryMap& categories);

struct LabelledProbe {
  std::string chromosome;
  std::int64_t position = 0;
  int category = 1;
  int label = 1;  // 1-based group
};

std::vector<LabelledProbe> load_posterior_labels(const std::string& path,
                                                 const CategoryMap& categories);

/// Gene report TSV: gene_id, Q1..Q4, prior1..prior4, raw_logratio,
/// unistatus, homogeneous, class.
void save_gene_reports(const std::string& path,
                       const std::vector<region::GeneReport>& reports);

/// Ground-truth TSV from a simulation: position, true_state.
void save_truth(const std::string& path, const ProbeSeries& series,
                const std::vector<int>& states);

/// Key-value scenario file for the simulator; embeds the model parameters
/// under the same keys as the model file.
sim::Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const sim::Scenario& scenario,
                   const CategoryMap& categories);

/// 17-significant-digit text form of a double (round-trips exactly).
std::string format_double(double value);

}  // namespace tilehmm::io

#endif  // TILEHMM_IO_HPP
