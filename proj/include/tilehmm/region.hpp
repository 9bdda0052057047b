#ifndef TILEHMM_REGION_HPP
#define TILEHMM_REGION_HPP

#include "tilehmm/hmm.hpp"
#include "tilehmm/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace tilehmm::region {

/// Exact log P(all exonic probes of the gene share state k | data) for each
/// k, by the constrained/unconstrained likelihood ratio: a scaled forward
/// sweep over the gene span with the emission masked to state k at exonic
/// probes, closed with the cached backward variables.
Vec4 region_log_posterior(const ProbeSeries& series, const hmm::ModelParams& params,
                          const hmm::ChainCache& cache, const GeneStructure& gene);

/// Exponentiated version; entries that underflow to zero stay zero.
Vec4 region_posterior(const ProbeSeries& series, const hmm::ModelParams& params,
                      const hmm::ChainCache& cache, const GeneStructure& gene);

/// Exact log P(all exonic probes share state k | categories) under the
/// heterogeneous chain: stationary start at the first exonic probe,
/// self-transition steps inside exons and, for each intron gap, the (k,k)
/// entry of the product of the gap's matrices including the entry step
/// into the next exon.
Vec4 region_log_prior(const hmm::ModelParams& params, const GeneStructure& gene,
                      const ProbeSeries& series);

Vec4 region_prior(const hmm::ModelParams& params, const GeneStructure& gene,
                  const ProbeSeries& series);

/// Linear correction of the raw log-ratio for gene length effects:
/// raw ~ intercept + per_exonic_probe * (#exonic probes) + per_exon * (#exons).
struct LengthCorrection {
  double intercept = 0.0;
  double per_exonic_probe = 0.0;
  double per_exon = 0.0;

  double predict(Index exonic_probes, Index exon_count) const {
    return intercept + per_exonic_probe * static_cast<double>(exonic_probes) +
           per_exon * static_cast<double>(exon_count);
  }
};

/// Ordinary least squares of the raw log-ratios on the two covariates with
/// intercept. Non-finite ratios are ignored; at least three finite ones are
/// required. Collinear covariates are dropped (coefficient zero) with a
/// warning.
LengthCorrection fit_length_correction(const std::vector<double>& raw_log_ratios,
                                       const std::vector<Index>& exonic_probe_counts,
                                       const std::vector<Index>& exon_counts,
                                       std::vector<std::string>* warnings = nullptr);

/// Corrected log-ratio log(sum_k Q_X) - log(sum_k Q_prior) minus the fitted
/// length trend. Returns -infinity when the posterior homogeneity mass
/// underflows to zero.
double unistatus(const Vec4& log_q_x, const Vec4& log_q_prior, Index exonic_probes,
                 Index exon_count, const LengthCorrection& correction);

struct RegionPosterior {
  std::string gene_id;
  Vec4 q_x = Vec4::Zero();
  Vec4 log_q_x = Vec4::Zero();
  Vec4 q_prior = Vec4::Zero();
  Vec4 log_q_prior = Vec4::Zero();
  double homogeneity_mass = 0.0;  // sum_k q_x
};

RegionPosterior compute_region_posterior(const ProbeSeries& series,
                                         const hmm::ModelParams& params,
                                         const hmm::ChainCache& cache,
                                         const GeneStructure& gene);

struct GeneReport {
  std::string gene_id;
  Vec4 q_x = Vec4::Zero();
  Vec4 q_prior = Vec4::Zero();
  double raw_log_ratio = 0.0;
  double unistatus = 0.0;
  bool homogeneous = false;
  int assigned_class = 0;            // 1-based group, 0 when heterogeneous
  Vec4 conditional = Vec4::Zero();   // Q_X / sum_l Q_X, defined when homogeneous
  bool degenerate = false;           // posterior mass underflowed
};

/// Two-step call: the gene is homogeneous when its unistatus exceeds the
/// threshold; homogeneous genes are assigned the group maximizing the
/// conditional posterior.
GeneReport classify_gene(const RegionPosterior& posterior, double unistatus_value,
                         double threshold);

/// Per-chromosome inputs for the gene pipeline.
struct ChromContext {
  const ProbeSeries* series = nullptr;
  const hmm::ModelParams* params = nullptr;
  const hmm::ChainCache* cache = nullptr;
};

struct GenePipelineOptions {
  double threshold = 0.0;
  int threads = 1;
};

struct GenePipelineResult {
  std::vector<GeneReport> reports;  // sorted by gene_id
  LengthCorrection correction;
  std::vector<std::string> warnings;
  int skipped = 0;
};

/// Full gene workflow: region posteriors and priors per gene, one global
/// length correction over all finite raw ratios, unistatus and the
/// two-step call. Genes on chromosomes without a context are skipped with
/// a warning.
GenePipelineResult classify_genes(const std::map<std::string, ChromContext>& contexts,
                                  std::vector<GeneStructure> genes,
                                  const GenePipelineOptions& options = {});

}  // namespace tilehmm::region

#endif  // TILEHMM_REGION_HPP
