#include "tilehmm/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace tilehmm::region {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<char> exonic_mask(const GeneStructure& gene, Index first, Index last) {
  std::vector<char> mask(static_cast<std::size_t>(last - first + 1), 0);
  for (const auto& [lo, hi] : gene.exons)
    for (Index t = lo; t < hi; ++t) mask[static_cast<std::size_t>(t - first)] = 1;
  return mask;
}

void run_serial_or_parallel(Index count, int threads,
                            const std::function<void(Index, Index)>& body) {
  if (threads <= 1 || count < 2) {
    body(0, count);
    return;
  }
  const int workers = std::min<Index>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

Vec4 region_log_posterior(const ProbeSeries& series, const hmm::ModelParams& params,
                          const hmm::ChainCache& cache, const GeneStructure& gene) {
  if (!params.spec.use_markov)
    throw std::invalid_argument("region posteriors require a markov variant");
  validate(gene, series.size());

  const Index first = gene.first_probe();
  const Index last = gene.last_probe();
  const std::vector<char> mask = exonic_mask(gene, first, last);

  Vec4 log_q;
  for (int k = 0; k < 4; ++k) {
    double log_ratio = 0.0;  // sum of log(constrained scale / cached scale)
    Vec4 cur = Vec4::Zero();
    bool dead = false;
    for (Index t = first; t <= last; ++t) {
      const double shift = cache.log_dens.row(t).maxCoeff();
      Vec4 e;
      for (int l = 0; l < 4; ++l) e[l] = std::exp(cache.log_dens(t, l) - shift);
      Vec4 pred;
      if (t == 0) {
        pred = hmm::initial_law(params, series.categories[0]);
      } else {
        const Mat4& pi =
            params.transition[static_cast<std::size_t>(params.effective_category(
                series.categories[static_cast<std::size_t>(t)]))];
        const Vec4 prev =
            (t == first) ? Vec4(cache.alpha.row(t - 1).transpose()) : cur;
        pred = pi.transpose() * prev;
      }
      Vec4 unnorm = pred.cwiseProduct(e);
      if (mask[static_cast<std::size_t>(t - first)]) {
        const double kept = unnorm[k];
        unnorm.setZero();
        unnorm[k] = kept;
      }
      const double scale = unnorm.sum();
      if (!(scale > 0.0)) {
        dead = true;
        break;
      }
      cur = unnorm / scale;
      log_ratio += std::log(scale) + shift - cache.log_scale[t];
    }
    if (dead) {
      log_q[k] = kNegInf;
      continue;
    }
    const double tail = cur.dot(cache.beta.row(last).transpose());
    log_q[k] = tail > 0.0 ? log_ratio + std::log(tail) : kNegInf;
  }
  return log_q;
}

Vec4 region_posterior(const ProbeSeries& series, const hmm::ModelParams& params,
                      const hmm::ChainCache& cache, const GeneStructure& gene) {
  return region_log_posterior(series, params, cache, gene).array().exp();
}

Vec4 region_log_prior(const hmm::ModelParams& params, const GeneStructure& gene,
                      const ProbeSeries& series) {
  if (!params.spec.use_markov)
    throw std::invalid_argument("region priors require a markov variant");
  validate(gene, series.size());

  auto matrix_at = [&](Index t) -> const Mat4& {
    return params.transition[static_cast<std::size_t>(
        params.effective_category(series.categories[static_cast<std::size_t>(t)]))];
  };

  const Index first = gene.first_probe();
  Vec4 log_q;
  {
    const Vec4 start = hmm::initial_law(params, series.categories[static_cast<std::size_t>(first)]);
    for (int k = 0; k < 4; ++k) log_q[k] = start[k] > 0.0 ? std::log(start[k]) : kNegInf;
  }

  for (std::size_t q = 0; q < gene.exons.size(); ++q) {
    const auto& [lo, hi] = gene.exons[q];
    // Self-transition steps inside the exon.
    for (Index t = lo + 1; t < hi; ++t) {
      const Mat4& pi = matrix_at(t);
      for (int k = 0; k < 4; ++k)
        log_q[k] += pi(k, k) > 0.0 ? std::log(pi(k, k)) : kNegInf;
    }
    if (q + 1 == gene.exons.size()) break;
    // Intron gap: product of the gap matrices including the entry step
    // into the next exon, renormalized per step against underflow.
    const Index next_lo = gene.exons[q + 1].first;
    Mat4 prod = Mat4::Identity();
    double log_norm = 0.0;
    for (Index t = hi; t <= next_lo; ++t) {
      prod = prod * matrix_at(t);
      const double m = prod.maxCoeff();
      if (m <= 0.0) {
        prod.setZero();
        break;
      }
      prod /= m;
      log_norm += std::log(m);
    }
    for (int k = 0; k < 4; ++k)
      log_q[k] += prod(k, k) > 0.0 ? std::log(prod(k, k)) + log_norm : kNegInf;
  }
  return log_q;
}

Vec4 region_prior(const hmm::ModelParams& params, const GeneStructure& gene,
                  const ProbeSeries& series) {
  return region_log_prior(params, gene, series).array().exp();
}

LengthCorrection fit_length_correction(const std::vector<double>& raw_log_ratios,
                                       const std::vector<Index>& exonic_probe_counts,
                                       const std::vector<Index>& exon_counts,
                                       std::vector<std::string>* warnings) {
  const std::size_t n = raw_log_ratios.size();
  if (exonic_probe_counts.size() != n || exon_counts.size() != n)
    throw std::invalid_argument("length-correction inputs have mismatched sizes");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (std::isfinite(raw_log_ratios[i])) keep.push_back(i);
  if (keep.size() < 3)
    throw std::invalid_argument("length correction needs at least 3 genes with a finite log-ratio");

  const auto m = static_cast<Index>(keep.size());
  Eigen::VectorXd y(m);
  Eigen::VectorXd probes(m);
  Eigen::VectorXd exons(m);
  for (Index i = 0; i < m; ++i) {
    const std::size_t g = keep[static_cast<std::size_t>(i)];
    y[i] = raw_log_ratios[g];
    probes[i] = static_cast<double>(exonic_probe_counts[g]);
    exons[i] = static_cast<double>(exon_counts[g]);
  }

  // Try the full design first, then drop collinear covariates.
  bool use_probes = true;
  bool use_exons = true;
  for (;;) {
    Eigen::MatrixXd design(m, 1 + (use_probes ? 1 : 0) + (use_exons ? 1 : 0));
    design.col(0).setOnes();
    int col = 1;
    if (use_probes) design.col(col++) = probes;
    if (use_exons) design.col(col++) = exons;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() == design.cols()) {
      const Eigen::VectorXd beta = qr.solve(y);
      LengthCorrection out;
      out.intercept = beta[0];
      col = 1;
      if (use_probes) out.per_exonic_probe = beta[col++];
      if (use_exons) out.per_exon = beta[col++];
      return out;
    }
    if (use_exons) {
      use_exons = false;
      if (warnings)
        warnings->push_back("exon-count covariate is collinear; dropped from the length correction");
    } else if (use_probes) {
      use_probes = false;
      if (warnings)
        warnings->push_back("probe-count covariate is collinear; dropped from the length correction");
    } else {
      // Intercept-only design is always full rank; unreachable.
      throw std::logic_error("length-correction design could not be resolved");
    }
  }
}

double unistatus(const Vec4& log_q_x, const Vec4& log_q_prior, Index exonic_probes,
                 Index exon_count, const LengthCorrection& correction) {
  const double lse_prior = log_sum_exp(log_q_prior);
  if (!(lse_prior > kNegInf))
    throw std::invalid_argument("prior homogeneity mass is zero; unistatus undefined");
  const double lse_x = log_sum_exp(log_q_x);
  if (!(lse_x > kNegInf)) return kNegInf;
  const double raw = lse_x - lse_prior;
  return raw - correction.predict(exonic_probes, exon_count);
}

RegionPosterior compute_region_posterior(const ProbeSeries& series,
                                         const hmm::ModelParams& params,
                                         const hmm::ChainCache& cache,
                                         const GeneStructure& gene) {
  RegionPosterior out;
  out.gene_id = gene.gene_id;
  out.log_q_x = region_log_posterior(series, params, cache, gene);
  out.log_q_prior = region_log_prior(params, gene, series);
  out.q_x = out.log_q_x.array().exp();
  out.q_prior = out.log_q_prior.array().exp();
  out.homogeneity_mass = out.q_x.sum();
  return out;
}

GeneReport classify_gene(const RegionPosterior& posterior, double unistatus_value,
                         double threshold) {
  GeneReport report;
  report.gene_id = posterior.gene_id;
  report.q_x = posterior.q_x;
  report.q_prior = posterior.q_prior;
  report.raw_log_ratio = log_sum_exp(posterior.log_q_x) - log_sum_exp(posterior.log_q_prior);
  report.unistatus = unistatus_value;
  report.degenerate = !(log_sum_exp(posterior.log_q_x) > kNegInf);
  report.homogeneous = unistatus_value > threshold;
  if (report.homogeneous) {
    // Conditional posterior in log space so long genes keep their ratios.
    const double lse = log_sum_exp(posterior.log_q_x);
    for (int k = 0; k < 4; ++k)
      report.conditional[k] = std::exp(posterior.log_q_x[k] - lse);
    int best = 0;
    for (int k = 1; k < 4; ++k)
      if (report.conditional[k] > report.conditional[best]) best = k;
    report.assigned_class = best + 1;
  }
  return report;
}

GenePipelineResult classify_genes(const std::map<std::string, ChromContext>& contexts,
                                  std::vector<GeneStructure> genes,
                                  const GenePipelineOptions& options) {
  GenePipelineResult result;
  std::sort(genes.begin(), genes.end(),
            [](const GeneStructure& a, const GeneStructure& b) { return a.gene_id < b.gene_id; });

  std::vector<const GeneStructure*> usable;
  for (const GeneStructure& gene : genes) {
    if (!contexts.count(gene.chromosome)) {
      result.warnings.push_back("gene '" + gene.gene_id + "' references unknown chromosome '" +
                                gene.chromosome + "'; skipped");
      ++result.skipped;
      continue;
    }
    usable.push_back(&gene);
  }

  const Index count = static_cast<Index>(usable.size());
  std::vector<RegionPosterior> posteriors(static_cast<std::size_t>(count));
  run_serial_or_parallel(count, options.threads, [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) {
      const GeneStructure& gene = *usable[static_cast<std::size_t>(i)];
      const ChromContext& ctx = contexts.at(gene.chromosome);
      posteriors[static_cast<std::size_t>(i)] =
          compute_region_posterior(*ctx.series, *ctx.params, *ctx.cache, gene);
    }
  });

  std::vector<double> raw(static_cast<std::size_t>(count));
  std::vector<Index> probes(static_cast<std::size_t>(count));
  std::vector<Index> exon_counts(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const GeneStructure& gene = *usable[si];
    probes[si] = gene.exonic_probe_count();
    exon_counts[si] = static_cast<Index>(gene.exons.size());
    raw[si] = log_sum_exp(posteriors[si].log_q_x) - log_sum_exp(posteriors[si].log_q_prior);
  }

  result.correction = fit_length_correction(raw, probes, exon_counts, &result.warnings);

  result.reports.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double u = unistatus(posteriors[si].log_q_x, posteriors[si].log_q_prior,
                               probes[si], exon_counts[si], result.correction);
    result.reports.push_back(classify_gene(posteriors[si], u, options.threshold));
  }
  return result;
}

}  // namespace tilehmm::region
