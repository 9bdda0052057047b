#ifndef TILEHMM_HMM_HPP
#define TILEHMM_HMM_HPP

#include "tilehmm/emission.hpp"
#include "tilehmm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tilehmm::hmm {

/// Which of the four sub-models to fit: annotation toggles per-category
/// transition/mixing parameters, markov toggles the spatial dependence.
/// (false,false)=m1, (false,true)=m2, (true,false)=m3, (true,true)=m4.
struct ModelSpec {
  bool use_annotation = true;
  bool use_markov = true;
  int categories = 3;  // P, number of annotation categories in the data

  static constexpr int kStates = kGroups;

  int effective_categories() const { return use_annotation ? categories : 1; }
  std::string name() const;
  static ModelSpec from_name(const std::string& name, int categories);
};

/// Full parameter set of a sub-model. Markov variants carry one
/// row-stochastic 4x4 transition matrix per effective category; mixture
/// variants carry one mixing vector per effective category.
struct ModelParams {
  ModelSpec spec;
  emission::ConstrainedGaussianSet emissions;
  std::vector<Mat4> transition;  // markov variants
  std::vector<Vec4> mixing;      // mixture variants

  /// 0-based index into transition/mixing for a 1-based annotation category.
  int effective_category(int category) const {
    return spec.use_annotation ? category - 1 : 0;
  }
};

void validate(const ModelParams& params);

/// Stationary distribution of a row-stochastic matrix: the left fixed
/// vector, normalized to sum 1. Throws NumericalError for reducible or
/// periodic chains (add a little smoothing mass to every entry to avoid
/// this).
Vec4 stationary_distribution(const Mat4& pi);

/// Group proportions within an effective category: the stationary law of
/// that category's transition matrix, or the mixing vector itself.
Vec4 group_proportions(const ModelParams& params, int effective_category);

/// Law of the first hidden state: stationary distribution of the first
/// probe's category matrix (markov) or that category's mixing vector.
Vec4 initial_law(const ModelParams& params, int first_category);

/// Smoothed posterior memberships tau (n x 4), pairwise joint posteriors
/// xi (markov variants; xi[t-1] is the joint over the step into probe t)
/// and the observed-data log-likelihood.
struct PosteriorTable {
  MatX4 tau;
  std::vector<Mat4> xi;
  double loglik = 0.0;
};

/// Scaled forward/backward state kept around for region queries:
/// alpha row t is the filtered law of Z_t, beta the scaled backward
/// variable, log_scale the per-step log normalizers (summing to the
/// log-likelihood).
struct ChainCache {
  MatX4 log_dens;
  MatX4 alpha;
  MatX4 beta;
  Eigen::VectorXd log_scale;
  double loglik = 0.0;
};

ChainCache forward_backward_cache(const ProbeSeries& series, const ModelParams& params);

/// Exact smoothed marginals and pairwise posteriors by the scaled
/// forward-backward recursion; the transition into probe t uses the
/// category of probe t.
PosteriorTable forward_backward(const ProbeSeries& series, const ModelParams& params);
PosteriorTable posterior_from_cache(const ProbeSeries& series, const ModelParams& params,
                                    const ChainCache& cache);

/// E-step for the independence (mixture) variants.
PosteriorTable e_step_mixture(const ProbeSeries& series, const ModelParams& params);

/// Transition / mixing updates from posterior counts. Categories with no
/// probes keep their previous parameters (a warning is recorded). Counts
/// receive a 1e-10 smoothing mass before normalization.
void m_step_transitions(ModelParams& params,
                        const std::vector<const PosteriorTable*>& posteriors,
                        const std::vector<const ProbeSeries*>& chains,
                        std::vector<std::string>* warnings = nullptr);
void m_step_transitions(ModelParams& params, const PosteriorTable& posterior,
                        const ProbeSeries& series,
                        std::vector<std::string>* warnings = nullptr);

/// Expected run length 1/(1 - pi_kk) of a state with self-transition
/// probability pi_kk; +infinity when pi_kk == 1.
double mean_sojourn(double pi_kk);

struct StopCriteria {
  double tol = 1e-6;   // relative log-likelihood change
  int max_iter = 500;
  int restarts = 0;    // re-initializations allowed after degenerate fits
};

struct FitOptions {
  StopCriteria stop;
  std::uint64_t seed = 0;  // jitter stream for re-initializations
  std::optional<ModelParams> init;
};

struct FitReport {
  ModelParams params;
  std::vector<PosteriorTable> posteriors;  // one table per chain
  std::vector<double> loglik_trajectory;
  double loglik = 0.0;
  int nu = 0;
  double bic = 0.0;
  double icl = 0.0;
  Eigen::MatrixXd proportions;  // effective categories x 4
  Eigen::MatrixXd sojourn;      // effective categories x 4
  bool converged = false;
  int iterations = 0;
  int restarts_used = 0;
  Index observations = 0;
  std::vector<std::string> warnings;
};

/// Data-driven starting point: component means at the marginal quartile
/// pairs, covariances from the pooled scatter, sticky uniform transitions.
/// A nonzero jitter seed perturbs the means for restarts.
ModelParams initial_params(const std::vector<const ProbeSeries*>& chains,
                           const ModelSpec& spec, std::uint64_t jitter_seed = 0);

/// EM fit over one or more independent chains sharing parameters
/// (log-likelihoods add across chains).
FitReport fit(const std::vector<const ProbeSeries*>& chains, const ModelSpec& spec,
              const FitOptions& options = {});
FitReport fit(const ProbeSeries& series, const ModelSpec& spec,
              const FitOptions& options = {});

/// Audited free-parameter count: 16 emission parameters plus the
/// transition or mixing degrees of freedom.
int free_parameter_count(const ModelSpec& spec);

double bic(double loglik, int nu, Index n);

/// ICL adds twice the total classification entropy of the marginal
/// posteriors to the BIC.
double icl(double bic_value, const std::vector<const PosteriorTable*>& posteriors);

struct SelectionRow {
  std::string model;
  int nu = 0;
  double minus_two_loglik = 0.0;
  double bic = 0.0;
  double icl = 0.0;
};

struct SelectionResult {
  std::vector<SelectionRow> rows;        // input order
  std::vector<std::size_t> bic_ranking;  // indices into rows, ascending BIC
  std::vector<std::size_t> icl_ranking;
  std::string best_bic;
  std::string best_icl;
};

/// Ranks fitted sub-models by BIC and ICL (ties broken by model name).
SelectionResult model_selection(const std::vector<const FitReport*>& reports);

struct ProbeClassification {
  std::vector<int> label;  // 1-based group index per probe
  std::vector<char> tie;   // 1 where the argmax was not unique
};

/// Per-probe maximum-a-posteriori labels; ties resolve to the lower group
/// index and are flagged.
ProbeClassification classify_probes(const MatX4& tau);

}  // namespace tilehmm::hmm

#endif  // TILEHMM_HMM_HPP
