#include "tilehmm/hmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace tilehmm::hmm {

namespace {

constexpr double kTransitionSmoothing = 1e-10;

void check_annotation(const ProbeSeries& series, const ModelSpec& spec) {
  if (!spec.use_annotation) return;
  validate(series, spec.categories);
}

double relative_change(double current, double previous) {
  return std::abs(current - previous) / (1.0 + std::abs(current));
}

}  // namespace

std::string ModelSpec::name() const {
  if (use_annotation) return use_markov ? "m4" : "m3";
  return use_markov ? "m2" : "m1";
}

ModelSpec ModelSpec::from_name(const std::string& name, int categories) {
  ModelSpec spec;
  spec.categories = categories;
  if (name == "m1") {
    spec.use_annotation = false;
    spec.use_markov = false;
  } else if (name == "m2") {
    spec.use_annotation = false;
    spec.use_markov = true;
  } else if (name == "m3") {
    spec.use_annotation = true;
    spec.use_markov = false;
  } else if (name == "m4") {
    spec.use_annotation = true;
    spec.use_markov = true;
  } else {
    throw std::invalid_argument("unknown model name '" + name + "' (expected m1..m4)");
  }
  return spec;
}

void validate(const ModelParams& params) {
  if (params.spec.categories < 1)
    throw std::invalid_argument("model needs at least one annotation category");
  emission::validate(params.emissions);
  const int pe = params.spec.effective_categories();
  if (params.spec.use_markov) {
    if (static_cast<int>(params.transition.size()) != pe || !params.mixing.empty())
      throw std::invalid_argument("markov variant expects one transition matrix per category");
    for (const Mat4& pi : params.transition)
      for (int k = 0; k < 4; ++k) {
        if (pi.row(k).minCoeff() < 0.0)
          throw std::invalid_argument("negative transition probability");
        if (std::abs(pi.row(k).sum() - 1.0) > 1e-12)
          throw std::invalid_argument("transition row does not sum to one");
      }
  } else {
    if (static_cast<int>(params.mixing.size()) != pe || !params.transition.empty())
      throw std::invalid_argument("mixture variant expects one mixing vector per category");
    for (const Vec4& p : params.mixing) {
      if (p.minCoeff() < 0.0) throw std::invalid_argument("negative mixing proportion");
      if (std::abs(p.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("mixing vector does not sum to one");
    }
  }
}

Vec4 stationary_distribution(const Mat4& pi) {
  for (int k = 0; k < 4; ++k) {
    if (pi.row(k).minCoeff() < -1e-15)
      throw std::invalid_argument("negative transition probability");
    if (std::abs(pi.row(k).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("transition row does not sum to one");
  }

  // Reachability on the positive-support graph.
  std::array<std::array<bool, 4>, 4> adj{};
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) adj[k][l] = pi(k, l) > 0.0;
  auto closure = adj;
  for (int m = 0; m < 4; ++m)
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l)
        closure[k][l] = closure[k][l] || (closure[k][m] && closure[m][l]);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l)
      if (!closure[k][l])
        throw NumericalError(
            "transition matrix is reducible; add smoothing mass to every entry", -1);

  // Period of state 0 = gcd of return-walk lengths (uniform over an
  // irreducible chain); walks up to length 16 determine it for 4 states.
  {
    auto power = adj;
    int gcd = 0;
    for (int t = 1; t <= 16; ++t) {
      if (t > 1) {
        std::array<std::array<bool, 4>, 4> next{};
        for (int k = 0; k < 4; ++k)
          for (int m = 0; m < 4; ++m)
            if (power[k][m])
              for (int l = 0; l < 4; ++l) next[k][l] = next[k][l] || adj[m][l];
        power = next;
      }
      if (power[0][0]) gcd = std::gcd(gcd, t);
    }
    if (gcd != 1)
      throw NumericalError(
          "transition matrix is periodic; add smoothing mass to every entry", -1);
  }

  // m' (I - pi + J) = 1' for the unique stationary vector of an
  // irreducible chain, J the all-ones matrix.
  Mat4 a = Mat4::Identity() - pi + Mat4::Ones();
  Vec4 m = a.transpose().partialPivLu().solve(Vec4::Ones());
  m = m.cwiseMax(0.0);
  m /= m.sum();
  const double residual = (m.transpose() * pi - m.transpose()).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10))
    throw NumericalError("stationary distribution did not converge", -1);
  return m;
}

Vec4 group_proportions(const ModelParams& params, int effective_category) {
  if (params.spec.use_markov)
    return stationary_distribution(params.transition[static_cast<std::size_t>(effective_category)]);
  return params.mixing[static_cast<std::size_t>(effective_category)];
}

Vec4 initial_law(const ModelParams& params, int first_category) {
  return group_proportions(params, params.effective_category(first_category));
}

ChainCache forward_backward_cache(const ProbeSeries& series, const ModelParams& params) {
  if (!params.spec.use_markov)
    throw std::invalid_argument("forward-backward requires a markov variant");
  check_annotation(series, params.spec);

  const Index n = series.size();
  ChainCache cache;
  cache.log_dens = emission::log_density_matrix(params.emissions, series.intensities);
  cache.alpha.resize(n, 4);
  cache.beta.resize(n, 4);
  cache.log_scale.resize(n);

  // Forward pass; emission rows are rescaled by their max so the scale
  // factors stay in a safe range for any chain length.
  Vec4 prev;
  for (Index t = 0; t < n; ++t) {
    const double shift = cache.log_dens.row(t).maxCoeff();
    Vec4 e;
    for (int k = 0; k < 4; ++k) e[k] = std::exp(cache.log_dens(t, k) - shift);
    Vec4 unnorm;
    if (t == 0) {
      const Vec4 init = initial_law(params, series.categories[0]);
      unnorm = init.cwiseProduct(e);
    } else {
      const Mat4& pi =
          params.transition[static_cast<std::size_t>(params.effective_category(
              series.categories[static_cast<std::size_t>(t)]))];
      unnorm = (pi.transpose() * prev).cwiseProduct(e);
    }
    const double scale = unnorm.sum();
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw NumericalError("zero total likelihood in the forward pass at probe " +
                               std::to_string(t),
                           t);
    prev = unnorm / scale;
    cache.alpha.row(t) = prev.transpose();
    cache.log_scale[t] = std::log(scale) + shift;
  }

  // Backward pass with the same scale factors.
  cache.beta.row(n - 1).setOnes();
  Vec4 next = Vec4::Ones();
  for (Index t = n - 2; t >= 0; --t) {
    const double shift = cache.log_dens.row(t + 1).maxCoeff();
    Vec4 e;
    for (int k = 0; k < 4; ++k) e[k] = std::exp(cache.log_dens(t + 1, k) - shift);
    const double scale = std::exp(cache.log_scale[t + 1] - shift);
    const Mat4& pi = params.transition[static_cast<std::size_t>(params.effective_category(
        series.categories[static_cast<std::size_t>(t + 1)]))];
    next = (pi * e.cwiseProduct(next)) / scale;
    cache.beta.row(t) = next.transpose();
  }

  cache.loglik = cache.log_scale.sum();
  return cache;
}

PosteriorTable posterior_from_cache(const ProbeSeries& series, const ModelParams& params,
                                    const ChainCache& cache) {
  const Index n = series.size();
  PosteriorTable post;
  post.tau = cache.alpha.cwiseProduct(cache.beta);
  post.loglik = cache.loglik;
  post.xi.resize(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  for (Index t = 1; t < n; ++t) {
    const double shift = cache.log_dens.row(t).maxCoeff();
    Vec4 eb;
    for (int l = 0; l < 4; ++l)
      eb[l] = std::exp(cache.log_dens(t, l) - shift) * cache.beta(t, l);
    const double scale = std::exp(cache.log_scale[t] - shift);
    const Mat4& pi = params.transition[static_cast<std::size_t>(params.effective_category(
        series.categories[static_cast<std::size_t>(t)]))];
    Mat4& xi = post.xi[static_cast<std::size_t>(t - 1)];
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l)
        xi(k, l) = cache.alpha(t - 1, k) * pi(k, l) * eb[l] / scale;
  }
  return post;
}

PosteriorTable forward_backward(const ProbeSeries& series, const ModelParams& params) {
  const ChainCache cache = forward_backward_cache(series, params);
  return posterior_from_cache(series, params, cache);
}

PosteriorTable e_step_mixture(const ProbeSeries& series, const ModelParams& params) {
  if (params.spec.use_markov)
    throw std::invalid_argument("mixture E-step requires a mixture variant");
  check_annotation(series, params.spec);

  const Index n = series.size();
  const MatX4 log_dens = emission::log_density_matrix(params.emissions, series.intensities);

  std::vector<Vec4> log_mixing(params.mixing.size());
  for (std::size_t p = 0; p < params.mixing.size(); ++p)
    log_mixing[p] = params.mixing[p].array().log();

  PosteriorTable post;
  post.tau.resize(n, 4);
  post.loglik = 0.0;
  for (Index t = 0; t < n; ++t) {
    const Vec4& lp = log_mixing[static_cast<std::size_t>(params.effective_category(
        series.categories[static_cast<std::size_t>(t)]))];
    Vec4 v = lp + log_dens.row(t).transpose();
    const double shift = v.maxCoeff();
    if (!std::isfinite(shift))
      throw NumericalError("zero total likelihood at probe " + std::to_string(t), t);
    Vec4 e = (v.array() - shift).exp();
    const double scale = e.sum();
    post.tau.row(t) = (e / scale).transpose();
    post.loglik += shift + std::log(scale);
  }
  return post;
}

void m_step_transitions(ModelParams& params,
                        const std::vector<const PosteriorTable*>& posteriors,
                        const std::vector<const ProbeSeries*>& chains,
                        std::vector<std::string>* warnings) {
  if (posteriors.size() != chains.size())
    throw std::invalid_argument("posterior/chain count mismatch");
  const int pe = params.spec.effective_categories();

  if (params.spec.use_markov) {
    std::vector<Mat4> counts(static_cast<std::size_t>(pe), Mat4::Zero());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const ProbeSeries& series = *chains[c];
      const PosteriorTable& post = *posteriors[c];
      for (Index t = 1; t < series.size(); ++t) {
        const int p = params.effective_category(series.categories[static_cast<std::size_t>(t)]);
        counts[static_cast<std::size_t>(p)] += post.xi[static_cast<std::size_t>(t - 1)];
      }
    }
    for (int p = 0; p < pe; ++p) {
      Mat4& cnt = counts[static_cast<std::size_t>(p)];
      if (cnt.sum() == 0.0) {
        if (warnings)
          warnings->push_back("category " + std::to_string(p + 1) +
                              " has no transitions; keeping previous matrix");
        continue;
      }
      cnt.array() += kTransitionSmoothing;
      Mat4& pi = params.transition[static_cast<std::size_t>(p)];
      for (int k = 0; k < 4; ++k) pi.row(k) = cnt.row(k) / cnt.row(k).sum();
    }
  } else {
    std::vector<Vec4> sums(static_cast<std::size_t>(pe), Vec4::Zero());
    std::vector<double> totals(static_cast<std::size_t>(pe), 0.0);
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const ProbeSeries& series = *chains[c];
      const PosteriorTable& post = *posteriors[c];
      for (Index t = 0; t < series.size(); ++t) {
        const int p = params.effective_category(series.categories[static_cast<std::size_t>(t)]);
        sums[static_cast<std::size_t>(p)] += post.tau.row(t).transpose();
        totals[static_cast<std::size_t>(p)] += 1.0;
      }
    }
    for (int p = 0; p < pe; ++p) {
      if (totals[static_cast<std::size_t>(p)] == 0.0) {
        if (warnings)
          warnings->push_back("category " + std::to_string(p + 1) +
                              " has no probes; keeping previous proportions");
        continue;
      }
      params.mixing[static_cast<std::size_t>(p)] =
          sums[static_cast<std::size_t>(p)] / totals[static_cast<std::size_t>(p)];
    }
  }
}

void m_step_transitions(ModelParams& params, const PosteriorTable& posterior,
                        const ProbeSeries& series, std::vector<std::string>* warnings) {
  m_step_transitions(params, std::vector<const PosteriorTable*>{&posterior},
                     std::vector<const ProbeSeries*>{&series}, warnings);
}

double mean_sojourn(double pi_kk) {
  if (pi_kk < 0.0 || pi_kk > 1.0)
    throw std::invalid_argument("self-transition probability must lie in [0, 1]");
  if (pi_kk == 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - pi_kk);
}

namespace {

double marginal_quantile(std::vector<double> values, double q) {
  const auto pos = static_cast<std::size_t>(q * (static_cast<double>(values.size()) - 1.0));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(pos),
                   values.end());
  return values[pos];
}

}  // namespace

ModelParams initial_params(const std::vector<const ProbeSeries*>& chains,
                           const ModelSpec& spec, std::uint64_t jitter_seed) {
  if (chains.empty()) throw std::invalid_argument("no probe series given");
  Index n = 0;
  for (const ProbeSeries* s : chains) n += s->size();

  std::vector<double> x1, x2;
  x1.reserve(static_cast<std::size_t>(n));
  x2.reserve(static_cast<std::size_t>(n));
  Vec2 mean = Vec2::Zero();
  for (const ProbeSeries* s : chains) {
    for (Index t = 0; t < s->size(); ++t) {
      x1.push_back(s->intensities(t, 0));
      x2.push_back(s->intensities(t, 1));
    }
    mean += s->intensities.colwise().sum().transpose();
  }
  mean /= static_cast<double>(n);

  Mat2 pooled = Mat2::Zero();
  for (const ProbeSeries* s : chains)
    for (Index t = 0; t < s->size(); ++t) {
      const Vec2 d = s->x(t) - mean;
      pooled += d * d.transpose();
    }
  pooled /= static_cast<double>(n);

  const double lo1 = marginal_quantile(x1, 0.25), hi1 = marginal_quantile(x1, 0.75);
  const double lo2 = marginal_quantile(x2, 0.25), hi2 = marginal_quantile(x2, 0.75);

  ModelParams params;
  params.spec = spec;
  params.emissions.mu.row(0) << lo1, lo2;
  params.emissions.mu.row(1) << hi1, hi2;
  params.emissions.mu.row(2) << hi1, lo2;
  params.emissions.mu.row(3) << lo1, hi2;

  const emission::FreeOrientation orient = emission::estimate_free_orientation(pooled);
  const Mat2 rot = emission::rotation(orient.theta);
  const Mat2 diag = rot.transpose() * pooled * rot;
  const double lead = std::max(diag(0, 0), diag(1, 1));
  const double second = std::min(diag(0, 0), diag(1, 1));
  params.emissions.theta12 = orient.theta;
  params.emissions.theta3 = orient.theta;
  params.emissions.theta4 = orient.theta;
  params.emissions.u2 = std::max(second, emission::kVarianceFloor);
  params.emissions.u1 = Vec4::Constant(std::max(lead, params.emissions.u2 * 1.001));

  if (jitter_seed != 0) {
    std::mt19937_64 rng(jitter_seed);
    const double sd = 0.25 * std::sqrt(lead);
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    for (int k = 0; k < 4; ++k) {
      const double r = std::sqrt(-2.0 * std::log(uniform()));
      const double phi = 2.0 * std::numbers::pi * uniform();
      params.emissions.mu(k, 0) += sd * r * std::cos(phi);
      params.emissions.mu(k, 1) += sd * r * std::sin(phi);
    }
  }

  const int pe = spec.effective_categories();
  if (spec.use_markov) {
    Mat4 pi = Mat4::Constant(0.1);
    pi.diagonal().setConstant(0.7);
    params.transition.assign(static_cast<std::size_t>(pe), pi);
  } else {
    params.mixing.assign(static_cast<std::size_t>(pe), Vec4::Constant(0.25));
  }
  validate(params);
  return params;
}

namespace {

struct EmRun {
  ModelParams params;
  std::vector<PosteriorTable> posteriors;
  std::vector<double> trajectory;
  bool converged = false;
};

EmRun run_em(const std::vector<const ProbeSeries*>& chains, ModelParams params,
             const StopCriteria& stop, std::vector<std::string>* warnings) {
  EmRun run;
  double prev_ll = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= stop.max_iter; ++it) {
    std::vector<PosteriorTable> posts;
    posts.reserve(chains.size());
    double ll = 0.0;
    try {
      for (const ProbeSeries* s : chains) {
        posts.push_back(params.spec.use_markov ? forward_backward(*s, params)
                                               : e_step_mixture(*s, params));
        ll += posts.back().loglik;
      }
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " (EM iteration " +
                               std::to_string(it) + ")",
                           err.probe);
    }
    run.trajectory.push_back(ll);
    if (it > 1 && relative_change(ll, prev_ll) <= stop.tol) {
      run.converged = true;
      run.posteriors = std::move(posts);
      break;
    }
    if (it == stop.max_iter) {
      run.posteriors = std::move(posts);
      break;
    }
    prev_ll = ll;

    emission::ScatterSet scatter;
    bool first = true;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      emission::ScatterSet part = emission::accumulate_scatter(chains[c]->intensities,
                                                               posts[c].tau);
      scatter = first ? part : emission::merge_scatter(scatter, part);
      first = false;
    }
    params.emissions = emission::m_step(scatter, params.emissions);

    std::vector<const PosteriorTable*> post_ptrs;
    post_ptrs.reserve(posts.size());
    for (const PosteriorTable& p : posts) post_ptrs.push_back(&p);
    m_step_transitions(params, post_ptrs, chains, warnings);
  }
  run.params = std::move(params);
  return run;
}

}  // namespace

FitReport fit(const std::vector<const ProbeSeries*>& chains, const ModelSpec& spec,
              const FitOptions& options) {
  if (chains.empty()) throw std::invalid_argument("no probe series given");
  for (const ProbeSeries* s : chains) check_annotation(*s, spec);

  FitReport report;
  EmRun run;
  int attempt = 0;
  for (;; ++attempt) {
    ModelParams params;
    if (attempt == 0 && options.init) {
      params = *options.init;
      validate(params);
      if (params.spec.use_markov != spec.use_markov ||
          params.spec.use_annotation != spec.use_annotation)
        throw std::invalid_argument("initial parameters disagree with the requested model");
    } else {
      const std::uint64_t jitter =
          attempt == 0 ? 0 : options.seed * 1000003ULL + static_cast<std::uint64_t>(attempt);
      params = initial_params(chains, spec, jitter);
    }
    try {
      run = run_em(chains, std::move(params), options.stop, &report.warnings);
      break;
    } catch (const EmptyComponentError& err) {
      if (attempt >= options.stop.restarts) throw;
      report.warnings.push_back(std::string(err.what()) + "; re-initializing");
    } catch (const NumericalError& err) {
      if (attempt >= options.stop.restarts) throw;
      report.warnings.push_back(std::string(err.what()) + "; re-initializing");
    }
  }

  report.params = std::move(run.params);
  report.posteriors = std::move(run.posteriors);
  report.loglik_trajectory = std::move(run.trajectory);
  report.loglik = report.loglik_trajectory.back();
  report.converged = run.converged;
  report.iterations = static_cast<int>(report.loglik_trajectory.size());
  report.restarts_used = attempt;

  Index n = 0;
  for (const ProbeSeries* s : chains) n += s->size();
  report.observations = n;
  report.nu = free_parameter_count(spec);
  report.bic = bic(report.loglik, report.nu, n);
  std::vector<const PosteriorTable*> post_ptrs;
  for (const PosteriorTable& p : report.posteriors) post_ptrs.push_back(&p);
  report.icl = icl(report.bic, post_ptrs);

  const int pe = spec.effective_categories();
  report.proportions.resize(pe, 4);
  report.sojourn.resize(pe, 4);
  for (int p = 0; p < pe; ++p) {
    report.proportions.row(p) = group_proportions(report.params, p).transpose();
    for (int k = 0; k < 4; ++k) {
      const double self = spec.use_markov
                              ? report.params.transition[static_cast<std::size_t>(p)](k, k)
                              : report.params.mixing[static_cast<std::size_t>(p)][k];
      report.sojourn(p, k) = mean_sojourn(std::min(self, 1.0));
    }
  }
  return report;
}

FitReport fit(const ProbeSeries& series, const ModelSpec& spec, const FitOptions& options) {
  return fit(std::vector<const ProbeSeries*>{&series}, spec, options);
}

int free_parameter_count(const ModelSpec& spec) {
  constexpr int kEmission = 8 + 3 + 4 + 1;  // means, angles, u1 values, u2
  const int per_category = spec.use_markov ? 4 * 3 : 3;
  return kEmission + per_category * spec.effective_categories();
}

double bic(double loglik, int nu, Index n) {
  return -2.0 * loglik + nu * std::log(static_cast<double>(n));
}

double icl(double bic_value, const std::vector<const PosteriorTable*>& posteriors) {
  double entropy = 0.0;
  for (const PosteriorTable* post : posteriors)
    for (Index t = 0; t < post->tau.rows(); ++t)
      for (int k = 0; k < 4; ++k) {
        const double p = post->tau(t, k);
        if (p > 0.0) entropy -= p * std::log(p);
      }
  return bic_value + 2.0 * entropy;
}

SelectionResult model_selection(const std::vector<const FitReport*>& reports) {
  if (reports.empty()) throw std::invalid_argument("no fit reports given");
  for (const FitReport* r : reports)
    if (r->observations != reports.front()->observations)
      throw std::invalid_argument("model selection requires fits of the same data");

  SelectionResult result;
  for (const FitReport* r : reports)
    result.rows.push_back(SelectionRow{r->params.spec.name(), r->nu, -2.0 * r->loglik,
                                       r->bic, r->icl});

  auto ranked = [&result](auto key) {
    std::vector<std::size_t> order(result.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto ka = key(result.rows[a]);
      const auto kb = key(result.rows[b]);
      if (ka != kb) return ka < kb;
      return result.rows[a].model < result.rows[b].model;
    });
    return order;
  };
  result.bic_ranking = ranked([](const SelectionRow& r) { return r.bic; });
  result.icl_ranking = ranked([](const SelectionRow& r) { return r.icl; });
  result.best_bic = result.rows[result.bic_ranking.front()].model;
  result.best_icl = result.rows[result.icl_ranking.front()].model;
  return result;
}

ProbeClassification classify_probes(const MatX4& tau) {
  ProbeClassification out;
  const Index n = tau.rows();
  out.label.resize(static_cast<std::size_t>(n));
  out.tie.resize(static_cast<std::size_t>(n), 0);
  for (Index t = 0; t < n; ++t) {
    int best = 0;
    for (int k = 1; k < 4; ++k)
      if (tau(t, k) > tau(t, best)) best = k;
    int ties = 0;
    for (int k = 0; k < 4; ++k)
      if (tau(t, k) == tau(t, best)) ++ties;
    out.label[static_cast<std::size_t>(t)] = best + 1;
    out.tie[static_cast<std::size_t>(t)] = ties > 1 ? 1 : 0;
  }
  return out;
}

}  // namespace tilehmm::hmm
