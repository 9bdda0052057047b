#include "tilehmm/simulate.hpp"

#include <cmath>
#include <numbers>

namespace tilehmm::sim {

double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

Vec2 standard_normal_pair(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return Vec2(r * std::cos(phi), r * std::sin(phi));
}

void validate(const Scenario& scenario) {
  if (scenario.n < 1) throw std::invalid_argument("scenario: n must be >= 1");
  if (scenario.spacing < 1) throw std::invalid_argument("scenario: spacing must be >= 1");
  if (scenario.start_position < 1)
    throw std::invalid_argument("scenario: start position must be >= 1");
  if (scenario.layout.empty())
    throw std::invalid_argument("scenario: layout must name at least one category run");
  for (const auto& [category, length] : scenario.layout) {
    if (category < 1 || category > scenario.params.spec.categories)
      throw std::invalid_argument("scenario: layout category " + std::to_string(category) +
                                  " outside 1.." + std::to_string(scenario.params.spec.categories));
    if (length < 1) throw std::invalid_argument("scenario: layout run length must be >= 1");
  }
  hmm::validate(scenario.params);
  for (const PlantedGene& gene : scenario.genes) {
    if (gene.exons.empty())
      throw std::invalid_argument("scenario: planted gene '" + gene.gene_id + "' has no exons");
    Index prev_end = 0;
    bool first = true;
    for (const PlantedInterval& exon : gene.exons) {
      if (exon.begin < 0 || exon.end > scenario.n || exon.begin >= exon.end)
        throw std::invalid_argument("scenario: planted gene '" + gene.gene_id +
                                    "' has an invalid probe interval");
      if (!first && exon.begin < prev_end)
        throw std::invalid_argument("scenario: planted gene '" + gene.gene_id +
                                    "' has unordered or overlapping exons");
      if (exon.state < 1 || exon.state > kGroups)
        throw std::invalid_argument("scenario: planted gene '" + gene.gene_id +
                                    "' forces an unknown state");
      prev_end = exon.end;
      first = false;
    }
  }
}

std::vector<int> category_sequence(const Scenario& scenario) {
  std::vector<int> categories;
  categories.reserve(static_cast<std::size_t>(scenario.n));
  while (static_cast<Index>(categories.size()) < scenario.n)
    for (const auto& [category, length] : scenario.layout) {
      for (Index i = 0; i < length && static_cast<Index>(categories.size()) < scenario.n; ++i)
        categories.push_back(category);
      if (static_cast<Index>(categories.size()) >= scenario.n) break;
    }
  return categories;
}

namespace {

int draw_state(const Vec4& law, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int k = 0; k < kGroups; ++k) {
    acc += law[k];
    if (u <= acc) return k + 1;
  }
  return kGroups;  // guard against rounding in the cumulative sum
}

}  // namespace

std::vector<int> sample_states(const Scenario& scenario, std::mt19937_64& rng) {
  const std::vector<int> categories = category_sequence(scenario);
  std::vector<int> forced(static_cast<std::size_t>(scenario.n), 0);
  for (const PlantedGene& gene : scenario.genes)
    for (const PlantedInterval& exon : gene.exons)
      for (Index t = exon.begin; t < exon.end; ++t)
        forced[static_cast<std::size_t>(t)] = exon.state;

  const hmm::ModelParams& params = scenario.params;
  std::vector<int> states(static_cast<std::size_t>(scenario.n));
  for (Index t = 0; t < scenario.n; ++t) {
    const auto st = static_cast<std::size_t>(t);
    if (forced[st] != 0) {
      states[st] = forced[st];
      continue;
    }
    const int p = params.effective_category(categories[st]);
    Vec4 law;
    if (!params.spec.use_markov) {
      law = params.mixing[static_cast<std::size_t>(p)];
    } else if (t == 0) {
      law = hmm::initial_law(params, categories[0]);
    } else {
      law = params.transition[static_cast<std::size_t>(p)].row(states[st - 1] - 1).transpose();
    }
    states[st] = draw_state(law, rng);
  }
  return states;
}

MatX2 sample_emissions(const std::vector<int>& states,
                       const emission::ConstrainedGaussianSet& emissions,
                       std::mt19937_64& rng) {
  emission::validate(emissions);
  const auto n = static_cast<Index>(states.size());
  std::array<Mat2, 4> chol;
  for (int k = 0; k < kGroups; ++k)
    chol[static_cast<std::size_t>(k)] =
        emissions.orientation(k) *
        Eigen::DiagonalMatrix<double, 2>(std::sqrt(emissions.u1[k]), std::sqrt(emissions.u2));

  MatX2 x(n, 2);
  for (Index t = 0; t < n; ++t) {
    const int k = states[static_cast<std::size_t>(t)] - 1;
    const Vec2 z = standard_normal_pair(rng);
    x.row(t) =
        (emissions.mean(k) + chol[static_cast<std::size_t>(k)] * z).transpose();
  }
  return x;
}

Dataset simulate(const Scenario& scenario) {
  validate(scenario);
  std::mt19937_64 rng(scenario.seed);

  Dataset out;
  out.states = sample_states(scenario, rng);
  const std::vector<int> categories = category_sequence(scenario);

  out.series.chromosome = scenario.chromosome;
  out.series.categories = categories;
  out.series.positions.reserve(static_cast<std::size_t>(scenario.n));
  for (Index t = 0; t < scenario.n; ++t)
    out.series.positions.push_back(scenario.start_position + t * scenario.spacing);
  out.series.intensities = sample_emissions(out.states, scenario.params.emissions, rng);
  validate(out.series, scenario.params.spec.categories);

  out.genes.reserve(scenario.genes.size());
  for (const PlantedGene& planted : scenario.genes) {
    GeneStructure gene;
    gene.gene_id = planted.gene_id;
    gene.chromosome = scenario.chromosome;
    for (const PlantedInterval& exon : planted.exons)
      gene.exons.emplace_back(exon.begin, exon.end);
    validate(gene, scenario.n);
    out.genes.push_back(std::move(gene));
  }
  return out;
}

}  // namespace tilehmm::sim
