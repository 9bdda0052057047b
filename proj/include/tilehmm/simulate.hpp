#ifndef TILEHMM_SIMULATE_HPP
#define TILEHMM_SIMULATE_HPP

#include "tilehmm/hmm.hpp"
#include "tilehmm/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tilehmm::sim {

/// Uniform draw in (0, 1] from the top 53 bits of the generator; safe as a
/// log argument.
double uniform01(std::mt19937_64& rng);

/// Standard bivariate normal pair by the Box-Muller transform; consumes
/// exactly two generator values, so streams replay bit-identically.
Vec2 standard_normal_pair(std::mt19937_64& rng);

/// A planted probe-index interval forced to a hidden state (1-based).
struct PlantedInterval {
  Index begin = 0;  // half-open [begin, end)
  Index end = 0;
  int state = 1;
};

struct PlantedGene {
  std::string gene_id;
  std::vector<PlantedInterval> exons;
};

/// Everything needed to draw one synthetic chromosome: length, category
/// layout (run lengths, cycled to n), generating parameters and optional
/// planted genes whose exonic probes get forced states.
struct Scenario {
  std::string chromosome = "sim";
  Index n = 0;
  std::uint64_t seed = 1;
  std::int64_t start_position = 1;
  std::int64_t spacing = 35;
  std::vector<std::pair<int, Index>> layout;  // (category 1-based, run length)
  hmm::ModelParams params;
  std::vector<PlantedGene> genes;
};

void validate(const Scenario& scenario);

/// Per-probe annotation categories, layout runs repeated cyclically.
std::vector<int> category_sequence(const Scenario& scenario);

/// Hidden states drawn sequentially: the first from the initial law, each
/// next from its category's transition row (or the mixing vector for
/// mixture variants). Forced probes take their planted state without
/// consuming randomness, and the chain continues from the forced value.
std::vector<int> sample_states(const Scenario& scenario, std::mt19937_64& rng);

/// Independent bivariate normal draws given the states (1-based).
MatX2 sample_emissions(const std::vector<int>& states,
                       const emission::ConstrainedGaussianSet& emissions,
                       std::mt19937_64& rng);

struct Dataset {
  ProbeSeries series;
  std::vector<GeneStructure> genes;  // planted genes as probe intervals
  std::vector<int> states;           // ground truth, 1-based
};

/// Draws the full dataset from one seed: states first (one value per
/// unforced probe), then intensities (two values per probe).
Dataset simulate(const Scenario& scenario);

}  // namespace tilehmm::sim

#endif  // TILEHMM_SIMULATE_HPP
