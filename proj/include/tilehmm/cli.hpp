#ifndef TILEHMM_CLI_HPP
#define TILEHMM_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tilehmm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;      // usage or input errors
inline constexpr int kExitNumerical = 2;  // numerical / convergence warnings

/// Resolved options of one command invocation.
struct RunConfig {
  std::string command;  // fit, genes, novel, select or simulate
  std::string input;
  std::string genes;
  std::string params_path;
  std::string labels;
  std::string scenario;
  std::string out = ".";
  std::string model = "m4";
  std::string categories = "exon,intron,intergenic";
  double tol = 1e-6;
  int max_iter = 500;
  int restarts = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool pooled = false;
  double threshold = 0.0;
  int min_run = 2;
  std::vector<std::string> exclude_categories = {"exon"};
};

int run_fit(const RunConfig& config);
int run_genes(const RunConfig& config);
int run_novel(const RunConfig& config);
int run_select(const RunConfig& config);
int run_simulate(const RunConfig& config);

/// Dispatches on config.command; all input problems come back as exit
/// code 1, numerical or convergence warnings as 2.
int run(const RunConfig& config);

}  // namespace tilehmm::cli

#endif  // TILEHMM_CLI_HPP
