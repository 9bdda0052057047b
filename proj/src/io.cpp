#include "tilehmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tilehmm::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t end = line.find(sep, begin);
    if (end == std::string::npos) {
      fields.push_back(line.substr(begin));
      break;
    }
    fields.push_back(line.substr(begin, end - begin));
    begin = end + 1;
  }
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  double value = 0.0;
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument(context + ": cannot parse number '" + token + "'");
  return value;
}

std::int64_t parse_int(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument(context + ": cannot parse integer '" + token + "'");
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  return out;
}

void expect_header(const std::vector<std::string>& fields,
                   const std::vector<std::string>& expected, const std::string& path) {
  bool ok = fields.size() == expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i)
    ok = trim(fields[i]) == expected[i];
  if (!ok) {
    std::string want;
    for (const std::string& f : expected) want += (want.empty() ? "" : "\t") + f;
    throw std::invalid_argument(path + ": missing or malformed header (expected '" + want + "')");
  }
}

// Key-value files: '#' comments, blank lines ignored, 'key = value'.
std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
  }
  return kv;
}

class KeyValueReader {
 public:
  KeyValueReader(std::map<std::string, std::string> kv, std::string path)
      : kv_(std::move(kv)), path_(std::move(path)) {}

  const std::string& require(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::invalid_argument(path_ + ": missing required key '" + key + "'");
    return it->second;
  }

  const std::string* find(const std::string& key) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
  }

  double number(const std::string& key) const {
    return parse_double(require(key), path_ + ": key '" + key + "'");
  }

  std::int64_t integer(const std::string& key) const {
    return parse_int(require(key), path_ + ": key '" + key + "'");
  }

  const std::map<std::string, std::string>& all() const { return kv_; }
  const std::string& path() const { return path_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string path_;
};

hmm::ModelParams params_from_keys(const KeyValueReader& kv, const CategoryMap& categories) {
  hmm::ModelParams params;
  params.spec = hmm::ModelSpec::from_name(kv.require("model"), categories.size());

  for (int k = 1; k <= 4; ++k) {
    params.emissions.mu(k - 1, 0) = kv.number("mu." + std::to_string(k) + ".x1");
    params.emissions.mu(k - 1, 1) = kv.number("mu." + std::to_string(k) + ".x2");
    params.emissions.u1[k - 1] = kv.number("u1." + std::to_string(k));
  }
  params.emissions.theta12 = kv.number("theta12");
  params.emissions.theta3 = kv.number("theta3");
  params.emissions.theta4 = kv.number("theta4");
  params.emissions.u2 = kv.number("u2");

  const int pe = params.spec.effective_categories();
  if (params.spec.use_markov) {
    params.transition.resize(static_cast<std::size_t>(pe));
    for (int p = 1; p <= pe; ++p)
      for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l)
          params.transition[static_cast<std::size_t>(p - 1)](k - 1, l - 1) =
              kv.number("trans." + std::to_string(p) + "." + std::to_string(k) + "." +
                        std::to_string(l));
  } else {
    params.mixing.resize(static_cast<std::size_t>(pe));
    for (int p = 1; p <= pe; ++p)
      for (int k = 1; k <= 4; ++k)
        params.mixing[static_cast<std::size_t>(p - 1)][k - 1] =
            kv.number("prop." + std::to_string(p) + "." + std::to_string(k));
  }
  hmm::validate(params);
  return params;
}

void write_params_keys(std::ofstream& out, const hmm::ModelParams& params,
                       const CategoryMap& categories) {
  out << "model = " << params.spec.name() << "\n";
  out << "categories = " << categories.joined() << "\n";
  for (int k = 1; k <= 4; ++k) {
    out << "mu." << k << ".x1 = " << format_double(params.emissions.mu(k - 1, 0)) << "\n";
    out << "mu." << k << ".x2 = " << format_double(params.emissions.mu(k - 1, 1)) << "\n";
  }
  out << "theta12 = " << format_double(params.emissions.theta12) << "\n";
  out << "theta3 = " << format_double(params.emissions.theta3) << "\n";
  out << "theta4 = " << format_double(params.emissions.theta4) << "\n";
  for (int k = 1; k <= 4; ++k)
    out << "u1." << k << " = " << format_double(params.emissions.u1[k - 1]) << "\n";
  out << "u2 = " << format_double(params.emissions.u2) << "\n";
  const int pe = params.spec.effective_categories();
  if (params.spec.use_markov) {
    for (int p = 1; p <= pe; ++p)
      for (int k = 1; k <= 4; ++k)
        for (int l = 1; l <= 4; ++l)
          out << "trans." << p << "." << k << "." << l << " = "
              << format_double(params.transition[static_cast<std::size_t>(p - 1)](k - 1, l - 1))
              << "\n";
  } else {
    for (int p = 1; p <= pe; ++p)
      for (int k = 1; k <= 4; ++k)
        out << "prop." << p << "." << k << " = "
            << format_double(params.mixing[static_cast<std::size_t>(p - 1)][k - 1]) << "\n";
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

CategoryMap::CategoryMap() : labels_{"exon", "intron", "intergenic"} {}

CategoryMap::CategoryMap(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("category map needs at least one label");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw std::invalid_argument("category labels must be non-empty");
    for (std::size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j])
        throw std::invalid_argument("duplicate category label '" + labels_[i] + "'");
  }
}

CategoryMap CategoryMap::parse(const std::string& comma_separated) {
  std::vector<std::string> labels;
  for (const std::string& token : split(comma_separated, ','))
    labels.push_back(trim(token));
  return CategoryMap(std::move(labels));
}

int CategoryMap::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i) + 1;
  throw std::invalid_argument("unknown category label '" + label + "' (allowed: " + joined() +
                              ")");
}

const std::string& CategoryMap::label(int index) const {
  if (index < 1 || index > size())
    throw std::invalid_argument("category index out of range: " + std::to_string(index));
  return labels_[static_cast<std::size_t>(index - 1)];
}

std::string CategoryMap::joined() const {
  std::string out;
  for (const std::string& l : labels_) out += (out.empty() ? "" : ",") + l;
  return out;
}

std::vector<ProbeSeries> load_probe_series(const std::string& path,
                                           const CategoryMap& categories,
                                           std::vector<std::string>* warnings) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  expect_header(split(line, '\t'), {"chrom", "position", "category", "x1", "x2"}, path);

  std::map<std::string, std::vector<Probe>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    const std::string context = path + ":" + std::to_string(lineno);
    if (fields.size() != 5) throw std::invalid_argument(context + ": expected 5 columns");
    Probe probe;
    probe.chromosome = trim(fields[0]);
    probe.position = parse_int(fields[1], context);
    probe.category = categories.index_of(trim(fields[2]));
    probe.x1 = parse_double(fields[3], context);
    probe.x2 = parse_double(fields[4], context);
    if (probe.chromosome.empty()) throw std::invalid_argument(context + ": empty chromosome");
    if (probe.position < 1)
      throw std::invalid_argument(context + ": position must be >= 1");
    if (!std::isfinite(probe.x1) || !std::isfinite(probe.x2))
      throw std::invalid_argument(context + ": non-finite intensity");
    rows[probe.chromosome].push_back(std::move(probe));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no probe rows");

  std::vector<ProbeSeries> series;
  for (auto& [chromosome, probes] : rows) {
    bool sorted = true;
    for (std::size_t i = 1; i < probes.size(); ++i)
      if (probes[i].position < probes[i - 1].position) {
        sorted = false;
        break;
      }
    if (!sorted) {
      std::stable_sort(probes.begin(), probes.end(),
                       [](const Probe& a, const Probe& b) { return a.position < b.position; });
      if (warnings)
        warnings->push_back("probe rows for chromosome '" + chromosome +
                            "' were out of order; sorted by position");
    }
    for (std::size_t i = 1; i < probes.size(); ++i)
      if (probes[i].position == probes[i - 1].position)
        throw std::invalid_argument(path + ": duplicate position " +
                                    std::to_string(probes[i].position) + " on chromosome '" +
                                    chromosome + "'");
    ProbeSeries s = ProbeSeries::from_probes(chromosome, probes);
    validate(s, categories.size());
    series.push_back(std::move(s));
  }
  return series;
}

void save_probe_series(const std::string& path, const std::vector<ProbeSeries>& series,
                       const CategoryMap& categories) {
  std::ofstream out = open_output(path);
  out << "chrom\tposition\tcategory\tx1\tx2\n";
  for (const ProbeSeries& s : series)
    for (Index t = 0; t < s.size(); ++t)
      out << s.chromosome << '\t' << s.positions[static_cast<std::size_t>(t)] << '\t'
          << categories.label(s.categories[static_cast<std::size_t>(t)]) << '\t'
          << format_double(s.intensities(t, 0)) << '\t' << format_double(s.intensities(t, 1))
          << '\n';
}

std::vector<ProbeSeries> normalize_dyeswap(const std::vector<ProbeSeries>& rep_a,
                                           const std::vector<ProbeSeries>& rep_b) {
  if (rep_a.size() != rep_b.size())
    throw std::invalid_argument("dye-swap tables list different chromosome counts");
  std::vector<ProbeSeries> out;
  out.reserve(rep_a.size());
  for (std::size_t c = 0; c < rep_a.size(); ++c) {
    const ProbeSeries& a = rep_a[c];
    const ProbeSeries& b = rep_b[c];
    if (a.chromosome != b.chromosome)
      throw std::invalid_argument("dye-swap tables disagree on chromosome order ('" +
                                  a.chromosome + "' vs '" + b.chromosome + "')");
    if (a.size() != b.size())
      throw std::invalid_argument("dye-swap tables hold different probe counts on chromosome '" +
                                  a.chromosome + "'");
    for (Index t = 0; t < a.size(); ++t) {
      const auto st = static_cast<std::size_t>(t);
      if (a.positions[st] != b.positions[st] || a.categories[st] != b.categories[st])
        throw std::invalid_argument("dye-swap probe mismatch at " + a.chromosome + ":" +
                                    std::to_string(a.positions[st]));
    }
    ProbeSeries merged = a;
    for (Index t = 0; t < a.size(); ++t) {
      merged.intensities(t, 0) = 0.5 * (a.intensities(t, 0) + b.intensities(t, 1));
      merged.intensities(t, 1) = 0.5 * (a.intensities(t, 1) + b.intensities(t, 0));
    }
    out.push_back(std::move(merged));
  }
  return out;
}

std::vector<GeneStructure> load_gene_structures(const std::string& path,
                                                const std::vector<ProbeSeries>& series,
                                                std::vector<std::string>* warnings) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  expect_header(split(line, '\t'), {"gene_id", "chrom", "exon_start", "exon_end"}, path);

  struct BpExon {
    std::int64_t start, end;
  };
  struct RawGene {
    std::string chromosome;
    std::vector<BpExon> exons;
  };
  std::map<std::string, RawGene> raw;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    const std::string context = path + ":" + std::to_string(lineno);
    if (fields.size() != 4) throw std::invalid_argument(context + ": expected 4 columns");
    const std::string gene_id = trim(fields[0]);
    const std::string chromosome = trim(fields[1]);
    const std::int64_t start = parse_int(fields[2], context);
    const std::int64_t end = parse_int(fields[3], context);
    if (gene_id.empty()) throw std::invalid_argument(context + ": empty gene_id");
    if (start >= end)
      throw std::invalid_argument(context + ": exon_start must be below exon_end");
    RawGene& g = raw[gene_id];
    if (g.exons.empty())
      g.chromosome = chromosome;
    else if (g.chromosome != chromosome)
      throw std::invalid_argument(context + ": gene '" + gene_id +
                                  "' spans multiple chromosomes");
    g.exons.push_back(BpExon{start, end});
  }

  std::map<std::string, const ProbeSeries*> by_chrom;
  for (const ProbeSeries& s : series) by_chrom[s.chromosome] = &s;

  std::vector<GeneStructure> genes;
  for (auto& [gene_id, g] : raw) {
    std::sort(g.exons.begin(), g.exons.end(),
              [](const BpExon& a, const BpExon& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < g.exons.size(); ++i)
      if (g.exons[i].start < g.exons[i - 1].end)
        throw std::invalid_argument(path + ": gene '" + gene_id + "' has overlapping exons");

    const auto it = by_chrom.find(g.chromosome);
    if (it == by_chrom.end()) {
      if (warnings)
        warnings->push_back("gene '" + gene_id + "' references unknown chromosome '" +
                            g.chromosome + "'; dropped");
      continue;
    }
    const std::vector<std::int64_t>& positions = it->second->positions;

    GeneStructure gene;
    gene.gene_id = gene_id;
    gene.chromosome = g.chromosome;
    for (const BpExon& exon : g.exons) {
      const auto lo = std::lower_bound(positions.begin(), positions.end(), exon.start) -
                      positions.begin();
      const auto hi = std::lower_bound(positions.begin(), positions.end(), exon.end) -
                      positions.begin();
      if (lo < hi) gene.exons.emplace_back(lo, hi);
    }
    if (gene.exons.empty()) {
      if (warnings)
        warnings->push_back("gene '" + gene_id + "' covers no probes; dropped");
      continue;
    }
    validate(gene, it->second->size());
    genes.push_back(std::move(gene));
  }
  return genes;
}

void save_gene_structures(const std::string& path, const std::vector<GeneStructure>& genes,
                          const std::vector<ProbeSeries>& series) {
  std::map<std::string, const ProbeSeries*> by_chrom;
  for (const ProbeSeries& s : series) by_chrom[s.chromosome] = &s;

  std::ofstream out = open_output(path);
  out << "gene_id\tchrom\texon_start\texon_end\n";
  for (const GeneStructure& gene : genes) {
    const auto it = by_chrom.find(gene.chromosome);
    if (it == by_chrom.end())
      throw std::invalid_argument("gene '" + gene.gene_id + "' references unknown chromosome '" +
                                  gene.chromosome + "'");
    const std::vector<std::int64_t>& positions = it->second->positions;
    for (const auto& [lo, hi] : gene.exons)
      out << gene.gene_id << '\t' << gene.chromosome << '\t'
          << positions[static_cast<std::size_t>(lo)] << '\t'
          << positions[static_cast<std::size_t>(hi - 1)] + 1 << '\n';
  }
}

void save_model(const std::string& path, const hmm::ModelParams& params,
                const CategoryMap& categories) {
  if (categories.size() != params.spec.categories)
    throw std::invalid_argument("category map size disagrees with the model");
  std::ofstream out = open_output(path);
  write_params_keys(out, params, categories);
}

LoadedModel load_model(const std::string& path) {
  KeyValueReader kv(read_key_values(path), path);
  LoadedModel loaded{hmm::ModelParams{}, CategoryMap::parse(kv.require("categories"))};
  loaded.params = params_from_keys(kv, loaded.categories);
  return loaded;
}

void save_posteriors(const std::string& path,
                     const std::vector<const ProbeSeries*>& chains,
                     const std::vector<const MatX4*>& taus, const CategoryMap& categories) {
  if (chains.size() != taus.size())
    throw std::invalid_argument("posterior tables do not match the series list");
  std::ofstream out = open_output(path);
  out << "chrom\tposition\tcategory\ttau1\ttau2\ttau3\ttau4\tlabel\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const ProbeSeries& s = *chains[c];
    const MatX4& tau = *taus[c];
    if (tau.rows() != s.size())
      throw std::invalid_argument("posterior table length mismatch for chromosome '" +
                                  s.chromosome + "'");
    const hmm::ProbeClassification labels = hmm::classify_probes(tau);
    for (Index t = 0; t < s.size(); ++t) {
      out << s.chromosome << '\t' << s.positions[static_cast<std::size_t>(t)] << '\t'
          << categories.label(s.categories[static_cast<std::size_t>(t)]);
      for (int k = 0; k < 4; ++k) out << '\t' << format_double(tau(t, k));
      out << '\t' << group_name(labels.label[static_cast<std::size_t>(t)]) << '\n';
    }
  }
}

std::vector<LabelledProbe> load_posterior_labels(const std::string& path,
                                                 const CategoryMap& categories) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  expect_header(split(line, '\t'),
                {"chrom", "position", "category", "tau1", "tau2", "tau3", "tau4", "label"},
                path);
  std::vector<LabelledProbe> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    const std::string context = path + ":" + std::to_string(lineno);
    if (fields.size() != 8) throw std::invalid_argument(context + ": expected 8 columns");
    LabelledProbe p;
    p.chromosome = trim(fields[0]);
    p.position = parse_int(fields[1], context);
    p.category = categories.index_of(trim(fields[2]));
    p.label = group_from_name(trim(fields[7]));
    out.push_back(std::move(p));
  }
  return out;
}

void save_gene_reports(const std::string& path,
                       const std::vector<region::GeneReport>& reports) {
  std::ofstream out = open_output(path);
  out << "gene_id\tQ1\tQ2\tQ3\tQ4\tprior1\tprior2\tprior3\tprior4"
      << "\traw_logratio\tunistatus\thomogeneous\tclass\n";
  for (const region::GeneReport& r : reports) {
    out << r.gene_id;
    for (int k = 0; k < 4; ++k) out << '\t' << format_double(r.q_x[k]);
    for (int k = 0; k < 4; ++k) out << '\t' << format_double(r.q_prior[k]);
    out << '\t' << format_double(r.raw_log_ratio) << '\t' << format_double(r.unistatus)
        << '\t' << (r.homogeneous ? 1 : 0) << '\t'
        << (r.homogeneous ? group_name(r.assigned_class) : "heterogeneous") << '\n';
  }
}

void save_truth(const std::string& path, const ProbeSeries& series,
                const std::vector<int>& states) {
  if (static_cast<Index>(states.size()) != series.size())
    throw std::invalid_argument("truth states do not match the series length");
  std::ofstream out = open_output(path);
  out << "position\ttrue_state\n";
  for (Index t = 0; t < series.size(); ++t)
    out << series.positions[static_cast<std::size_t>(t)] << '\t'
        << states[static_cast<std::size_t>(t)] << '\n';
}

sim::Scenario load_scenario(const std::string& path) {
  KeyValueReader kv(read_key_values(path), path);
  sim::Scenario scenario;
  const CategoryMap categories = CategoryMap::parse(kv.require("categories"));

  scenario.chromosome = kv.require("chrom");
  scenario.n = kv.integer("n");
  scenario.seed = static_cast<std::uint64_t>(kv.integer("seed"));
  if (const std::string* v = kv.find("start"))
    scenario.start_position = parse_int(*v, path + ": key 'start'");
  if (const std::string* v = kv.find("spacing"))
    scenario.spacing = parse_int(*v, path + ": key 'spacing'");

  for (const std::string& token : split(kv.require("layout"), ',')) {
    const auto colon = token.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument(path + ": key 'layout': expected 'label:length' runs");
    const std::string label = trim(token.substr(0, colon));
    const std::int64_t length =
        parse_int(token.substr(colon + 1), path + ": key 'layout'");
    scenario.layout.emplace_back(categories.index_of(label), length);
  }

  scenario.params = params_from_keys(kv, categories);

  for (const auto& [key, value] : kv.all()) {
    if (key.rfind("plant.", 0) != 0) continue;
    sim::PlantedGene gene;
    gene.gene_id = key.substr(6);
    if (gene.gene_id.empty())
      throw std::invalid_argument(path + ": key '" + key + "': empty gene id");
    for (const std::string& token : split(value, ',')) {
      const auto dash = token.find('-');
      const auto colon = token.find(':', dash == std::string::npos ? 0 : dash);
      if (dash == std::string::npos || colon == std::string::npos)
        throw std::invalid_argument(path + ": key '" + key +
                                    "': expected 'first-last:state' intervals");
      sim::PlantedInterval interval;
      interval.begin = parse_int(token.substr(0, dash), path + ": key '" + key + "'");
      interval.end = parse_int(token.substr(dash + 1, colon - dash - 1),
                               path + ": key '" + key + "'");
      interval.state = static_cast<int>(parse_int(token.substr(colon + 1),
                                                  path + ": key '" + key + "'"));
      gene.exons.push_back(interval);
    }
    scenario.genes.push_back(std::move(gene));
  }

  sim::validate(scenario);
  return scenario;
}

void save_scenario(const std::string& path, const sim::Scenario& scenario,
                   const CategoryMap& categories) {
  std::ofstream out = open_output(path);
  out << "chrom = " << scenario.chromosome << "\n";
  out << "n = " << scenario.n << "\n";
  out << "seed = " << scenario.seed << "\n";
  out << "start = " << scenario.start_position << "\n";
  out << "spacing = " << scenario.spacing << "\n";
  std::string layout;
  for (const auto& [category, length] : scenario.layout)
    layout += (layout.empty() ? "" : ",") + categories.label(category) + ":" +
              std::to_string(length);
  out << "layout = " << layout << "\n";
  write_params_keys(out, scenario.params, categories);
  for (const sim::PlantedGene& gene : scenario.genes) {
    std::string intervals;
    for (const sim::PlantedInterval& exon : gene.exons)
      intervals += (intervals.empty() ? "" : ",") + std::to_string(exon.begin) + "-" +
                   std::to_string(exon.end) + ":" + std::to_string(exon.state);
    out << "plant." << gene.gene_id << " = " << intervals << "\n";
  }
}

}  // namespace tilehmm::io
