#include "sphnn/synth.hpp"

#include <random>
#include <set>
#include <string>

#include "sphnn/error.hpp"

namespace sphnn {

void validate(const SynthConfig& cfg) {
  if (cfg.q < 1) throw ConfigError("synth: q must be at least 1");
  if (cfg.papers_per_class < 1 || cfg.authors_per_class < 2 || cfg.venues_per_class < 1)
    throw ConfigError(
        "synth: need at least 1 paper, 2 authors and 1 venue per class");
  if (!(cfg.p_in > cfg.p_out) || cfg.p_out < 0.0 || cfg.p_in > 1.0)
    throw ConfigError("synth: need 0 <= p_out < p_in <= 1");
  if (!(cfg.venue_fidelity >= 0.0 && cfg.venue_fidelity <= 1.0))
    throw ConfigError("synth: venue_fidelity must lie in [0, 1]");
  if (cfg.d_feat < static_cast<std::size_t>(cfg.q))
    throw ConfigError("synth: d_feat must be at least q");
  if (!(cfg.feature_scale >= 0.0)) throw ConfigError("synth: feature_scale must be non-negative");
  if (!(cfg.sigma >= 0.0)) throw ConfigError("synth: sigma must be non-negative");
}

HeteroGraph generate(const SynthConfig& cfg) {
  validate(cfg);
  const auto q = static_cast<std::size_t>(cfg.q);
  const std::size_t n_papers = q * cfg.papers_per_class;
  const std::size_t n_authors = q * cfg.authors_per_class;
  const std::size_t n_venues = q * cfg.venues_per_class;
  const std::size_t d = cfg.d_feat;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  auto paper_class = [&](std::size_t p) { return p / cfg.papers_per_class; };
  auto author_class = [&](std::size_t a) { return a / cfg.authors_per_class; };

  // Author-paper links.
  std::set<std::pair<std::size_t, std::size_t>> writes;
  for (std::size_t a = 0; a < n_authors; ++a)
    for (std::size_t p = 0; p < n_papers; ++p)
      if (coin(rng) < (author_class(a) == paper_class(p) ? cfg.p_in : cfg.p_out))
        writes.emplace(a, p);

  // Each class needs a paper with two co-authors so that the APA motif sees it.
  for (std::size_t c = 0; c < q; ++c) {
    std::vector<std::size_t> count(cfg.papers_per_class, 0);
    for (const auto& [a, p] : writes)
      if (paper_class(p) == c) ++count[p - c * cfg.papers_per_class];
    bool ok = false;
    for (std::size_t k : count) ok = ok || k >= 2;
    if (!ok) {
      const std::size_t p = c * cfg.papers_per_class;
      writes.emplace(c * cfg.authors_per_class, p);
      writes.emplace(c * cfg.authors_per_class + 1, p);
    }
  }

  std::vector<std::size_t> venue_of(n_papers);
  for (std::size_t p = 0; p < n_papers; ++p) {
    if (coin(rng) < cfg.venue_fidelity) {
      std::uniform_int_distribution<std::size_t> pick(0, cfg.venues_per_class - 1);
      venue_of[p] = paper_class(p) * cfg.venues_per_class + pick(rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n_venues - 1);
      venue_of[p] = pick(rng);
    }
  }

  std::vector<std::vector<double>> paper_feat(n_papers, std::vector<double>(d));
  for (std::size_t p = 0; p < n_papers; ++p) {
    for (std::size_t k = 0; k < d; ++k) paper_feat[p][k] = cfg.sigma * noise(rng);
    paper_feat[p][paper_class(p)] += cfg.feature_scale;
  }
  auto mean_plus_noise = [&](const std::vector<std::size_t>& papers) {
    std::vector<double> f(d, 0.0);
    for (std::size_t p : papers)
      for (std::size_t k = 0; k < d; ++k) f[k] += paper_feat[p][k];
    for (std::size_t k = 0; k < d; ++k) {
      if (!papers.empty()) f[k] /= static_cast<double>(papers.size());
      f[k] += cfg.sigma * noise(rng);
    }
    return f;
  };
  std::vector<std::vector<std::size_t>> author_papers(n_authors), venue_papers(n_venues);
  for (const auto& [a, p] : writes) author_papers[a].push_back(p);
  for (std::size_t p = 0; p < n_papers; ++p) venue_papers[venue_of[p]].push_back(p);

  HeteroGraph::Builder b;
  b.set_name("synthetic");
  b.set_num_classes(cfg.q);
  const NodeTypeId t_paper = b.add_node_type("paper", d);
  const NodeTypeId t_author = b.add_node_type("author", d);
  const NodeTypeId t_venue = b.add_node_type("venue", d);
  b.set_target_type(t_paper);
  const EdgeTypeId e_writes = b.add_edge_type("writes");
  const EdgeTypeId e_pub = b.add_edge_type("published_in");

  for (std::size_t p = 0; p < n_papers; ++p) {
    const NodeId v = b.add_node("p" + std::to_string(p), t_paper, paper_feat[p]);
    b.set_label(v, static_cast<int>(paper_class(p)));
  }
  for (std::size_t a = 0; a < n_authors; ++a)
    b.add_node("a" + std::to_string(a), t_author, mean_plus_noise(author_papers[a]));
  for (std::size_t v = 0; v < n_venues; ++v)
    b.add_node("v" + std::to_string(v), t_venue, mean_plus_noise(venue_papers[v]));

  const auto author_id = [&](std::size_t a) { return static_cast<NodeId>(n_papers + a); };
  const auto venue_id = [&](std::size_t v) {
    return static_cast<NodeId>(n_papers + n_authors + v);
  };
  for (const auto& [a, p] : writes) b.add_edge(author_id(a), static_cast<NodeId>(p), e_writes);
  for (std::size_t p = 0; p < n_papers; ++p)
    b.add_edge(static_cast<NodeId>(p), venue_id(venue_of[p]), e_pub);
  return std::move(b).build();
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  SynthConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "q") c.q = value.get<int>();
      else if (key == "papers_per_class") c.papers_per_class = value.get<std::size_t>();
      else if (key == "authors_per_class") c.authors_per_class = value.get<std::size_t>();
      else if (key == "venues_per_class") c.venues_per_class = value.get<std::size_t>();
      else if (key == "p_in") c.p_in = value.get<double>();
      else if (key == "p_out") c.p_out = value.get<double>();
      else if (key == "venue_fidelity") c.venue_fidelity = value.get<double>();
      else if (key == "d_feat") c.d_feat = value.get<std::size_t>();
      else if (key == "feature_scale") c.feature_scale = value.get<double>();
      else if (key == "sigma") c.sigma = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError("unknown synth config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {{"q", c.q},
          {"papers_per_class", c.papers_per_class},
          {"authors_per_class", c.authors_per_class},
          {"venues_per_class", c.venues_per_class},
          {"p_in", c.p_in},
          {"p_out", c.p_out},
          {"venue_fidelity", c.venue_fidelity},
          {"d_feat", c.d_feat},
          {"feature_scale", c.feature_scale},
          {"sigma", c.sigma},
          {"seed", c.seed}};
}

}  // namespace sphnn
