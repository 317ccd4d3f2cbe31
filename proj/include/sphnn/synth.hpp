#pragma once

#include <cstdint>

#include <json.hpp>

#include "sphnn/hin.hpp"

namespace sphnn {

/// Planted-class paper/author/venue network.
struct SynthConfig {
  int q = 3;
  std::size_t papers_per_class = 100;
  std::size_t authors_per_class = 40;
  std::size_t venues_per_class = 3;
  double p_in = 0.1;    // author writes a paper of its home class
  double p_out = 0.01;  // author writes a paper of another class
  double venue_fidelity = 0.9;  // paper published in its class's venue pool
  std::size_t d_feat = 8;
  double feature_scale = 1.0;  // magnitude of the class one-hot in paper features
  double sigma = 0.8;
  std::uint64_t seed = 0;
};

/// Throws ConfigError for inconsistent settings.
void validate(const SynthConfig& cfg);

/// Node order: papers (class-major), then authors, then venues. Types are
/// "paper", "author", "venue"; edge types "writes" and "published_in". Every
/// class gets at least one paper with two authors.
HeteroGraph generate(const SynthConfig& cfg);

/// Unknown keys raise ConfigError.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json synth_config_to_json(const SynthConfig& cfg);

}  // namespace sphnn
