#pragma once

// Versioned JSON checkpoints for agent parameters.  Values round-trip
// exactly: the serializer emits shortest-round-trip doubles.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policy.hpp"

namespace cf {

inline constexpr const char* kCheckpointFormat = "coflowforge-agent v1";

inline nlohmann::json encoder_config_json(const EncoderConfig& c) {
  return {{"feature_dim", c.feature_dim}, {"embed_dim", c.embed_dim},
          {"layers", c.layers},           {"norm_bytes", c.norm_bytes},
          {"norm_flows", c.norm_flows},   {"norm_time", c.norm_time},
          {"norm_degree", c.norm_degree}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.feature_dim = j.at("feature_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.norm_bytes = j.at("norm_bytes").get<double>();
  c.norm_flows = j.at("norm_flows").get<double>();
  c.norm_time = j.at("norm_time").get<double>();
  c.norm_degree = j.at("norm_degree").get<double>();
  return c;
}

inline nlohmann::json save_agent(const AgentParams& a) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["kind"] = to_string(a.kind);
  j["encoder_config"] = encoder_config_json(a.enc);
  if (a.kind == PolicyKind::flat) j["flat_max_nodes"] = a.flat.max_nodes;
  j["params"] = flatten_agent(a);
  return j;
}

inline AgentParams load_agent(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw std::runtime_error("checkpoint: unrecognized format");
  auto kind = parse_policy_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("checkpoint: unknown policy kind");
  EncoderConfig enc = encoder_config_from_json(j.at("encoder_config"));
  int flat_max = j.value("flat_max_nodes", 0);

  Rng shape_rng(0);  // only shapes matter; values are overwritten below
  AgentParams a = init_agent(enc, *kind, shape_rng, flat_max);
  std::vector<double> flat = j.at("params").get<std::vector<double>>();
  if (flat.size() != agent_param_count(a))
    throw std::runtime_error("checkpoint: parameter count mismatch");
  unflatten_agent(flat, a);
  return a;
}

inline void save_agent_file(const std::string& path, const AgentParams& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << save_agent(a).dump(2) << "\n";
}

inline AgentParams load_agent_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  return load_agent(j);
}

}  // namespace cf
