#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "flexhull/verify.hpp"

namespace flexhull {

// Hex-encoded SHA-256 digests for manifests and input/solution binding.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

nlohmann::json to_json(const MatrixXd& m);   // {rows, cols, data(row-major)}
nlohmann::json to_json(const VectorXd& v);   // plain array
MatrixXd mat_from_json(const nlohmann::json& j);
VectorXd vec_from_json(const nlohmann::json& j);

// Solution files (schema "flexhull/solution/1") carry the shape, the policy
// coefficients, both volume conventions, and the hash of the model file the
// solve consumed.
void save_solution(const std::string& path, const PolicySolution& sol,
                   const std::string& model_sha256);
PolicySolution load_solution(const std::string& path, std::string* model_sha256_out);

nlohmann::json to_json(const ContainmentReport& report);
nlohmann::json to_json(const Polygon& poly);
nlohmann::json to_json(const Ellipse2D& ellipse);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string input_path;
  std::string input_sha256;
  std::uint64_t seed = 0;
  nlohmann::json settings;
  nlohmann::json solver;
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, sha256)
  double wall_seconds = 0.0;
};

void save_manifest(const std::string& path, const RunManifest& manifest);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace flexhull
