// Text file formats, CSV outputs, model files and run manifests.
//
// Hypergraph file:
//   hypergraph v1
//   vertices N
//   <one hyperedge per line: space-separated vertex ids, repeats = multiplicity>
//
// Feature file:
//   features v1 N D C
//   <N lines of D decimal floats>
//   <N lines, one integer label each>
//   <N lines, one of train|val|test each>
//
// '#' starts a comment in both formats; blank lines are ignored. Writers emit
// shortest round-trip decimal floats, so write-then-read is exact.
#pragma once

#include "thnn/build.hpp"
#include "thnn/train.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace thnn {

inline constexpr const char* kArtifactVersion = "thnn 1.0.0";

/// Parse failure carrying the 1-based line number.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

void write_hypergraph(std::ostream& os, const Hypergraph& h);
Hypergraph read_hypergraph(std::istream& is, const std::string& source = "<stream>");
void save_hypergraph(const std::filesystem::path& path, const Hypergraph& h);
Hypergraph load_hypergraph(const std::filesystem::path& path);

void write_features(std::ostream& os, const FeatureDataset& data);
FeatureDataset read_features(std::istream& is, const std::string& source = "<stream>");
void save_features(const std::filesystem::path& path, const FeatureDataset& data);
FeatureDataset load_features(const std::filesystem::path& path);

/// epoch,loss,train_acc,val_acc,test_acc
void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& history);
/// axis_value,seed,test_acc
void write_sweep_csv(std::ostream& os, const SweepResult& result);

nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

/// Model file: config, dimensions and every named parameter.
nlohmann::json model_to_json(const Model& model, const TrainConfig& config, Index input_dim,
                             int num_classes);
void save_model(const std::filesystem::path& path, const Model& model, const TrainConfig& config,
                Index input_dim, int num_classes);
/// Rebuilds the model for `h` and restores its parameters.
std::unique_ptr<Model> load_model(const std::filesystem::path& path, const Hypergraph& h);

/// 64-bit FNV-1a of the file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

/// Writes the manifest with freshly computed input hashes.
void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Empty when every recorded input hash matches the file on disk; otherwise
/// one message per mismatching or missing input.
std::vector<std::string> check_manifest(const std::filesystem::path& path);

}  // namespace thnn
