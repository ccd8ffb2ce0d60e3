#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "popdiag/cluster.hpp"
#include "popdiag/data.hpp"
#include "popdiag/geometry.hpp"
#include "popdiag/prompts.hpp"

namespace popdiag {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

struct MatrixInput {
  std::string path;
  MatrixFormat format = MatrixFormat::Csv;
  std::optional<LikertScale> scale;
};

struct RunConfig {
  std::optional<MatrixInput> matrix;
  std::optional<MatrixInput> reference;
  std::optional<std::string> profiles_path;
  std::optional<std::string> factor_key_path;
  std::optional<std::string> text_path;
  std::optional<std::string> embeddings_path;
  std::optional<std::string> lexicon_path;
  std::optional<std::string> hedges_path;
  std::optional<std::string> emotions_path;

  GeometryParams geometry;
  std::vector<std::string> incremental_order = {"Political ideology", "Gender", "Country",
                                                "Social class"};
  double balanced_threshold = 0.45;
  std::size_t min_personas = 50;
  std::vector<std::string> demographic_dims;  // for V-Measure labels; empty = all shared dims
  std::vector<int> k_list = {5, 10, 50};
  int kmeans_restarts = 10;
  int kmeans_max_iters = 300;
  double kmeans_tol = 1e-6;
  std::size_t signal_pairs = 1000;
  std::vector<std::string> error_markers;

  std::uint64_t seed = 0;
  std::string out_dir = "popdiag-out";
};

// Parses the JSON config format documented in the README; validates that every
// referenced path exists. Throws ConfigError.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

// Runs the full pipeline over whatever inputs are configured and writes
// report.json, report_meta.json, per-item CSV tables, and 2-D projection CSVs
// into config.out_dir. Output is staged in a temp directory and renamed, so an
// interrupted run leaves no partial report. Returns the report JSON text.
std::string run_diagnose(const RunConfig& config);

// Model-by-metric CSV mirroring the report's headline columns.
std::string run_compare(const std::vector<std::string>& report_paths);

// One JSONL record per (persona, item); self_intro repeats per sample count.
void run_prompts(const std::string& profiles_path, Instrument instrument,
                 const std::optional<std::string>& items_path, int samples,
                 const std::string& out_path);

}  // namespace popdiag
