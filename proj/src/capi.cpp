#include "popdiag/popdiag_c.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "popdiag/errors.hpp"
#include "popdiag/geometry.hpp"
#include "popdiag/report.hpp"
#include "popdiag/synth.hpp"

namespace {

void copy_error(const std::string& message, char* err, size_t err_len) {
  if (err == nullptr || err_len == 0) return;
  const size_t n = message.size() < err_len - 1 ? message.size() : err_len - 1;
  std::memcpy(err, message.data(), n);
  err[n] = '\0';
}

template <typename Fn>
int guarded(char* err, size_t err_len, Fn&& fn) {
  try {
    fn();
    return POPDIAG_OK;
  } catch (const popdiag::ConfigError& e) {
    copy_error(e.what(), err, err_len);
    return POPDIAG_ERR_CONFIG;
  } catch (const popdiag::DataError& e) {
    copy_error(e.what(), err, err_len);
    return POPDIAG_ERR_DATA;
  } catch (const std::exception& e) {
    copy_error(e.what(), err, err_len);
    return POPDIAG_ERR_INTERNAL;
  } catch (...) {
    copy_error("unknown error", err, err_len);
    return POPDIAG_ERR_INTERNAL;
  }
}

popdiag::SyntheticSpec parse_synth_spec(const char* spec_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec_json);
  } catch (const nlohmann::json::exception& e) {
    throw popdiag::ConfigError(std::string("synth spec parse error: ") + e.what());
  }
  popdiag::SyntheticSpec spec;
  spec.kind = popdiag::synth_kind_from_string(j.at("kind").get<std::string>());
  spec.n = j.value("n", spec.n);
  spec.dim = j.value("dim", spec.dim);
  spec.seed = j.value("seed", spec.seed);
  spec.cluster_count = j.value("clusters", spec.cluster_count);
  spec.sigma = j.value("sigma", spec.sigma);
  spec.intrinsic_dim = j.value("intrinsic_dim", spec.intrinsic_dim);
  if (j.contains("scale")) {
    const auto& s = j["scale"];
    if (!s.is_array() || s.size() != 3)
      throw popdiag::ConfigError("synth scale must be [min, max, levels]");
    spec.scale = popdiag::LikertScale{s[0].get<double>(), s[1].get<double>(), s[2].get<int>()};
  }
  return spec;
}

}  // namespace

extern "C" {

struct popdiag_cloud {
  popdiag::PointCloud cloud;
};

const char* popdiag_version(void) { return popdiag::kToolkitVersion; }

int popdiag_diagnose(const char* config_path, const char* out_dir_override,
                     uint64_t* seed_override, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (config_path == nullptr) throw popdiag::ConfigError("config_path is required");
    popdiag::RunConfig config = popdiag::load_run_config(config_path);
    if (out_dir_override != nullptr) config.out_dir = out_dir_override;
    if (seed_override != nullptr) {
      config.seed = *seed_override;
      config.geometry.seed = *seed_override;
    }
    popdiag::run_diagnose(config);
  });
}

int popdiag_compare(const char* const* report_paths, size_t n_reports,
                    const char* out_csv_path, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (report_paths == nullptr || out_csv_path == nullptr)
      throw popdiag::ConfigError("report paths and output path are required");
    std::vector<std::string> paths(report_paths, report_paths + n_reports);
    const std::string csv = popdiag::run_compare(paths);
    std::FILE* f = std::fopen(out_csv_path, "wb");
    if (f == nullptr) throw popdiag::DataError(std::string("cannot write ") + out_csv_path);
    const size_t written = std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
    if (written != csv.size())
      throw popdiag::DataError(std::string("write failed: ") + out_csv_path);
  });
}

int popdiag_synth(const char* spec_json, const char* out_path, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (spec_json == nullptr || out_path == nullptr)
      throw popdiag::ConfigError("spec and output path are required");
    const popdiag::SyntheticSpec spec = parse_synth_spec(spec_json);
    const popdiag::SynthResult result = popdiag::generate(spec);
    const popdiag::TraitMatrix matrix =
        result.matrix ? *result.matrix : popdiag::cloud_to_matrix(result.cloud);
    popdiag::save_matrix_csv(matrix, out_path);
  });
}

int popdiag_prompts(const char* profiles_path, const char* instrument,
                    const char* items_path, int samples, const char* out_path,
                    char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (profiles_path == nullptr || instrument == nullptr || out_path == nullptr)
      throw popdiag::ConfigError("profiles, instrument, and output path are required");
    popdiag::run_prompts(profiles_path, popdiag::instrument_from_string(instrument),
                         items_path ? std::optional<std::string>(items_path) : std::nullopt,
                         samples, out_path);
  });
}

popdiag_cloud* popdiag_cloud_create(const double* data, size_t n, size_t dim) {
  if (data == nullptr || n == 0 || dim == 0) return nullptr;
  try {
    auto* handle = new popdiag_cloud;
    handle->cloud.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                          Eigen::RowMajor>>(
        data, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    return handle;
  } catch (...) {
    return nullptr;
  }
}

void popdiag_cloud_free(popdiag_cloud* cloud) { delete cloud; }

int popdiag_coverage(const popdiag_cloud* generated, const popdiag_cloud* reference,
                     int k, double* out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!generated || !reference || !out) throw popdiag::ConfigError("null argument");
    *out = popdiag::coverage(generated->cloud, reference->cloud, k);
  });
}

int popdiag_density(const popdiag_cloud* generated, const popdiag_cloud* reference,
                    int k, double* out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!generated || !reference || !out) throw popdiag::ConfigError("null argument");
    *out = popdiag::density(generated->cloud, reference->cloud, k);
  });
}

int popdiag_hopkins(const popdiag_cloud* cloud, int reps, uint64_t seed,
                    double* mean_out, double* sd_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!cloud || !mean_out || !sd_out) throw popdiag::ConfigError("null argument");
    const popdiag::HopkinsResult r = popdiag::hopkins(cloud->cloud, reps, seed);
    *mean_out = r.mean;
    *sd_out = r.sd;
  });
}

int popdiag_lid(const popdiag_cloud* cloud, int k, double* median_out,
                double* mean_out, size_t* skipped_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!cloud || !median_out || !mean_out) throw popdiag::ConfigError("null argument");
    const popdiag::LidResult r = popdiag::lid(cloud->cloud, k);
    if (!r.defined) throw popdiag::DataError("lid undefined: every point skipped");
    *median_out = r.median;
    *mean_out = r.mean;
    if (skipped_out) *skipped_out = r.skipped;
  });
}

int popdiag_participation_ratio(const popdiag_cloud* cloud, double* out,
                                char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!cloud || !out) throw popdiag::ConfigError("null argument");
    *out = popdiag::participation_ratio(cloud->cloud);
  });
}

int popdiag_separation(const popdiag_cloud* cloud, double* min_out,
                       double* mean_nn_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!cloud || !min_out || !mean_nn_out) throw popdiag::ConfigError("null argument");
    const popdiag::SeparationResult r = popdiag::separation(cloud->cloud);
    *min_out = r.min_pair;
    *mean_nn_out = r.mean_nn;
  });
}

int popdiag_hyperspherical_uniformity(const popdiag_cloud* cloud, double t,
                                      double* out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!cloud || !out) throw popdiag::ConfigError("null argument");
    *out = popdiag::hyperspherical_uniformity(cloud->cloud, t);
  });
}

}  // extern "C"
