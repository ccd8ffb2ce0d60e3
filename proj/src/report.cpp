#include "popdiag/report.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "popdiag/errors.hpp"
#include "popdiag/item_stats.hpp"
#include "popdiag/text.hpp"

namespace popdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string resolve_path(const std::string& raw, const std::string& base_dir) {
  fs::path p(raw);
  if (p.is_absolute() || base_dir.empty()) return raw;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

MatrixInput parse_matrix_input(const json& j, const std::string& base_dir) {
  MatrixInput input;
  if (j.is_string()) {
    input.path = resolve_path(j.get<std::string>(), base_dir);
    return input;
  }
  input.path = resolve_path(j.at("path").get<std::string>(), base_dir);
  const std::string format = j.value("format", std::string("csv"));
  if (format == "csv") {
    input.format = MatrixFormat::Csv;
  } else if (format == "jsonl") {
    input.format = MatrixFormat::Jsonl;
  } else {
    throw ConfigError("matrix format must be csv or jsonl, got '" + format + "'");
  }
  if (j.contains("scale")) {
    const auto& s = j["scale"];
    if (!s.is_array() || s.size() != 3)
      throw ConfigError("matrix scale must be [min, max, levels]");
    input.scale = LikertScale{s[0].get<double>(), s[1].get<double>(), s[2].get<int>()};
  }
  return input;
}

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " path does not exist: " + path);
}

json likert_to_json(const LikertScale& s) { return json::array({s.min, s.max, s.levels}); }

json config_echo(const RunConfig& c) {
  json j;
  auto matrix_json = [](const MatrixInput& m) {
    json mj;
    mj["path"] = m.path;
    mj["format"] = m.format == MatrixFormat::Csv ? "csv" : "jsonl";
    if (m.scale) mj["scale"] = likert_to_json(*m.scale);
    return mj;
  };
  if (c.matrix) j["matrix"] = matrix_json(*c.matrix);
  if (c.reference) j["reference"] = matrix_json(*c.reference);
  if (c.profiles_path) j["profiles"] = *c.profiles_path;
  if (c.factor_key_path) j["factor_key"] = *c.factor_key_path;
  if (c.text_path) j["text"] = *c.text_path;
  if (c.embeddings_path) j["embeddings"] = *c.embeddings_path;
  if (c.lexicon_path) j["lexicon"] = *c.lexicon_path;
  if (c.hedges_path) j["hedges"] = *c.hedges_path;
  if (c.emotions_path) j["emotions"] = *c.emotions_path;
  j["geometry"] = {{"k_coverage", c.geometry.k_coverage},
                   {"k_lid", c.geometry.k_lid},
                   {"hopkins_reps", c.geometry.hopkins_reps},
                   {"temperature_t", c.geometry.temperature_t},
                   {"normalize_embeddings", c.geometry.normalize_embeddings}};
  j["item_stats"] = {{"incremental_order", c.incremental_order},
                     {"balanced_threshold", c.balanced_threshold},
                     {"min_personas", c.min_personas}};
  j["clusters"] = {{"k_list", c.k_list},
                   {"restarts", c.kmeans_restarts},
                   {"max_iters", c.kmeans_max_iters},
                   {"tol", c.kmeans_tol}};
  if (!c.demographic_dims.empty()) j["demographic_dims"] = c.demographic_dims;
  j["signal_pairs"] = c.signal_pairs;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  const json inputs = j.value("inputs", json::object());
  if (inputs.contains("matrix")) c.matrix = parse_matrix_input(inputs["matrix"], base_dir);
  if (inputs.contains("reference")) c.reference = parse_matrix_input(inputs["reference"], base_dir);
  auto path_of = [&](const char* key) -> std::optional<std::string> {
    if (!inputs.contains(key)) return std::nullopt;
    return resolve_path(inputs[key].get<std::string>(), base_dir);
  };
  c.profiles_path = path_of("profiles");
  c.factor_key_path = path_of("factor_key");
  c.text_path = path_of("text");
  c.embeddings_path = path_of("embeddings");
  c.lexicon_path = path_of("lexicon");
  c.hedges_path = path_of("hedges");
  c.emotions_path = path_of("emotions");

  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    c.geometry.k_coverage = g.value("k_coverage", c.geometry.k_coverage);
    c.geometry.k_lid = g.value("k_lid", c.geometry.k_lid);
    c.geometry.hopkins_reps = g.value("hopkins_reps", c.geometry.hopkins_reps);
    c.geometry.temperature_t = g.value("temperature_t", c.geometry.temperature_t);
    c.geometry.normalize_embeddings =
        g.value("normalize_embeddings", c.geometry.normalize_embeddings);
  }
  if (j.contains("item_stats")) {
    const auto& s = j["item_stats"];
    if (s.contains("incremental_order"))
      c.incremental_order = s["incremental_order"].get<std::vector<std::string>>();
    c.balanced_threshold = s.value("balanced_threshold", c.balanced_threshold);
    c.min_personas = s.value("min_personas", c.min_personas);
  }
  if (j.contains("clusters")) {
    const auto& s = j["clusters"];
    if (s.contains("k_list")) c.k_list = s["k_list"].get<std::vector<int>>();
    c.kmeans_restarts = s.value("restarts", c.kmeans_restarts);
    c.kmeans_max_iters = s.value("max_iters", c.kmeans_max_iters);
    c.kmeans_tol = s.value("tol", c.kmeans_tol);
  }
  if (j.contains("demographic_dims"))
    c.demographic_dims = j["demographic_dims"].get<std::vector<std::string>>();
  if (j.contains("error_markers"))
    c.error_markers = j["error_markers"].get<std::vector<std::string>>();
  c.signal_pairs = j.value("signal_pairs", c.signal_pairs);
  c.seed = j.value("seed", c.seed);
  c.geometry.seed = c.seed;
  c.out_dir = j.value("out", c.out_dir);
  if (!fs::path(c.out_dir).is_absolute() && !base_dir.empty())
    c.out_dir = (fs::path(base_dir) / c.out_dir).lexically_normal().string();

  for (const auto& [what, path] :
       std::vector<std::pair<std::string, std::optional<std::string>>>{
           {"matrix", c.matrix ? std::optional(c.matrix->path) : std::nullopt},
           {"reference", c.reference ? std::optional(c.reference->path) : std::nullopt},
           {"profiles", c.profiles_path},
           {"factor_key", c.factor_key_path},
           {"text", c.text_path},
           {"embeddings", c.embeddings_path},
           {"lexicon", c.lexicon_path},
           {"hedges", c.hedges_path},
           {"emotions", c.emotions_path}}) {
    if (path) require_exists(*path, what);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  require_exists(path, "config");
  return parse_run_config(read_file(path), fs::path(path).parent_path().string());
}

namespace {

json geometry_to_json(const GeometryReport& g) {
  json j;
  if (g.coverage) {
    j["coverage"] = {{"value", *g.coverage}, {"k", g.params.k_coverage}};
    j["density"] = {{"value", *g.density}, {"k", g.params.k_coverage}};
  }
  j["hopkins"] = {{"mean", g.hopkins.mean},
                  {"sd", g.hopkins.sd},
                  {"m", g.hopkins.m},
                  {"reps", g.hopkins.reps},
                  {"seed", g.params.seed}};
  j["uniformity_loss"] = {{"value", g.uniformity_loss}, {"t", g.params.temperature_t}};
  j["separation"] = {{"min_pair", g.separation.min_pair}, {"mean_nn", g.separation.mean_nn}};
  json lid_json = {{"k", g.params.k_lid}, {"skipped", g.lid.skipped}, {"defined", g.lid.defined}};
  if (g.lid.defined) {
    lid_json["median"] = g.lid.median;
    lid_json["mean"] = g.lid.mean;
  }
  j["lid"] = lid_json;
  j["participation_ratio"] = g.participation_ratio;
  return j;
}

json cluster_section(const PointCloud& cloud, const LabelVector& labels, const RunConfig& config,
                     std::vector<std::string>& warnings, const std::string& context) {
  json out = json::array();
  for (int k : config.k_list) {
    if (static_cast<std::size_t>(k) > cloud.n()) {
      warnings.push_back(context + ": skipped K=" + std::to_string(k) + " (K > N)");
      continue;
    }
    KMeansParams params;
    params.k = k;
    params.seed = config.seed;
    params.restarts = config.kmeans_restarts;
    params.max_iters = config.kmeans_max_iters;
    params.tol = config.kmeans_tol;
    const ClusterAssignment assignment = kmeans(cloud, params);
    json entry;
    entry["k"] = k;
    entry["seed"] = params.seed;
    entry["restarts"] = params.restarts;
    entry["inertia"] = assignment.inertia;
    if (!labels.empty()) {
      const VMeasureResult vm = v_measure(assignment.labels, labels);
      entry["v_measure"] = {{"homogeneity", vm.homogeneity},
                            {"completeness", vm.completeness},
                            {"v", vm.v}};
    }
    std::set<int> distinct(assignment.labels.begin(), assignment.labels.end());
    if (distinct.size() >= 2) {
      entry["silhouette"] = silhouette(cloud, assignment.labels);
    } else {
      warnings.push_back(context + ": silhouette undefined at K=" + std::to_string(k));
    }
    out.push_back(entry);
  }
  return out;
}

// Demographic dimensions used for grouping: configured list, or every
// dimension present on all profiles.
std::vector<std::string> shared_dimensions(const std::vector<PersonaProfile>& profiles,
                                           const std::vector<std::string>& configured) {
  if (!configured.empty()) return configured;
  if (profiles.empty()) return {};
  std::vector<std::string> dims;
  for (const auto& [dim, _] : profiles.front().attributes) {
    bool everywhere = true;
    for (const auto& p : profiles) {
      if (p.find_attribute(dim) == nullptr) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) dims.push_back(dim);
  }
  return dims;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string projection_csv(const TraitMatrix& matrix) {
  const Eigen::MatrixXd proj = project_2d(PointCloud{matrix.values});
  std::string csv = "persona_id,x,y\n";
  for (std::size_t i = 0; i < matrix.n(); ++i) {
    csv += csv_escape(matrix.persona_ids[i]) + ',' +
           format_double(proj(static_cast<Eigen::Index>(i), 0)) + ',' +
           format_double(proj(static_cast<Eigen::Index>(i), 1)) + '\n';
  }
  return csv;
}

}  // namespace

std::string run_diagnose(const RunConfig& config) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["toolkit_version"] = kToolkitVersion;
  report["config"] = config_echo(config);
  std::vector<std::string> warnings;
  std::vector<std::string> absent;
  std::map<std::string, std::string> extra_files;

  // ---- load inputs ----
  std::optional<TraitMatrix> matrix;
  std::optional<TraitMatrix> reference;
  std::vector<PersonaProfile> profiles;
  std::optional<FactorKey> key;
  std::optional<TextCorpus> corpus;
  std::vector<SampleEmbedding> embeddings;
  if (config.matrix) matrix = load_matrix(config.matrix->path, config.matrix->format,
                                          config.matrix->scale);
  if (config.reference)
    reference = load_matrix(config.reference->path, config.reference->format,
                            config.reference->scale);
  if (config.profiles_path) profiles = load_profiles(*config.profiles_path);
  if (config.factor_key_path) key = load_factor_key(*config.factor_key_path);
  if (config.text_path)
    corpus = load_text_corpus(*config.text_path, config.error_markers.empty()
                                                     ? kDefaultErrorMarkers
                                                     : config.error_markers);
  if (config.embeddings_path) embeddings = load_embeddings(*config.embeddings_path);

  std::map<std::string, const PersonaProfile*> profile_by_id;
  for (const auto& p : profiles) profile_by_id[p.persona_id] = &p;
  // Profiles aligned with matrix rows (when both inputs are present).
  std::vector<const PersonaProfile*> aligned;
  if (matrix && !profiles.empty()) {
    for (const auto& id : matrix->persona_ids) {
      auto it = profile_by_id.find(id);
      if (it == profile_by_id.end())
        throw DataError("matrix persona '" + id + "' has no profile");
      aligned.push_back(it->second);
    }
  }

  // ---- geometry ----
  if (matrix) {
    GeometryParams params = config.geometry;
    params.seed = config.seed;
    PointCloud cloud{matrix->values};
    std::optional<PointCloud> ref_cloud;
    if (reference) {
      ref_cloud = PointCloud{reference->values};
      report["geometry"]["reference"] =
          geometry_to_json(geometry_report(*ref_cloud, nullptr, params));
    }
    report["geometry"]["model"] = geometry_to_json(
        geometry_report(cloud, ref_cloud ? &*ref_cloud : nullptr, params));
    extra_files["projection_model.csv"] = projection_csv(*matrix);
    if (reference) extra_files["projection_reference.csv"] = projection_csv(*reference);
  } else {
    absent.push_back("geometry");
  }

  // ---- item stats ----
  if (matrix && matrix->scale) {
    json items;
    const EffectiveLikertResult effl = effective_likert_matrix(*matrix);
    items["effective_likert"] = {{"per_item", effl.per_item}, {"mean", effl.mean}};

    std::optional<VarianceRatioResult> var_items;
    if (reference) {
      var_items = variance_ratio(*matrix, *reference, VarianceLevel::Item, nullptr);
      json per_col = json::array();
      for (const auto& r : var_items->per_column) per_col.push_back(r ? json(*r) : json(nullptr));
      items["variance_ratio_item"] = {{"per_item", per_col},
                                      {"total", var_items->total_ratio},
                                      {"undefined_columns", var_items->undefined_columns}};
      if (key) {
        const auto var_factors = variance_ratio(*matrix, *reference, VarianceLevel::Factor, &*key);
        json per_factor = json::array();
        for (const auto& r : var_factors.per_column)
          per_factor.push_back(r ? json(*r) : json(nullptr));
        items["variance_ratio_factor"] = {{"per_factor", per_factor},
                                          {"total", var_factors.total_ratio}};
      }
    }

    std::vector<std::string> dims;
    if (!aligned.empty()) {
      std::vector<PersonaProfile> aligned_copies;
      for (const auto* p : aligned) aligned_copies.push_back(*p);
      dims = shared_dimensions(aligned_copies, config.demographic_dims);
    }

    // Per-item eta^2 by demographic dimension.
    json eta_section;
    std::map<std::string, std::vector<double>> eta_by_dim;
    if (!aligned.empty() && !dims.empty()) {
      for (const auto& dim : dims) {
        std::vector<double> per_item;
        std::size_t degenerate = 0;
        for (std::size_t c = 0; c < matrix->d(); ++c) {
          GroupedSamples grouped;
          grouped.grouping_variable = dim;
          for (std::size_t r = 0; r < matrix->n(); ++r) {
            const std::string* value = aligned[r]->find_attribute(dim);
            check_internal(value != nullptr, "eta: shared dimension missing");
            grouped.groups[*value].push_back(
                matrix->values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
          }
          if (grouped.groups.size() < 2) {
            per_item.push_back(0.0);
            ++degenerate;
            continue;
          }
          const auto eta = eta_squared(grouped);
          per_item.push_back(eta.value);
          if (eta.degenerate) ++degenerate;
        }
        double mean = 0.0;
        for (double v : per_item) mean += v;
        mean /= static_cast<double>(per_item.size());
        eta_section[dim] = {{"per_item", per_item}, {"mean", mean}, {"degenerate", degenerate}};
        eta_by_dim[dim] = per_item;
      }
      items["eta_squared"] = eta_section;
    }

    // Incremental R^2 averaged over items.
    if (!aligned.empty()) {
      bool have_order_dims = true;
      for (const auto& name : config.incremental_order) {
        for (const auto* p : aligned) {
          if (p->find_attribute(name) == nullptr) {
            have_order_dims = false;
            break;
          }
        }
      }
      if (have_order_dims && !config.incremental_order.empty()) {
        std::map<std::string, std::vector<std::string>> attrs;
        for (const auto& name : config.incremental_order) {
          std::vector<std::string> column;
          for (const auto* p : aligned) column.push_back(*p->find_attribute(name));
          attrs[name] = column;
        }
        std::vector<double> increment_sums(config.incremental_order.size(), 0.0);
        json per_item = json::array();
        for (std::size_t c = 0; c < matrix->d(); ++c) {
          std::vector<double> outcome;
          for (std::size_t r = 0; r < matrix->n(); ++r)
            outcome.push_back(
                matrix->values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
          const auto r2 = incremental_r2(outcome, attrs, config.incremental_order,
                                         config.balanced_threshold);
          per_item.push_back({{"item", matrix->item_ids[c]},
                              {"increments", r2.increments},
                              {"total", r2.total},
                              {"dominant", r2.dominant},
                              {"dom_pct", r2.dom_pct}});
          for (std::size_t a = 0; a < r2.increments.size(); ++a)
            increment_sums[a] += r2.increments[a];
        }
        std::vector<double> mean_increments;
        double total = 0.0;
        for (double s : increment_sums) {
          mean_increments.push_back(s / static_cast<double>(matrix->d()));
          total += s / static_cast<double>(matrix->d());
        }
        std::size_t best = 0;
        for (std::size_t a = 1; a < mean_increments.size(); ++a)
          if (mean_increments[a] > mean_increments[best]) best = a;
        const double dom_pct = total > 0.0 ? mean_increments[best] / total : 0.0;
        items["incremental_r2"] = {
            {"order", config.incremental_order},
            {"mean_increments", mean_increments},
            {"total", total},
            {"dom_pct", dom_pct},
            {"dominant", total > 0.0 && dom_pct > config.balanced_threshold
                             ? config.incremental_order[best]
                             : "Balanced"},
            {"per_item", per_item}};
      } else if (!config.incremental_order.empty()) {
        warnings.push_back("incremental_r2 skipped: profiles missing ordered attributes");
      }
    }

    // Factor scoring, Spearman fidelity, and Cohen's d need the key.
    if (key) {
      const TraitMatrix scores = score_factors(*matrix, *key);
      if (!aligned.empty()) {
        std::vector<std::map<std::string, std::string>> assigned;
        for (const auto* p : aligned) assigned.push_back(p->assigned_traits);
        bool any_assigned = false;
        for (const auto& a : assigned)
          if (!a.empty()) any_assigned = true;
        if (any_assigned) {
          const auto fid = fidelity_spearman(scores, assigned);
          json per_factor = json::array();
          for (std::size_t f = 0; f < fid.per_factor.size(); ++f)
            per_factor.push_back({{"factor", scores.item_ids[f]},
                                  {"rho", fid.per_factor[f] ? json(*fid.per_factor[f])
                                                            : json(nullptr)}});
          items["fidelity_spearman"] = {{"per_factor", per_factor},
                                        {"mean", fid.mean},
                                        {"pooled", fid.pooled},
                                        {"excluded_factors", fid.excluded_factors}};

          json d_section = json::array();
          double d_sum = 0.0;
          std::size_t d_count = 0;
          for (std::size_t f = 0; f < scores.d(); ++f) {
            std::vector<double> high;
            std::vector<double> low;
            for (std::size_t r = 0; r < scores.n(); ++r) {
              auto it = assigned[r].find(scores.item_ids[f]);
              if (it == assigned[r].end()) continue;
              const double v =
                  scores.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
              if (it->second == "High") high.push_back(v);
              if (it->second == "Low") low.push_back(v);
            }
            if (high.size() < 2 || low.size() < 2) {
              warnings.push_back("cohens_d skipped for factor '" + scores.item_ids[f] +
                                 "': too few High/Low personas");
              continue;
            }
            const auto d = cohens_d(high, low);
            d_section.push_back({{"factor", scores.item_ids[f]},
                                 {"d", d.value},
                                 {"infinite", d.infinite}});
            if (!d.infinite) {
              d_sum += std::abs(d.value);
              ++d_count;
            }
          }
          if (d_count > 0) {
            items["cohens_d"] = {{"per_factor", d_section},
                                 {"mean_abs", d_sum / static_cast<double>(d_count)}};
          }
        }
      }
    }
    report["item_stats"] = items;

    // Per-item CSV table.
    std::string csv = "item_id,effective_likert";
    if (var_items) csv += ",variance_ratio";
    for (const auto& [dim, _] : eta_by_dim) csv += ",eta2_" + dim;
    csv += '\n';
    for (std::size_t c = 0; c < matrix->d(); ++c) {
      csv += csv_escape(matrix->item_ids[c]) + ',' + format_double(effl.per_item[c]);
      if (var_items)
        csv += ',' + (var_items->per_column[c] ? format_double(*var_items->per_column[c])
                                               : std::string());
      for (const auto& [_, values] : eta_by_dim) csv += ',' + format_double(values[c]);
      csv += '\n';
    }
    extra_files["items.csv"] = csv;
  } else {
    absent.push_back("item_stats");
  }

  // ---- clustering on the trait matrix ----
  if (matrix) {
    LabelVector labels;
    if (!aligned.empty()) {
      std::vector<PersonaProfile> aligned_copies;
      for (const auto* p : aligned) aligned_copies.push_back(*p);
      const auto dims = shared_dimensions(aligned_copies, config.demographic_dims);
      if (!dims.empty()) labels = concat_demographics(aligned_copies, dims);
    }
    report["clusters"]["matrix"] =
        cluster_section(PointCloud{matrix->values}, labels, config, warnings, "matrix clusters");
  } else {
    absent.push_back("clusters");
  }

  // ---- text ----
  if (corpus) {
    json text_section;
    TextLexicons lexicons = default_text_lexicons();
    if (config.hedges_path && config.emotions_path)
      lexicons = load_text_lexicons(*config.hedges_path, *config.emotions_path);

    std::size_t valid_count = 0;
    std::map<std::string, std::map<std::string, std::vector<double>>> feature_samples;
    std::map<std::string, std::vector<double>> feature_all;
    for (const auto& entry : corpus->entries) {
      if (!entry.valid) continue;
      ++valid_count;
      const auto features = extract_features(entry.raw_text, lexicons);
      const auto values = feature_values(features);
      for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
        feature_samples[kFeatureNames[f]][entry.persona_id].push_back(values[f]);
        feature_all[kFeatureNames[f]].push_back(values[f]);
      }
    }
    text_section["valid_texts"] = valid_count;
    text_section["invalid_texts"] = corpus->entries.size() - valid_count;
    if (valid_count == 0) throw DataError("text corpus has no valid entries");

    json feature_summary;
    for (const auto& name : kFeatureNames) {
      const auto& values = feature_all[name];
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd =
          values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
      feature_summary[name] = {{"mean", mean}, {"sd", sd}};
    }
    text_section["features"] = feature_summary;

    // ICC per feature.
    json icc_section;
    double icc_sum = 0.0;
    std::size_t icc_count = 0;
    for (const auto& name : kFeatureNames) {
      try {
        const auto icc = icc_oneway(feature_samples[name], config.min_personas);
        icc_section[name] = {{"icc", icc.value},
                             {"personas", icc.personas_used},
                             {"k_mean", icc.k_mean}};
        icc_sum += icc.value;
        ++icc_count;
      } catch (const DataError& e) {
        warnings.push_back(std::string("icc skipped for ") + name + ": " + e.what());
      }
    }
    if (icc_count > 0) {
      icc_section["mean"] = icc_sum / static_cast<double>(icc_count);
      text_section["icc"] = icc_section;
    }

    if (!profiles.empty() && config.lexicon_path) {
      const KeywordLexicon lexicon = load_lexicon(*config.lexicon_path);
      const auto rates = mention_rates(*corpus, profiles, lexicon);
      json mention_section;
      for (const auto& [dim, rate] : rates.correct)
        mention_section[dim] = {{"correct", rate}, {"any", rates.any.at(dim)}};
      text_section["mention_rates"] = {{"per_dimension", mention_section},
                                       {"mean_correct", rates.mean_correct},
                                       {"texts", rates.texts_used}};
    }

    const auto templates = template_stats(*corpus);
    text_section["template"] = {{"opening_diversity", templates.opening_diversity},
                                {"top_skeleton_share", templates.top_skeleton_share},
                                {"top_skeleton", templates.top_skeleton},
                                {"mean_headers", templates.mean_headers},
                                {"sd_headers", templates.sd_headers},
                                {"mean_paragraphs", templates.mean_paragraphs},
                                {"sd_paragraphs", templates.sd_paragraphs},
                                {"texts_used", templates.texts_used}};

    // Per-feature eta^2 and incremental R^2 on persona-mean feature values.
    if (!profiles.empty()) {
      std::vector<const PersonaProfile*> with_features;
      std::map<std::string, std::vector<double>> persona_feature_means;
      for (const auto& p : profiles) {
        bool has = true;
        for (const auto& name : kFeatureNames) {
          if (!feature_samples[name].count(p.persona_id)) has = false;
        }
        if (has) with_features.push_back(&p);
      }
      if (with_features.size() >= 3) {
        std::vector<PersonaProfile> copies;
        for (const auto* p : with_features) copies.push_back(*p);
        const auto dims = shared_dimensions(copies, config.demographic_dims);
        json per_feature;
        for (const auto& name : kFeatureNames) {
          std::vector<double> outcome;
          for (const auto* p : with_features) {
            const auto& samples = feature_samples[name][p->persona_id];
            double mean = 0.0;
            for (double v : samples) mean += v;
            outcome.push_back(mean / static_cast<double>(samples.size()));
          }
          json entry;
          for (const auto& dim : dims) {
            GroupedSamples grouped;
            grouped.grouping_variable = dim;
            for (std::size_t i = 0; i < with_features.size(); ++i)
              grouped.groups[*with_features[i]->find_attribute(dim)].push_back(outcome[i]);
            if (grouped.groups.size() < 2) continue;
            entry["eta_squared"][dim] = eta_squared(grouped).value;
          }
          bool have_order = !config.incremental_order.empty();
          for (const auto& attr : config.incremental_order) {
            for (const auto* p : with_features)
              if (p->find_attribute(attr) == nullptr) have_order = false;
          }
          if (have_order) {
            std::map<std::string, std::vector<std::string>> attrs;
            for (const auto& attr : config.incremental_order) {
              std::vector<std::string> column;
              for (const auto* p : with_features) column.push_back(*p->find_attribute(attr));
              attrs[attr] = column;
            }
            try {
              const auto r2 = incremental_r2(outcome, attrs, config.incremental_order,
                                             config.balanced_threshold);
              entry["incremental_r2"] = {{"order", r2.order},
                                         {"increments", r2.increments},
                                         {"total", r2.total},
                                         {"dominant", r2.dominant},
                                         {"dom_pct", r2.dom_pct}};
            } catch (const DataError& e) {
              warnings.push_back(std::string("text incremental_r2 skipped for ") + name + ": " +
                                 e.what());
            }
          }
          per_feature[name] = entry;
        }
        text_section["feature_decomposition"] = per_feature;
      }
    }

    report["text"] = text_section;
  } else {
    absent.push_back("text");
  }

  // ---- embedding geometry and persona signal ----
  if (!embeddings.empty()) {
    const auto signal = persona_signal(embeddings, config.signal_pairs, config.seed);
    json emb_section;
    emb_section["persona_signal"] = {{"intra", signal.intra},
                                     {"inter", signal.inter},
                                     {"ratio", signal.ratio},
                                     {"ratio_flagged", signal.ratio_flagged},
                                     {"pairs", config.signal_pairs},
                                     {"seed", config.seed}};
    if (signal.persona_means.rows() > static_cast<Eigen::Index>(config.geometry.k_lid)) {
      GeometryParams params = config.geometry;
      params.seed = config.seed;
      PointCloud cloud{signal.persona_means};
      emb_section["geometry"] = geometry_to_json(geometry_report(cloud, nullptr, params));
      LabelVector labels;
      if (!profiles.empty()) {
        std::vector<PersonaProfile> ordered;
        bool complete = true;
        for (const auto& id : signal.persona_ids) {
          auto it = profile_by_id.find(id);
          if (it == profile_by_id.end()) {
            complete = false;
            break;
          }
          ordered.push_back(*it->second);
        }
        if (complete) {
          const auto dims = shared_dimensions(ordered, config.demographic_dims);
          if (!dims.empty()) labels = concat_demographics(ordered, dims);
        }
      }
      emb_section["clusters"] =
          cluster_section(cloud, labels, config, warnings, "embedding clusters");
    } else {
      warnings.push_back("embedding geometry skipped: too few personas for k_lid");
    }
    report["embedding"] = emb_section;
  } else {
    absent.push_back("embedding");
  }

  report["sections_absent"] = absent;
  report["warnings"] = warnings;

  // ---- atomic output ----
  const fs::path out_dir(config.out_dir);
  const fs::path lock = out_dir.string() + ".lock";
  if (fs::exists(lock))
    throw ConfigError("output directory is locked by another run: " + lock.string());
  fs::create_directories(lock.parent_path().empty() ? fs::path(".") : lock.parent_path());
  write_file(lock, "popdiag\n");
  try {
    const fs::path staging = out_dir.string() + ".tmp";
    fs::remove_all(staging);
    fs::create_directories(staging);
    const std::string report_text = report.dump(2) + "\n";
    write_file(staging / "report.json", report_text);
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    json meta = {{"toolkit_version", kToolkitVersion},
                 {"written_unix_ms",
                  std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    write_file(staging / "report_meta.json", meta.dump(2) + "\n");
    for (const auto& [name, content] : extra_files) write_file(staging / name, content);
    fs::remove_all(out_dir);
    fs::rename(staging, out_dir);
    fs::remove(lock);
    return report_text;
  } catch (...) {
    fs::remove(lock);
    throw;
  }
}

namespace {

std::string json_cell(const json& j, std::initializer_list<const char*> path) {
  const json* cur = &j;
  for (const char* key : path) {
    if (!cur->is_object() || !cur->contains(key)) return std::string();
    cur = &(*cur)[key];
  }
  if (cur->is_number()) return format_double(cur->get<double>());
  if (cur->is_string()) return cur->get<std::string>();
  return std::string();
}

std::string cluster_cell(const json& report, const char* section, int k, const char* field) {
  if (!report.contains("clusters") || !report["clusters"].contains(section))
    return std::string();
  for (const auto& entry : report["clusters"][section]) {
    if (entry.value("k", -1) != k) continue;
    if (std::string(field) == "silhouette")
      return entry.contains("silhouette") ? format_double(entry["silhouette"].get<double>())
                                          : std::string();
    if (entry.contains("v_measure"))
      return format_double(entry["v_measure"][field].get<double>());
  }
  return std::string();
}

}  // namespace

std::string run_compare(const std::vector<std::string>& report_paths) {
  if (report_paths.empty()) throw ConfigError("compare: need at least one report");
  std::vector<json> reports;
  for (const auto& path : report_paths) {
    require_exists(path, "report");
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    if (j.value("schema_version", -1) != kReportSchemaVersion)
      throw ConfigError(path + ": schema version mismatch");
    reports.push_back(std::move(j));
  }
  std::string csv =
      "report,effl,cov,den,hop,pr,lid,sep,sil_k5,rho,d_bar,var_ratio,vm_k10,icc_mean\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const json& r = reports[i];
    csv += csv_escape(report_paths[i]);
    csv += ',' + json_cell(r, {"item_stats", "effective_likert", "mean"});
    csv += ',' + json_cell(r, {"geometry", "model", "coverage", "value"});
    csv += ',' + json_cell(r, {"geometry", "model", "density", "value"});
    csv += ',' + json_cell(r, {"geometry", "model", "hopkins", "mean"});
    csv += ',' + json_cell(r, {"geometry", "model", "participation_ratio"});
    csv += ',' + json_cell(r, {"geometry", "model", "lid", "median"});
    csv += ',' + json_cell(r, {"geometry", "model", "separation", "mean_nn"});
    csv += ',' + cluster_cell(r, "matrix", 5, "silhouette");
    csv += ',' + json_cell(r, {"item_stats", "fidelity_spearman", "mean"});
    csv += ',' + json_cell(r, {"item_stats", "cohens_d", "mean_abs"});
    csv += ',' + json_cell(r, {"item_stats", "variance_ratio_item", "total"});
    csv += ',' + cluster_cell(r, "matrix", 10, "v");
    csv += ',' + json_cell(r, {"text", "icc", "mean"});
    csv += '\n';
  }
  return csv;
}

void run_prompts(const std::string& profiles_path, Instrument instrument,
                 const std::optional<std::string>& items_path, int samples,
                 const std::string& out_path) {
  const auto profiles = load_profiles(profiles_path);
  std::vector<std::string> items;
  if (instrument != Instrument::SelfIntro) {
    if (!items_path) throw ConfigError("instrument requires an items file");
    std::ifstream in(*items_path);
    if (!in) throw DataError("cannot open file: " + *items_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) items.push_back(line);
    }
    if (items.empty()) throw DataError(*items_path + ": no items");
  }
  if (samples < 1) throw ConfigError("samples must be >= 1");

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + out_path);
  for (const auto& profile : profiles) {
    const std::string description = render_persona_prompt(profile);
    if (instrument == Instrument::SelfIntro) {
      const auto prompts =
          render_instrument_prompt(instrument, {{"persona_description", description}});
      for (int s = 0; s < samples; ++s) {
        json rec = {{"persona_id", profile.persona_id},
                    {"sample", s},
                    {"system", prompts.system_text},
                    {"user", prompts.user_text}};
        out << rec.dump() << '\n';
      }
    } else {
      const char* slot = instrument == Instrument::Bfi ? "question_text" : "scenario";
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto prompts = render_instrument_prompt(
            instrument, {{"persona_description", description}, {slot, items[i]}});
        json rec = {{"persona_id", profile.persona_id},
                    {"item", i},
                    {"system", prompts.system_text},
                    {"user", prompts.user_text}};
        out << rec.dump() << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed: " + out_path);
}

}  // namespace popdiag
