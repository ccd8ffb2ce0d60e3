// popdiag command-line front end. Operations go through the C API only; this
// file owns argument handling and nothing else.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "popdiag/popdiag_c.h"

namespace {

constexpr size_t kErrLen = 1024;

int report_result(int rc, const char* err) {
  if (rc != POPDIAG_OK) std::fprintf(stderr, "error: %s\n", err);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population collapse diagnostics for persona-conditioned samples"};
  app.require_subcommand(1);
  app.set_version_flag("--version", popdiag_version());

  char err[kErrLen] = {0};

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Run the full diagnostic pipeline");
  std::string diag_config;
  std::string diag_out;
  std::optional<std::uint64_t> diag_seed;
  diagnose->add_option("--config", diag_config, "Run config JSON")->required();
  diagnose->add_option("--out", diag_out, "Output directory (overrides config)");
  diagnose->add_option("--seed", diag_seed, "Seed (overrides config)");

  // compare
  auto* compare = app.add_subcommand("compare", "Tabulate metrics across report.json files");
  std::vector<std::string> compare_reports;
  std::string compare_out;
  compare->add_option("reports", compare_reports, "report.json paths")->required();
  compare->add_option("--out", compare_out, "Output CSV path")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic population CSV");
  std::string synth_kind;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  std::size_t synth_n = 100;
  std::size_t synth_dim = 2;
  std::size_t synth_clusters = 5;
  double synth_sigma = 0.05;
  std::size_t synth_intrinsic = 1;
  std::vector<double> synth_scale;
  synth->add_option("--kind", synth_kind,
                    "uniform_box | gaussian_clusters | lattice | embedded_manifold | "
                    "likert_quantized")
      ->required();
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--n", synth_n, "Point count");
  synth->add_option("--dim", synth_dim, "Ambient dimension");
  synth->add_option("--clusters", synth_clusters, "Cluster count (gaussian_clusters)");
  synth->add_option("--sigma", synth_sigma, "Cluster sd as a fraction of the box diagonal");
  synth->add_option("--intrinsic-dim", synth_intrinsic, "Latent dimension (embedded_manifold)");
  synth->add_option("--scale", synth_scale, "min max levels (likert_quantized)")
      ->expected(3);

  // prompts
  auto* prompts = app.add_subcommand("prompts", "Emit a prompt batch JSONL");
  std::string prompts_profiles;
  std::string prompts_instrument;
  std::string prompts_items;
  std::string prompts_out;
  int prompts_samples = 1;
  prompts->add_option("--profiles", prompts_profiles, "Persona profiles JSONL")->required();
  prompts->add_option("--instrument", prompts_instrument, "bfi | moral | self_intro")
      ->required();
  prompts->add_option("--items", prompts_items, "Item text file (one per line)");
  prompts->add_option("--samples", prompts_samples, "Samples per persona (self_intro)");
  prompts->add_option("--out", prompts_out, "Output JSONL path")->required();

  // text: diagnose restricted to text inputs, for corpora without a matrix
  auto* text = app.add_subcommand("text", "Run only the text diagnostics");
  std::string text_config;
  std::string text_out;
  std::optional<std::uint64_t> text_seed;
  text->add_option("--config", text_config, "Run config JSON (text inputs only)")->required();
  text->add_option("--out", text_out, "Output directory (overrides config)");
  text->add_option("--seed", text_seed, "Seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : POPDIAG_ERR_CONFIG;
  }

  if (diagnose->parsed()) {
    std::uint64_t seed = diag_seed.value_or(0);
    return report_result(
        popdiag_diagnose(diag_config.c_str(), diag_out.empty() ? nullptr : diag_out.c_str(),
                         diag_seed ? &seed : nullptr, err, kErrLen),
        err);
  }
  if (compare->parsed()) {
    std::vector<const char*> paths;
    for (const auto& p : compare_reports) paths.push_back(p.c_str());
    return report_result(popdiag_compare(paths.data(), paths.size(), compare_out.c_str(),
                                         err, kErrLen),
                         err);
  }
  if (synth->parsed()) {
    nlohmann::json spec = {{"kind", synth_kind}, {"n", synth_n},     {"dim", synth_dim},
                           {"seed", synth_seed}, {"clusters", synth_clusters},
                           {"sigma", synth_sigma}, {"intrinsic_dim", synth_intrinsic}};
    if (!synth_scale.empty())
      spec["scale"] = {synth_scale[0], synth_scale[1],
                       static_cast<int>(synth_scale[2])};
    return report_result(
        popdiag_synth(spec.dump().c_str(), synth_out.c_str(), err, kErrLen), err);
  }
  if (prompts->parsed()) {
    return report_result(popdiag_prompts(prompts_profiles.c_str(), prompts_instrument.c_str(),
                                         prompts_items.empty() ? nullptr : prompts_items.c_str(),
                                         prompts_samples, prompts_out.c_str(), err, kErrLen),
                         err);
  }
  if (text->parsed()) {
    std::uint64_t seed = text_seed.value_or(0);
    return report_result(
        popdiag_diagnose(text_config.c_str(), text_out.empty() ? nullptr : text_out.c_str(),
                         text_seed ? &seed : nullptr, err, kErrLen),
        err);
  }
  return POPDIAG_ERR_CONFIG;
}
