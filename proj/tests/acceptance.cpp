// Acceptance checks for the population-diagnostics toolkit. Each criterion
// prints exactly one PASS/FAIL line; the process exits nonzero if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "popdiag/cluster.hpp"
#include "popdiag/data.hpp"
#include "popdiag/geometry.hpp"
#include "popdiag/item_stats.hpp"
#include "popdiag/prompts.hpp"
#include "popdiag/report.hpp"
#include "popdiag/rng.hpp"
#include "popdiag/synth.hpp"
#include "popdiag/text.hpp"

using namespace popdiag;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) {
  return read_file(std::string(POPDIAG_GOLDEN_DIR) + "/" + name);
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: Hopkins statistic calibration on synthetic populations.
// Tolerances: uniform mean in [0.45, 0.55]; tight clusters > 0.80;
// 2-D lattice < 0.45; each population analyzed in under 10 seconds.
bool criterion_hopkins(std::string& detail) {
  SyntheticSpec spec;
  spec.n = 2000;
  spec.dim = 10;
  spec.seed = 11;
  spec.kind = SynthKind::UniformBox;
  auto t0 = std::chrono::steady_clock::now();
  const double h_uniform = hopkins(generate(spec).cloud, 20, 101).mean;
  const double s_uniform = elapsed_s(t0);

  spec.kind = SynthKind::GaussianClusters;
  spec.cluster_count = 5;
  spec.sigma = 0.01;
  t0 = std::chrono::steady_clock::now();
  const double h_clusters = hopkins(generate(spec).cloud, 20, 102).mean;
  const double s_clusters = elapsed_s(t0);

  spec.kind = SynthKind::Lattice;
  spec.dim = 2;
  spec.n = 2025;
  t0 = std::chrono::steady_clock::now();
  const double h_lattice = hopkins(generate(spec).cloud, 20, 103).mean;
  const double s_lattice = elapsed_s(t0);

  char buf[256];
  std::snprintf(buf, sizeof buf, "uniform=%.4f clusters=%.4f lattice=%.4f max_s=%.2f",
                h_uniform, h_clusters, h_lattice,
                std::max({s_uniform, s_clusters, s_lattice}));
  detail = buf;
  return h_uniform >= 0.45 && h_uniform <= 0.55 && h_clusters > 0.80 && h_lattice < 0.45 &&
         s_uniform < 10.0 && s_clusters < 10.0 && s_lattice < 10.0;
}

// ---------------------------------------------------------------------------
// Criterion 2: local intrinsic dimension recovers manifold dimension.
// Tolerances: median LID within +/-25% of the true dimension for
// d in {1, 2, 5, 10} (ambient 44, n = 2000, k = 20); d = 1 in [0.8, 1.3].
bool criterion_lid(std::string& detail) {
  bool ok = true;
  std::ostringstream ss;
  for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{10}}) {
    SyntheticSpec spec;
    spec.kind = SynthKind::EmbeddedManifold;
    spec.n = 2000;
    spec.dim = 44;
    spec.intrinsic_dim = d;
    spec.seed = 20 + d;
    const double median = lid(generate(spec).cloud, 20).median;
    ss << "d" << d << "=" << median << " ";
    ok = ok && median >= 0.75 * static_cast<double>(d) &&
         median <= 1.25 * static_cast<double>(d);
    if (d == 1) ok = ok && median >= 0.8 && median <= 1.3;
  }
  detail = ss.str();
  return ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: coverage/density equal an exhaustive closed-ball oracle.
// Tolerances: agreement to 1e-9 on populations with N <= 100 over several
// seeds; coverage(X, X, k) = 1 exactly; disjoint far-apart clouds give 0.
bool criterion_coverage(std::string& detail) {
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    Rng rng(seed, 0);
    const std::size_t n_gen = 60 + seed * 7, n_ref = 50 + seed * 9;
    Eigen::MatrixXd gen(n_gen, 3), ref(n_ref, 3);
    for (Eigen::Index i = 0; i < gen.rows(); ++i)
      for (Eigen::Index j = 0; j < 3; ++j) gen(i, j) = rng.next_gaussian();
    for (Eigen::Index i = 0; i < ref.rows(); ++i)
      for (Eigen::Index j = 0; j < 3; ++j) ref(i, j) = rng.next_gaussian();
    const PointCloud g{gen}, r{ref};
    for (int k : {1, 3, 5}) {
      // Oracle: closed k-NN balls around each reference point.
      std::vector<double> radius(n_ref);
      for (std::size_t i = 0; i < n_ref; ++i) {
        std::vector<double> dists;
        for (std::size_t j = 0; j < n_ref; ++j)
          if (j != i) dists.push_back((ref.row(i) - ref.row(j)).norm());
        std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
        radius[i] = dists[k - 1];
      }
      std::size_t covered = 0, memberships = 0;
      for (std::size_t i = 0; i < n_ref; ++i) {
        bool hit = false;
        for (std::size_t j = 0; j < n_gen; ++j) {
          if ((ref.row(i) - gen.row(j)).norm() <= radius[i]) {
            hit = true;
            ++memberships;
          }
        }
        covered += hit ? 1 : 0;
      }
      const double cov_oracle = static_cast<double>(covered) / static_cast<double>(n_ref);
      const double den_oracle =
          static_cast<double>(memberships) / (static_cast<double>(k) * n_gen);
      worst = std::max({worst, std::fabs(coverage(g, r, k) - cov_oracle),
                        std::fabs(density(g, r, k) - den_oracle)});
    }
    ok = ok && coverage(r, r, 5) == 1.0;
    const PointCloud far{ref.array() + 1e6};
    ok = ok && coverage(far, r, 5) == 0.0;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max_abs_diff=%.3g", worst);
  detail = buf;
  return ok && worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// Criterion 4: participation ratio limits.
// Tolerances: rank-1 cloud gives 1 within 1e-6; isotropic Gaussian cloud
// (n = 5000, dim = 8) gives a value in [7, 8].
bool criterion_pr(std::string& detail) {
  Rng rng(9, 0);
  Eigen::MatrixXd rank1(200, 6);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double t = rng.next_gaussian();
    for (Eigen::Index j = 0; j < 6; ++j) rank1(i, j) = t * (j + 1.0);
  }
  const double pr_rank1 = participation_ratio(PointCloud{rank1});

  Eigen::MatrixXd iso(5000, 8);
  for (Eigen::Index i = 0; i < iso.rows(); ++i)
    for (Eigen::Index j = 0; j < 8; ++j) iso(i, j) = rng.next_gaussian();
  const double pr_iso = participation_ratio(PointCloud{iso});

  char buf[128];
  std::snprintf(buf, sizeof buf, "rank1=%.8f isotropic=%.4f", pr_rank1, pr_iso);
  detail = buf;
  return std::fabs(pr_rank1 - 1.0) <= 1e-6 && pr_iso >= 7.0 && pr_iso <= 8.0;
}

// ---------------------------------------------------------------------------
// Criterion 5: item statistics match independent oracles.
// Tolerances: eta-squared and incremental R^2 agree with normal-equation /
// sum-of-squares oracles to 1e-6 on 50 seeded fixtures (N <= 200);
// R^2 increments telescope to the total within 1e-9; a uniform 5-level
// distribution has effective Likert count 5 to within 5e-7.
bool criterion_itemstats(std::string& detail) {
  double worst_eq = 0.0, worst_sum = 0.0;
  const std::vector<std::string> order{"A", "B", "C"};
  const std::vector<std::size_t> level_counts{3, 2, 4};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed, 3);
    const std::size_t n = 60 + rng.next_below(141);  // up to 200

    // eta-squared fixture: 4 random groups.
    GroupedSamples grouped;
    grouped.grouping_variable = "G";
    for (std::size_t i = 0; i < n; ++i) {
      const std::string g = "g" + std::to_string(rng.next_below(4));
      grouped.groups[g].push_back(rng.next_gaussian() + (g == "g0" ? 1.0 : 0.0));
    }
    double grand = 0.0;
    std::size_t total_n = 0;
    for (const auto& [_, vs] : grouped.groups) {
      for (double v : vs) grand += v;
      total_n += vs.size();
    }
    grand /= static_cast<double>(total_n);
    double ss_within = 0.0, ss_total = 0.0;
    for (const auto& [_, vs] : grouped.groups) {
      double gm = 0.0;
      for (double v : vs) gm += v;
      gm /= static_cast<double>(vs.size());
      for (double v : vs) {
        ss_within += (v - gm) * (v - gm);
        ss_total += (v - grand) * (v - grand);
      }
    }
    worst_eq = std::max(worst_eq,
                        std::fabs(eta_squared(grouped).value - (1.0 - ss_within / ss_total)));

    // Incremental R^2 fixture: 3 categorical attributes, noisy linear outcome.
    std::map<std::string, std::vector<std::string>> attributes;
    std::vector<double> outcome(n);
    std::vector<std::vector<std::size_t>> codes(order.size(), std::vector<std::size_t>(n));
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t i = 0; i < n; ++i) codes[a][i] = rng.next_below(level_counts[a]);
    for (std::size_t a = 0; a < order.size(); ++a) {
      auto& column = attributes[order[a]];
      for (std::size_t i = 0; i < n; ++i)
        column.push_back(order[a] + std::to_string(codes[a][i]));
    }
    for (std::size_t i = 0; i < n; ++i)
      outcome[i] = 1.5 * codes[0][i] + 0.7 * codes[1][i] - 0.4 * codes[2][i] +
                   0.8 * rng.next_gaussian();

    const auto result = incremental_r2(outcome, attributes, order);

    // Oracle: cumulative one-hot designs solved via normal equations.
    const double mean_y =
        std::accumulate(outcome.begin(), outcome.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0;
    for (double y : outcome) ss_tot += (y - mean_y) * (y - mean_y);
    std::vector<std::vector<double>> columns;  // grows as attributes are added
    double prev_r2 = 0.0;
    for (std::size_t a = 0; a < order.size(); ++a) {
      for (std::size_t level = 1; level < level_counts[a]; ++level) {
        std::vector<double> col(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          if (codes[a][i] == level) col[i] = 1.0;
        columns.push_back(std::move(col));
      }
      const std::size_t p = columns.size() + 1;
      Eigen::MatrixXd X(n, p);
      X.col(0).setOnes();
      for (std::size_t c = 0; c < columns.size(); ++c)
        for (std::size_t i = 0; i < n; ++i) X(i, c + 1) = columns[c][i];
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcome.data(), n);
      const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
      const double ss_res = (y - X * beta).squaredNorm();
      const double r2 = 1.0 - ss_res / ss_tot;
      worst_eq = std::max(worst_eq, std::fabs(result.increments[a] - (r2 - prev_r2)));
      prev_r2 = r2;
    }
    double sum_inc = 0.0;
    for (double inc : result.increments) sum_inc += inc;
    worst_sum = std::max(worst_sum, std::fabs(sum_inc - result.total));
  }

  // Uniform 5-level column: inverse Simpson index is exactly the level count.
  TraitMatrix uniform;
  uniform.persona_ids.resize(200);
  uniform.item_ids = {"item1"};
  uniform.scale = LikertScale{1, 5, 5};
  uniform.values.resize(200, 1);
  for (int i = 0; i < 200; ++i) {
    uniform.persona_ids[i] = "p" + std::to_string(i);
    uniform.values(i, 0) = 1.0 + (i % 5);
  }
  const double effl = effective_likert(item_distribution(uniform, 0));

  char buf[160];
  std::snprintf(buf, sizeof buf, "max_oracle_diff=%.3g max_sum_diff=%.3g effl=%.6f", worst_eq,
                worst_sum, effl);
  detail = buf;
  return worst_eq <= 1e-6 && worst_sum <= 1e-9 && std::fabs(effl - 5.0) <= 5e-7;
}

// ---------------------------------------------------------------------------
// Criterion 6: V-Measure calibration.
// Tolerances: identical labelings give 1 within 1e-9; a single cluster gives
// 0; random clusterings vs random labels (n = 1000, 20 seeds) average below
// 0.05; agreement with a contingency-entropy oracle within 1e-9.
bool criterion_vmeasure(std::string& detail) {
  LabelVector identity;
  std::vector<int> identity_clusters;
  for (int i = 0; i < 50; ++i) {
    identity.push_back("L" + std::to_string(i % 5));
    identity_clusters.push_back(i % 5);
  }
  const double v_identity = v_measure(identity_clusters, identity).v;
  const double v_single = v_measure(std::vector<int>(50, 0), identity).v;

  double sum_random = 0.0, worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed, 8);
    const std::size_t n = 1000;
    std::vector<int> clusters(n);
    LabelVector labels;
    for (std::size_t i = 0; i < n; ++i) {
      clusters[i] = static_cast<int>(rng.next_below(10));
      labels.push_back("L" + std::to_string(rng.next_below(5)));
    }
    const auto result = v_measure(clusters, labels);
    sum_random += result.v;

    // Oracle from contingency-table entropies (natural log).
    std::map<std::pair<int, std::string>, double> joint;
    std::map<int, double> pc;
    std::map<std::string, double> pl;
    for (std::size_t i = 0; i < n; ++i) {
      joint[std::make_pair(clusters[i], labels[i])] += 1.0 / n;
      pc[clusters[i]] += 1.0 / n;
      pl[labels[i]] += 1.0 / n;
    }
    double h_l = 0.0, h_c = 0.0, h_l_given_c = 0.0, h_c_given_l = 0.0;
    for (const auto& [_, p] : pl) h_l -= p * std::log(p);
    for (const auto& [_, p] : pc) h_c -= p * std::log(p);
    for (const auto& [key, p] : joint) {
      h_l_given_c -= p * std::log(p / pc[key.first]);
      h_c_given_l -= p * std::log(p / pl[key.second]);
    }
    const double hom = h_l == 0.0 ? 1.0 : 1.0 - h_l_given_c / h_l;
    const double com = h_c == 0.0 ? 1.0 : 1.0 - h_c_given_l / h_c;
    const double v_oracle = (hom + com) == 0.0 ? 0.0 : 2.0 * hom * com / (hom + com);
    worst = std::max(worst, std::fabs(result.v - v_oracle));
  }
  const double mean_random = sum_random / 20.0;

  char buf[160];
  std::snprintf(buf, sizeof buf, "identity=%.12f single=%.3f random_mean=%.4f oracle_diff=%.3g",
                v_identity, v_single, mean_random, worst);
  detail = buf;
  return std::fabs(v_identity - 1.0) <= 1e-9 && v_single == 0.0 && mean_random < 0.05 &&
         worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// Criterion 7: text diagnostics against hand-tallied goldens.
// Tolerances: the opening-skeleton golden is byte-exact; mention rates on a
// 20-text corpus equal the hand tally exactly; a correct mention always
// implies an any-value mention.
bool criterion_text(std::string& detail) {
  const bool skeleton_ok =
      opening_skeleton("Hi, I'm John, 42 years old.") == "hi, i'm [NAME], [NUM] years old.";

  const KeywordLexicon lexicon =
      load_lexicon(std::string(POPDIAG_FIXTURE_DIR) + "/lexicon.json");
  std::vector<PersonaProfile> profiles(4);
  profiles[0].persona_id = "A";
  profiles[0].attributes = {{"Country", "France"}, {"Gender", "Female"}};
  profiles[1].persona_id = "B";
  profiles[1].attributes = {{"Country", "India"}, {"Gender", "Male"}};
  profiles[2].persona_id = "C";
  profiles[2].attributes = {{"Country", "Brazil"}, {"Gender", "Non-binary"}};
  profiles[3].persona_id = "D";
  profiles[3].attributes = {{"Country", "United States"}, {"Gender", "Female"}};

  const std::vector<std::pair<std::string, std::string>> texts{
      {"A", "I grew up in Paris and love its cafes by evening light."},
      {"A", "My mother was a nurse and I admire women like her dearly."},
      {"A", "Baguettes from my local bakery remind me of France every single morning."},
      {"A", "Weekends are quiet and I enjoy reading novels in small parks."},
      {"A", "My sister visits me and we speak french over dinner together."},
      {"B", "I moved from Delhi to Mumbai for work in finance last year."},
      {"B", "My father taught me cricket when I was a young boy at school."},
      {"B", "Namaste is how I greet neighbors and elders every morning."},
      {"B", "He said my code was clean and it made my whole week."},
      {"B", "Hindi songs play in our home while we cook dinner most evenings."},
      {"C", "Carnival in Rio is loud and joyful and I dance all night."},
      {"C", "They always welcome newcomers and them being kind helps everyone settle."},
      {"C", "I speak portuguese with my grandmother and we laugh a lot."},
      {"C", "Sao Paulo traffic is rough but its food makes up for it."},
      {"C", "Friends describe me as calm and they say my cooking is generous."},
      {"D", "I drove across Texas and California on a road trip last summer."},
      {"D", "She and her wife run a bakery near my street in Chicago."},
      {"D", "New York winters are harsh but summer evenings feel warm and alive."},
      {"D", "My daughter loves painting and fills our walls with bright colors."},
      {"D", "Quiet mornings with coffee and a book keep me happy and steady."}};

  TextCorpus corpus;
  int sample = 0;
  for (const auto& [pid, text] : texts) {
    TextEntry entry;
    entry.persona_id = pid;
    entry.sample_index = sample++;
    entry.raw_text = text;
    entry.valid = true;
    corpus.entries.push_back(entry);
  }

  // Correct mentions always imply any-value mentions.
  bool implication_ok = true;
  std::map<std::string, const PersonaProfile*> by_id;
  for (const auto& p : profiles) by_id[p.persona_id] = &p;
  for (const auto& entry : corpus.entries) {
    const auto result = detect_mentions(entry.raw_text, *by_id[entry.persona_id], lexicon);
    for (const auto& [_, flags] : result.per_dimension)
      if (flags.correct_mention && !flags.any_mention) implication_ok = false;
  }

  // Hand tally over the 20 texts above: Country correct 12/20 (any likewise);
  // Gender correct 8/20, any 9/20 ("grandmother" carries both "mother" and a
  // trailing "her "; "she " also contains the guarded male keyword "he ").
  const auto rates = mention_rates(corpus, profiles, lexicon);
  const bool rates_ok = rates.texts_used == 20 &&
                        std::fabs(rates.correct.at("Country") - 0.60) <= 1e-12 &&
                        std::fabs(rates.any.at("Country") - 0.60) <= 1e-12 &&
                        std::fabs(rates.correct.at("Gender") - 0.40) <= 1e-12 &&
                        std::fabs(rates.any.at("Gender") - 0.45) <= 1e-12 &&
                        std::fabs(rates.mean_correct - 0.50) <= 1e-12;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "skeleton=%d country=%.2f/%.2f gender=%.2f/%.2f implication=%d", skeleton_ok,
                rates.correct.at("Country"), rates.any.at("Country"),
                rates.correct.at("Gender"), rates.any.at("Gender"), implication_ok);
  detail = buf;
  return skeleton_ok && rates_ok && implication_ok;
}

// ---------------------------------------------------------------------------
// Criterion 8: prompt rendering is byte-identical to the frozen golden files.
bool criterion_prompts(std::string& detail) {
  PersonaProfile profile;
  profile.persona_id = "p1";
  profile.attributes = {{"Age group", "Young adulthood"},
                        {"Country", "France"},
                        {"Gender", "Female"}};
  const std::string description = render_persona_prompt(profile);
  bool ok = description == golden("persona_description.txt");

  const auto bfi = render_instrument_prompt(
      Instrument::Bfi,
      {{"persona_description", description}, {"question_text", "is talkative."}});
  ok = ok && bfi.system_text == golden("bfi_system.txt") &&
       bfi.user_text == golden("bfi_user.txt");

  const auto moral = render_instrument_prompt(
      Instrument::Moral,
      {{"persona_description", description},
       {"scenario",
        "My neighbor plays loud music at night and I reported them to the landlord."}});
  ok = ok && moral.system_text == golden("moral_system.txt") &&
       moral.user_text == golden("moral_user.txt");

  const auto intro =
      render_instrument_prompt(Instrument::SelfIntro, {{"persona_description", description}});
  ok = ok && intro.system_text == golden("self_intro_system.txt") &&
       intro.user_text == golden("self_intro_user.txt");

  detail = ok ? "all templates byte-identical" : "golden mismatch";
  return ok;
}

// ---------------------------------------------------------------------------
// Criterion 9: the diagnose pipeline is deterministic and fast.
// Tolerances: two runs with the same seed over a full synthetic bundle
// (n = 2000, D = 44) produce byte-identical report.json in under 60 s each.
bool criterion_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "popdiag_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SyntheticSpec spec;
  spec.kind = SynthKind::LikertQuantized;
  spec.n = 2000;
  spec.dim = 44;
  spec.seed = 31;
  spec.scale = LikertScale{1, 5, 5};
  const auto synth = generate(spec);
  save_matrix_csv(*synth.matrix, (dir / "matrix.csv").string());

  const std::vector<std::string> genders{"Female", "Male", "Non-binary"};
  const std::vector<std::string> countries{"France", "India", "Brazil", "United States"};
  Rng rng(32, 0);
  {
    std::ofstream out(dir / "profiles.jsonl");
    for (std::size_t i = 0; i < spec.n; ++i) {
      json rec;
      rec["persona_id"] = synth.matrix->persona_ids[i];
      rec["attributes"] = {{"Gender", genders[rng.next_below(genders.size())]},
                           {"Country", countries[rng.next_below(countries.size())]},
                           {"Social class", "Middle class"},
                           {"Political ideology", "Left Liberal"}};
      out << rec.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir / "text.jsonl");
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (int s = 0; s < 2; ++s) {
        json rec;
        rec["persona_id"] = synth.matrix->persona_ids[i];
        rec["sample"] = s;
        rec["text"] = "Hello, I value calm routines and honest conversations. Sample " +
                      std::to_string(s) + " from respondent " + std::to_string(i) + ".";
        out << rec.dump() << "\n";
      }
    }
  }
  {
    std::ofstream out(dir / "embeddings.jsonl");
    Rng erng(33, 0);
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (int s = 0; s < 2; ++s) {
        json rec;
        rec["persona_id"] = synth.matrix->persona_ids[i];
        rec["sample"] = s;
        std::vector<double> vec(8);
        for (auto& v : vec) v = erng.next_gaussian();
        rec["vector"] = vec;
        out << rec.dump() << "\n";
      }
    }
  }

  RunConfig config;
  config.matrix =
      MatrixInput{(dir / "matrix.csv").string(), MatrixFormat::Csv, LikertScale{1, 5, 5}};
  config.profiles_path = (dir / "profiles.jsonl").string();
  config.text_path = (dir / "text.jsonl").string();
  config.embeddings_path = (dir / "embeddings.jsonl").string();
  config.lexicon_path = std::string(POPDIAG_FIXTURE_DIR) + "/lexicon.json";
  config.seed = 7;
  config.geometry.seed = 7;

  config.out_dir = (dir / "out1").string();
  auto t0 = std::chrono::steady_clock::now();
  const std::string first = run_diagnose(config);
  const double s1 = elapsed_s(t0);
  config.out_dir = (dir / "out2").string();
  t0 = std::chrono::steady_clock::now();
  const std::string second = run_diagnose(config);
  const double s2 = elapsed_s(t0);
  fs::remove_all(dir);

  char buf[128];
  std::snprintf(buf, sizeof buf, "identical=%d run1=%.1fs run2=%.1fs", first == second, s1, s2);
  detail = buf;
  return first == second && s1 < 60.0 && s2 < 60.0;
}

// ---------------------------------------------------------------------------
// Criterion 10: factor scoring identities.
// Tolerances: an all-midpoint matrix scores the scale midpoint on every
// factor exactly; pre-reversing reversed items yields identical scores on
// 100 random matrices (agreement to 1e-12).
bool criterion_scoring(std::string& detail) {
  const FactorKey key = load_factor_key(std::string(POPDIAG_FIXTURE_DIR) + "/bfi44_key.json");
  const double midpoint = 0.5 * (key.scale_min + key.scale_max);

  TraitMatrix matrix;
  matrix.scale = LikertScale{key.scale_min, key.scale_max, 5};
  for (const auto& [_, items] : key.factors)
    for (const auto& item : items) matrix.item_ids.push_back(item.item_id);
  std::sort(matrix.item_ids.begin(), matrix.item_ids.end());
  const std::size_t n = 40, d = matrix.item_ids.size();
  for (std::size_t i = 0; i < n; ++i) matrix.persona_ids.push_back("p" + std::to_string(i));
  matrix.values = Eigen::MatrixXd::Constant(n, d, midpoint);

  const TraitMatrix mid_scores = score_factors(matrix, key);
  bool midpoint_ok = true;
  for (Eigen::Index i = 0; i < mid_scores.values.rows(); ++i)
    for (Eigen::Index j = 0; j < mid_scores.values.cols(); ++j)
      if (mid_scores.values(i, j) != midpoint) midpoint_ok = false;

  // Flipping every reversed flag and pre-reversing those columns is a no-op.
  FactorKey flipped = key;
  for (auto& [_, items] : flipped.factors)
    for (auto& item : items) item.reversed = !item.reversed;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed, 5);
    TraitMatrix random = matrix;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        random.values(i, j) = 1.0 + static_cast<double>(rng.next_below(5));
    // With every flag flipped, each item's effective transform changes by one
    // application of reverse(); pre-reversing every column compensates.
    TraitMatrix pre = random;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < n; ++i) pre.values(i, j) = key.reverse(pre.values(i, j));
    const TraitMatrix a = score_factors(random, key);
    const TraitMatrix b = score_factors(pre, flipped);
    worst = std::max(worst, (a.values - b.values).cwiseAbs().maxCoeff());
  }

  char buf[128];
  std::snprintf(buf, sizeof buf, "midpoint_exact=%d max_diff=%.3g", midpoint_ok, worst);
  detail = buf;
  return midpoint_ok && worst <= 1e-12;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<bool(std::string&)>>> criteria{
      {"hopkins calibration (uniform 0.45-0.55, clusters >0.80, lattice <0.45, <10s each)",
       criterion_hopkins},
      {"lid recovers intrinsic dimension (median within 25% for d=1,2,5,10)", criterion_lid},
      {"coverage/density match exhaustive oracle (1e-9; self=1, disjoint=0)",
       criterion_coverage},
      {"participation ratio (rank-1 = 1 +/- 1e-6; isotropic 8-d in [7,8])", criterion_pr},
      {"item statistics match oracles (1e-6; increments telescope 1e-9; uniform EffL=5)",
       criterion_itemstats},
      {"v-measure calibration (identity 1 +/- 1e-9; single 0; random mean <0.05; oracle 1e-9)",
       criterion_vmeasure},
      {"text goldens (skeleton masking; hand-tallied mention rates; correct implies any)",
       criterion_text},
      {"prompt templates byte-identical to goldens", criterion_prompts},
      {"diagnose determinism (byte-identical reports, <60s at n=2000 D=44)",
       criterion_determinism},
      {"factor scoring (midpoint identity; reversal self-consistency on 100 matrices)",
       criterion_scoring}};

  int failures = 0;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %2d: %s [%s]\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
    ++index;
  }
  return failures == 0 ? 0 : 1;
}
