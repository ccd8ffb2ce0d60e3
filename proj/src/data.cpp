#include "popdiag/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "popdiag/errors.hpp"

namespace popdiag {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  check_internal(ec == std::errc(), "format_double: to_chars failed");
  return std::string(buf, ptr);
}

std::size_t TraitMatrix::item_index(const std::string& item_id) const {
  auto it = std::find(item_ids.begin(), item_ids.end(), item_id);
  if (it == item_ids.end()) throw DataError("unknown item id: " + item_id);
  return static_cast<std::size_t>(it - item_ids.begin());
}

const std::string* PersonaProfile::find_attribute(const std::string& dim) const {
  for (const auto& [name, value] : attributes) {
    if (name == dim) return &value;
  }
  return nullptr;
}

const std::vector<std::pair<std::string, std::vector<Keyword>>>* KeywordLexicon::find_dimension(
    const std::string& dim) const {
  for (const auto& [name, values] : dimensions) {
    if (name == dim) return &values;
  }
  return nullptr;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_number(const std::string& field, const std::string& context) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw DataError(context + ": not a number: '" + field + "'");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

void validate_matrix(TraitMatrix& m, const std::string& path) {
  if (m.persona_ids.empty() || m.item_ids.empty())
    throw DataError(path + ": matrix must have at least one row and one column");
  std::set<std::string> seen;
  for (const auto& id : m.persona_ids) {
    if (!seen.insert(id).second) throw DataError(path + ": duplicate persona_id '" + id + "'");
  }
  std::set<std::string> items(m.item_ids.begin(), m.item_ids.end());
  if (items.size() != m.item_ids.size()) throw DataError(path + ": duplicate item id");
  if (m.scale) {
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
        const double v = m.values(r, c);
        if (!(v >= m.scale->min && v <= m.scale->max)) {
          throw DataError(path + ": value " + format_double(v) + " out of scale at row '" +
                          m.persona_ids[static_cast<std::size_t>(r)] + "', column '" +
                          m.item_ids[static_cast<std::size_t>(c)] + "'");
        }
      }
    }
  }
}

TraitMatrix load_matrix_csv(const std::string& path, std::optional<LikertScale> scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "persona_id")
    throw DataError(path + ": header must start with 'persona_id' and at least one item column");

  TraitMatrix m;
  m.scale = scale;
  m.item_ids.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    m.persona_ids.push_back(fields[0]);
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty())
        throw DataError(path + ":" + std::to_string(line_no) + ": missing value in column '" +
                        m.item_ids[i - 1] + "'");
      row.push_back(parse_number(fields[i], path + ":" + std::to_string(line_no)));
    }
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.item_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  validate_matrix(m, path);
  return m;
}

TraitMatrix load_matrix_jsonl(const std::string& path, std::optional<LikertScale> scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  TraitMatrix m;
  m.scale = scale;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.contains("persona_id") || !rec["persona_id"].is_string())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing persona_id");
    if (!rec.contains("responses") || !rec["responses"].is_object())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing responses object");
    m.persona_ids.push_back(rec["persona_id"].get<std::string>());
    if (m.item_ids.empty()) {
      for (auto it = rec["responses"].begin(); it != rec["responses"].end(); ++it)
        m.item_ids.push_back(it.key());
      std::sort(m.item_ids.begin(), m.item_ids.end());
    }
    std::vector<double> row(m.item_ids.size());
    for (std::size_t c = 0; c < m.item_ids.size(); ++c) {
      auto it = rec["responses"].find(m.item_ids[c]);
      if (it == rec["responses"].end() || !it->is_number())
        throw DataError(path + ":" + std::to_string(line_no) + ": missing value for item '" +
                        m.item_ids[c] + "'");
      row[c] = it->get<double>();
    }
    if (rec["responses"].size() != m.item_ids.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": extraneous item in responses");
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.item_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  validate_matrix(m, path);
  return m;
}

}  // namespace

TraitMatrix load_matrix(const std::string& path, MatrixFormat format,
                        std::optional<LikertScale> scale) {
  return format == MatrixFormat::Csv ? load_matrix_csv(path, scale)
                                     : load_matrix_jsonl(path, scale);
}

void save_matrix_csv(const TraitMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "persona_id";
  for (const auto& id : m.item_ids) out << ',' << id;
  out << '\n';
  for (std::size_t r = 0; r < m.n(); ++r) {
    out << m.persona_ids[r];
    for (std::size_t c = 0; c < m.d(); ++c)
      out << ',' << format_double(m.values(static_cast<Eigen::Index>(r),
                                           static_cast<Eigen::Index>(c)));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<PersonaProfile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<PersonaProfile> profiles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.contains("persona_id") || !rec["persona_id"].is_string())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing persona_id");
    PersonaProfile p;
    p.persona_id = rec["persona_id"].get<std::string>();
    if (rec.contains("attributes")) {
      if (!rec["attributes"].is_object())
        throw DataError(path + ":" + std::to_string(line_no) + ": attributes must be an object");
      for (auto it = rec["attributes"].begin(); it != rec["attributes"].end(); ++it) {
        for (const auto& [dim, _] : p.attributes) {
          if (dim == it.key())
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate dimension '" +
                            it.key() + "'");
        }
        p.attributes.emplace_back(it.key(), it->is_string() ? it->get<std::string>() : it->dump());
      }
    }
    if (rec.contains("assigned_traits")) {
      for (auto it = rec["assigned_traits"].begin(); it != rec["assigned_traits"].end(); ++it) {
        const std::string level = it->get<std::string>();
        if (level != "Low" && level != "Medium" && level != "High")
          throw DataError(path + ":" + std::to_string(line_no) +
                          ": assigned trait level must be Low/Medium/High, got '" + level + "'");
        p.assigned_traits[it.key()] = level;
      }
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

FactorKey load_factor_key(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  FactorKey key;
  if (!j.contains("scale") || !j["scale"].is_array() || j["scale"].size() != 2)
    throw DataError(path + ": factor key needs \"scale\": [min, max]");
  key.scale_min = j["scale"][0].get<double>();
  key.scale_max = j["scale"][1].get<double>();
  if (!j.contains("factors") || !j["factors"].is_object())
    throw DataError(path + ": factor key needs a \"factors\" object");
  std::set<std::string> seen_items;
  for (auto it = j["factors"].begin(); it != j["factors"].end(); ++it) {
    std::vector<FactorItem> items;
    for (const auto& entry : *it) {
      FactorItem fi;
      fi.item_id = entry.at("item").get<std::string>();
      fi.reversed = entry.value("reversed", false);
      if (!seen_items.insert(fi.item_id).second)
        throw DataError(path + ": item '" + fi.item_id + "' appears in more than one factor");
      items.push_back(std::move(fi));
    }
    key.factors.emplace_back(it.key(), std::move(items));
  }
  return key;
}

KeywordLexicon load_lexicon(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  KeywordLexicon lex;
  for (auto dim = j.begin(); dim != j.end(); ++dim) {
    std::vector<std::pair<std::string, std::vector<Keyword>>> values;
    for (auto val = dim->begin(); val != dim->end(); ++val) {
      std::vector<Keyword> kws;
      for (const auto& raw : *val) {
        Keyword kw;
        kw.text = raw.get<std::string>();
        if (kw.text.empty()) throw DataError(path + ": empty keyword under '" + dim.key() + "'");
        // A trailing space in the fixture marks a word-boundary-guarded match.
        if (kw.text.back() == ' ') {
          kw.trailing_space = true;
          kw.text.pop_back();
        }
        for (char c : kw.text) {
          if (c >= 'A' && c <= 'Z')
            throw DataError(path + ": keyword '" + kw.text + "' must be lowercase");
        }
        kws.push_back(std::move(kw));
      }
      if (kws.empty()) throw DataError(path + ": empty keyword list under '" + dim.key() + "'");
      values.emplace_back(val.key(), std::move(kws));
    }
    lex.dimensions.emplace_back(dim.key(), std::move(values));
  }
  return lex;
}

const std::vector<std::string> kDefaultErrorMarkers = {"I'm sorry", "ERROR", "[error"};

namespace {

std::size_t count_words(const std::string& text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_word) ++count;
    in_word = !ws;
  }
  return count;
}

}  // namespace

TextCorpus load_text_corpus(const std::string& path,
                            const std::vector<std::string>& error_markers) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  TextCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    TextEntry entry;
    if (!rec.contains("persona_id") || !rec["persona_id"].is_string())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing persona_id");
    entry.persona_id = rec["persona_id"].get<std::string>();
    entry.sample_index = rec.value("sample", 0);
    entry.raw_text = rec.value("text", std::string());
    bool error_marked = false;
    for (const auto& marker : error_markers) {
      if (entry.raw_text.rfind(marker, 0) == 0) error_marked = true;
    }
    entry.valid =
        entry.raw_text.size() >= 20 && count_words(entry.raw_text) >= 5 && !error_marked;
    if (entry.raw_text.size() > 5000) entry.raw_text.resize(5000);
    corpus.entries.push_back(std::move(entry));
  }
  return corpus;
}

TraitMatrix score_factors(const TraitMatrix& matrix, const FactorKey& key) {
  if (!matrix.scale) throw DataError("score_factors requires a Likert scale on the matrix");
  TraitMatrix scores;
  scores.persona_ids = matrix.persona_ids;
  scores.values.resize(static_cast<Eigen::Index>(matrix.n()),
                       static_cast<Eigen::Index>(key.factors.size()));
  for (std::size_t f = 0; f < key.factors.size(); ++f) {
    const auto& [name, items] = key.factors[f];
    scores.item_ids.push_back(name);
    if (items.empty()) throw DataError("factor '" + name + "' has no items");
    std::vector<std::pair<std::size_t, bool>> cols;
    for (const auto& item : items) cols.emplace_back(matrix.item_index(item.item_id), item.reversed);
    for (std::size_t r = 0; r < matrix.n(); ++r) {
      double sum = 0.0;
      for (const auto& [c, reversed] : cols) {
        const double v = matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        sum += reversed ? key.reverse(v) : v;
      }
      scores.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          sum / static_cast<double>(cols.size());
    }
  }
  return scores;
}

PopulationBundle make_bundle(TraitMatrix matrix, std::vector<PersonaProfile> profiles,
                             std::optional<FactorKey> key) {
  std::set<std::string> matrix_ids(matrix.persona_ids.begin(), matrix.persona_ids.end());
  std::set<std::string> profile_ids;
  for (const auto& p : profiles) profile_ids.insert(p.persona_id);
  if (matrix_ids != profile_ids)
    throw DataError("profile persona_ids do not match matrix persona_ids");
  PopulationBundle bundle;
  bundle.matrix = std::move(matrix);
  bundle.profiles = std::move(profiles);
  bundle.factor_key = std::move(key);
  return bundle;
}

}  // namespace popdiag
