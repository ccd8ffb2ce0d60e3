#pragma once

#include <fstream>
#include <sstream>
#include <string>

inline std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string golden_path(const std::string& name) {
  return std::string(POPDIAG_GOLDEN_DIR) + "/" + name;
}

inline std::string fixture_path(const std::string& name) {
  return std::string(POPDIAG_FIXTURE_DIR) + "/" + name;
}
