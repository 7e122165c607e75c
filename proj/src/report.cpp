#include "mvf/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mvf {

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  const auto p = std::filesystem::path(dir) / name;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace mvf
