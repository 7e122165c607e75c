#pragma once

#include <string>

namespace mvf {

// creates dir (and parents) if needed; throws std::runtime_error on I/O failure
void write_file(const std::string& dir, const std::string& name, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace mvf
