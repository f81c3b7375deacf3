#include "chronocl/textio.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chronocl {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open file for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open file for writing: " + path.string());
  out << text;
  if (!out)
    throw std::runtime_error("write failed: " + path.string());
}

}  // namespace chronocl
