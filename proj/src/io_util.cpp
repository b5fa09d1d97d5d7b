#include "pkg/io_util.hpp"

#include <fstream>
#include <sstream>

#include "pkg/error.hpp"

namespace pkg {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) raise(ErrorCode::Io, "read failed: " + path);
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::Write, "cannot open file for writing: " + path);
  out << content;
  out.flush();
  if (!out) raise(ErrorCode::Write, "write failed: " + path);
}

}  // namespace pkg
