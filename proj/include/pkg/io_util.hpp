#pragma once

#include <string>

namespace pkg {

/// Whole-file read; missing/unreadable path raises IoError.
std::string read_file(const std::string& path);

/// Plain overwrite; failures raise WriteError.
void write_file(const std::string& path, const std::string& content);

}  // namespace pkg
