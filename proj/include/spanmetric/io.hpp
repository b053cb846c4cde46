#pragma once

#include <string>
#include <vector>

namespace spanmetric::io {

std::string read_file(const std::string& path);

// Writes to "<path>.tmp.<pid>" and renames over path.
void atomic_write(const std::string& path, const std::string& contents);

// Lines without their terminators; a trailing empty line is dropped.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace spanmetric::io
