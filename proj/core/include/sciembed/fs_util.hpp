#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sciembed {

// Replace `path` with `contents` atomically (write sibling temp file, rename).
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace sciembed
