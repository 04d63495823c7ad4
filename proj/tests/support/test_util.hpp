#pragma once
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>

// shared helpers for locating fixtures and scratch space

namespace vrplab::testing {

inline std::string data_dir() {
  if (const char* p = std::getenv("VRPLAB_DATA"); p && *p) return p;
  namespace fs = std::filesystem;
  fs::path d = fs::current_path();
  for (int i = 0; i < 6; ++i) {
    if (fs::exists(d / "data" / "scaling")) return (d / "data").string();
    if (!d.has_parent_path() || d.parent_path() == d) break;
    d = d.parent_path();
  }
  throw std::runtime_error("VRPLAB_DATA not set and no data/ directory found");
}

inline std::string tmp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace vrplab::testing
