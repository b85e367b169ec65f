#pragma once

// Small generators shared by the property tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "drivesig/data.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"

namespace testing_helpers {

inline drivesig::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                      drivesig::SeededRng& rng, double lo = -1.0,
                                      double hi = 1.0) {
  drivesig::Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Drivers d0.. with `trips` trips each of `rows` rows; values unique per row.
inline drivesig::FrameTable random_table(std::size_t drivers, std::size_t trips,
                                         std::size_t rows, std::size_t features,
                                         drivesig::SeededRng& rng) {
  drivesig::FrameTable t;
  for (std::size_t f = 0; f < features; ++f) t.feature_names.push_back("f" + std::to_string(f));
  std::size_t serial = 0;
  for (std::size_t d = 0; d < drivers; ++d)
    for (std::size_t tr = 0; tr < trips; ++tr)
      for (std::size_t r = 0; r < rows; ++r) {
        drivesig::FrameRow row;
        row.driver_id = "d" + std::to_string(d);
        row.trip_id = row.driver_id + "_t" + std::to_string(tr);
        row.values.push_back(static_cast<double>(serial++));
        for (std::size_t f = 1; f < features; ++f) row.values.push_back(rng.uniform(-5.0, 5.0));
        t.rows.push_back(std::move(row));
      }
  return t;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("drivesig_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_helpers
