#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace noma::tool {

// Fixed numeric format for every CSV artifact: 6 significant digits.
// Identical inputs must give byte-identical files.
std::string fmt(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string checksum_hex(std::string_view bytes);

// Quotes a field when it contains a comma, quote or newline; free-form
// status text can carry solver diagnostics.
std::string csv_field(std::string_view v);

// Persists a run's artifacts under one directory and remembers each file's
// checksum so the manifest can list them afterwards.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::string dir);  // creates the directory if missing

  // Writes `bytes` to dir/name and returns the full path.
  std::string write(const std::string& name, const std::string& bytes);

  const std::string& dir() const { return dir_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> entries_;  // name, checksum
};

}  // namespace noma::tool
