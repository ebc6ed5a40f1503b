#include "artifacts.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "noma/errors.hpp"

namespace noma::tool {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string checksum_hex(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ArtifactSink::ArtifactSink(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ParseError("cannot create output directory " + dir_ + ": " + ec.message());
}

std::string ArtifactSink::write(const std::string& name, const std::string& bytes) {
  std::string path = (std::filesystem::path(dir_) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << bytes;
  out.close();
  if (!out) throw ParseError("write failed: " + path);
  entries_.emplace_back(name, checksum_hex(bytes));
  return path;
}

}  // namespace noma::tool
