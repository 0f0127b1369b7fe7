/*
 Copyright 2026 The hjlss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef HJLSS_IO_HPP
#define HJLSS_IO_HPP

// Binary containers: 8-byte magic, little-endian u64 header length, a JSON
// header, a little-endian u64 element count and a blob of little-endian
// IEEE-754 doubles.

#include "hjlss/core.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <vector>

namespace hjlss {

using json = nlohmann::json;

namespace detail {

inline void put_u64(std::ostream &os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 8);
}

inline std::uint64_t get_u64(std::istream &is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char *>(b), 8)) throw Error("container: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

} // namespace detail

/// Write `path` via a temporary sibling and rename, so readers never observe
/// a partially written file.
template <class Writer>
void atomic_write(const std::filesystem::path &path, Writer &&write) {
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    write(os);
    os.flush();
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_text_file(const std::filesystem::path &path,
                            const std::string &text) {
  atomic_write(path, [&](std::ostream &os) { os << text; });
}

inline std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_container(std::ostream &os, const char (&magic)[9],
                            const json &header, std::span<const double> blob) {
  os.write(magic, 8);
  const std::string h = header.dump();
  detail::put_u64(os, h.size());
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  detail::put_u64(os, blob.size());
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char *>(blob.data()),
             static_cast<std::streamsize>(blob.size() * sizeof(double)));
  } else {
    for (double d : blob) detail::put_u64(os, std::bit_cast<std::uint64_t>(d));
  }
}

struct Container {
  json header;
  std::vector<double> blob;
};

inline Container read_container(std::istream &is, const char (&magic)[9]) {
  char m[8];
  if (!is.read(m, 8) || std::memcmp(m, magic, 8) != 0)
    throw Error(std::string("container: bad magic (expected ") + magic + ")");
  const auto hlen = detail::get_u64(is);
  if (hlen > (1ULL << 30)) throw Error("container: header too large");
  std::string h(hlen, '\0');
  if (!is.read(h.data(), static_cast<std::streamsize>(hlen)))
    throw Error("container: truncated header");
  Container c;
  try {
    c.header = json::parse(h);
  } catch (const json::exception &e) {
    throw Error(std::string("container: malformed header: ") + e.what());
  }
  const auto count = detail::get_u64(is);
  if (count > (1ULL << 34)) throw Error("container: blob too large");
  c.blob.resize(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char *>(c.blob.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
      throw Error("container: truncated blob");
  } else {
    for (auto &d : c.blob) d = std::bit_cast<double>(detail::get_u64(is));
  }
  return c;
}

/// Shortest round-tripping decimal form of a double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace hjlss

#endif // HJLSS_IO_HPP
