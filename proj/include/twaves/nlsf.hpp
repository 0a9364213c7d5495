#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>

#include "twaves/field.hpp"

namespace twaves {

/// Contents of an NLSF file: one real or complex field.
struct NlsfFile {
  std::variant<RField, CField> field;

  bool is_complex() const { return field.index() == 1; }
  const Grid& grid() const { return std::visit([](const auto& f) -> const Grid& { return f.grid; }, field); }
};

namespace detail {

template <class U>
void put_le(std::string& buf, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  std::uint64_t bits = 0;
  if constexpr (sizeof(U) == 8) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else if constexpr (sizeof(U) == 4) {
    bits = std::bit_cast<std::uint32_t>(value);
  } else {
    bits = static_cast<std::uint8_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

template <class U>
U get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(U) > buf.size()) fail(ErrorCode::ParseError, "NLSF file truncated");
  std::uint64_t bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
  pos += sizeof(U);
  if constexpr (sizeof(U) == 8) {
    return std::bit_cast<U>(bits);
  } else if constexpr (sizeof(U) == 4) {
    return std::bit_cast<U>(static_cast<std::uint32_t>(bits));
  } else {
    return static_cast<U>(bits);
  }
}

}  // namespace detail

template <class T>
std::string encode_nlsf(const Field<T>& f) {
  constexpr bool is_c = std::is_same_v<T, cplx>;
  std::string buf = "NLSF";
  detail::put_le<std::uint32_t>(buf, 1);
  detail::put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(f.grid.ndim));
  detail::put_le<std::uint8_t>(buf, is_c ? 1 : 0);
  for (int a = 0; a < f.grid.ndim; ++a) {
    detail::put_le<std::uint64_t>(buf, f.grid.n[a]);
    detail::put_le<double>(buf, f.grid.len[a]);
  }
  buf.reserve(buf.size() + f.size() * sizeof(T));
  for (const auto& x : f.v) {
    if constexpr (is_c) {
      detail::put_le<double>(buf, x.real());
      detail::put_le<double>(buf, x.imag());
    } else {
      detail::put_le<double>(buf, x);
    }
  }
  return buf;
}

inline NlsfFile decode_nlsf(const std::string& buf) {
  if (buf.size() < 4 || buf.compare(0, 4, "NLSF") != 0) fail(ErrorCode::ParseError, "bad NLSF magic");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(buf, pos);
  if (version != 1) fail(ErrorCode::ParseError, "unsupported NLSF version " + std::to_string(version));
  const int ndim = detail::get_le<std::uint8_t>(buf, pos);
  const int kind = detail::get_le<std::uint8_t>(buf, pos);
  if (ndim < 1 || ndim > 3 || kind > 1) fail(ErrorCode::ParseError, "bad NLSF header");
  std::vector<std::size_t> sizes;
  std::vector<double> lengths;
  for (int a = 0; a < ndim; ++a) {
    sizes.push_back(detail::get_le<std::uint64_t>(buf, pos));
    lengths.push_back(detail::get_le<double>(buf, pos));
  }
  const Grid g = Grid::make(sizes, lengths);
  const std::size_t expect = g.size() * (kind == 1 ? 16 : 8);
  if (buf.size() - pos != expect) fail(ErrorCode::ParseError, "NLSF payload size mismatch");
  if (kind == 1) {
    CField f(g);
    for (auto& x : f.v) {
      const double re = detail::get_le<double>(buf, pos);
      const double im = detail::get_le<double>(buf, pos);
      x = {re, im};
    }
    return {f};
  }
  RField f(g);
  for (auto& x : f.v) x = detail::get_le<double>(buf, pos);
  return {f};
}

using Metadata = std::map<std::string, std::string>;

inline std::string meta_path(const std::string& path) { return path + ".meta"; }

template <class T>
void write_nlsf(const std::string& path, const Field<T>& f, const Metadata& meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  const std::string buf = encode_nlsf(f);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
  if (!meta.empty()) {
    std::ofstream m(meta_path(path));
    for (const auto& [k, v] : meta) m << k << '=' << v << '\n';
  }
}

inline NlsfFile read_nlsf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_nlsf(ss.str());
}

/// Reads the key=value sidecar; empty when absent.
inline Metadata read_metadata(const std::string& path) {
  Metadata meta;
  std::ifstream in(meta_path(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace twaves
