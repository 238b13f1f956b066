#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "mbo/grid.hpp"

namespace mbo {

// MBOF1 raster: one ASCII header line
//   MBOF1 <d> <dims...> <extent...> <dtype>
// followed by the row-major payload (u8 masks, f64le scalars).

namespace detail {

inline std::string mbof_header(const GridSpec& s, const char* dtype) {
  std::string h = "MBOF1 " + std::to_string(s.d());
  for (int a = 0; a < s.d(); ++a) h += " " + std::to_string(s.dim(a));
  char buf[64];
  for (int a = 0; a < s.d(); ++a) {
    std::snprintf(buf, sizeof buf, " %.17g", s.extent(a));
    h += buf;
  }
  h += " ";
  h += dtype;
  h += "\n";
  return h;
}

}  // namespace detail

inline void write_mbof(std::ostream& os, const BinarySetField& e) {
  os << detail::mbof_header(e.spec, "u8");
  os.write(reinterpret_cast<const char*>(e.mask.data()), static_cast<std::streamsize>(e.mask.size()));
}

inline void write_mbof(std::ostream& os, const ScalarField& f) {
  static_assert(std::endian::native == std::endian::little, "f64le payload assumes little endian host");
  os << detail::mbof_header(f.spec, "f64le");
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

template <class Field>
void write_mbof(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_mbof(os, f);
}

using Raster = std::variant<BinarySetField, ScalarField>;

inline Raster read_mbof(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("MBOF1: missing header");
  std::istringstream hs(line);
  std::string magic, dtype;
  int d = 0;
  hs >> magic >> d;
  if (magic != "MBOF1" || d < 2 || d > 3) throw std::runtime_error("MBOF1: bad header");
  std::vector<int> dims(d);
  std::vector<double> ext(d);
  for (auto& n : dims) hs >> n;
  for (auto& x : ext) {
    std::string tok;
    hs >> tok;
    x = std::strtod(tok.c_str(), nullptr);
  }
  hs >> dtype;
  if (!hs) throw std::runtime_error("MBOF1: truncated header");
  GridSpec spec(dims, ext);
  if (dtype == "u8") {
    BinarySetField e(spec);
    is.read(reinterpret_cast<char*>(e.mask.data()), static_cast<std::streamsize>(e.mask.size()));
    if (is.gcount() != static_cast<std::streamsize>(e.mask.size()))
      throw std::runtime_error("MBOF1: short payload");
    return e;
  }
  if (dtype == "f64le") {
    ScalarField f(spec);
    auto bytes = static_cast<std::streamsize>(f.values.size() * sizeof(double));
    is.read(reinterpret_cast<char*>(f.values.data()), bytes);
    if (is.gcount() != bytes) throw std::runtime_error("MBOF1: short payload");
    return f;
  }
  throw std::runtime_error("MBOF1: unknown dtype " + dtype);
}

inline Raster read_mbof(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_mbof(is);
}

}  // namespace mbo
