// Copyright 2026 The projda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROJDA_IO_HPP
#define PROJDA_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <projda/numerics.hpp>
#include <projda/reduction.hpp>

/**
 * \file
 * \brief Raw little-endian float64 files with JSON sidecars (`<path>.json`).
 *
 * Snapshot files hold one state per record. Basis files hold an M x r matrix in
 * column-major order.
 */

namespace projda {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

namespace detail {

inline void write_doubles(std::ofstream& out, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, data + i, sizeof bits);
      bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

inline std::vector<double> read_doubles(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(double) != 0) {
    throw IoError("'" + path + "' is not a whole number of float64 values");
  }
  std::vector<double> out(bytes / sizeof(double));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!in) {
    throw IoError("short read from '" + path + "'");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : out) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      bits = __builtin_bswap64(bits);
      std::memcpy(&v, &bits, sizeof bits);
    }
  }
  return out;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open sidecar '" + path + "'");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed sidecar '" + path + "': " + e.what());
  }
}

template <class T>
T sidecar_field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) {
    throw IoError("sidecar '" + path + "' lacks field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw IoError("sidecar '" + path + "' field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

struct SnapshotMeta {
  std::string model;
  Eigen::Index dim = 0;
  int n_steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool noise_on = false;
};

/// Writes n_steps + 1 states and the sidecar.
inline void write_snapshots(const std::string& path, const std::vector<Vector>& states, const SnapshotMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  for (const Vector& s : states) {
    if (s.size() != meta.dim) {
      throw IoError("write_snapshots: state dimension differs from the sidecar dimension");
    }
    detail::write_doubles(out, s.data(), static_cast<std::size_t>(s.size()));
  }
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
  detail::write_json(sidecar_path(path), {{"model", meta.model},
                                          {"M", meta.dim},
                                          {"n_steps", meta.n_steps},
                                          {"dt", meta.dt},
                                          {"seed", meta.seed},
                                          {"noise_on", meta.noise_on}});
}

/// Snapshots as the columns of an M x (n_steps + 1) matrix.
inline Matrix read_snapshots(const std::string& path, SnapshotMeta* meta_out = nullptr) {
  const std::string side = sidecar_path(path);
  const nlohmann::json j = detail::read_json(side);
  SnapshotMeta meta;
  meta.model = detail::sidecar_field<std::string>(j, "model", side);
  meta.dim = detail::sidecar_field<Eigen::Index>(j, "M", side);
  meta.n_steps = detail::sidecar_field<int>(j, "n_steps", side);
  meta.dt = detail::sidecar_field<double>(j, "dt", side);
  meta.seed = detail::sidecar_field<std::uint64_t>(j, "seed", side);
  meta.noise_on = detail::sidecar_field<bool>(j, "noise_on", side);
  if (meta.dim < 1 || meta.n_steps < 0) {
    throw IoError("sidecar '" + side + "' has invalid M or n_steps");
  }
  const std::vector<double> raw = detail::read_doubles(path);
  const auto expected = static_cast<std::size_t>(meta.dim) * static_cast<std::size_t>(meta.n_steps + 1);
  if (raw.size() != expected) {
    throw IoError("'" + path + "' holds " + std::to_string(raw.size()) + " values but its sidecar declares M = " +
                  std::to_string(meta.dim) + " and n_steps = " + std::to_string(meta.n_steps));
  }
  if (meta_out != nullptr) {
    *meta_out = meta;
  }
  return Eigen::Map<const Matrix>(raw.data(), meta.dim, meta.n_steps + 1);
}

/// Writes the basis columns and a sidecar {kind, M, r, source_snapshot_file, parameters}.
inline void write_basis(const std::string& path, const ReductionBasis& basis, const std::string& source,
                        const nlohmann::json& parameters) {
  const Matrix u = basis.columns();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  detail::write_doubles(out, u.data(), static_cast<std::size_t>(u.size()));
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
  detail::write_json(sidecar_path(path), {{"kind", std::string(to_string(basis.kind()))},
                                          {"M", basis.dim()},
                                          {"r", basis.rank()},
                                          {"source_snapshot_file", source},
                                          {"parameters", parameters}});
}

inline ReductionBasis read_basis(const std::string& path) {
  const std::string side = sidecar_path(path);
  const nlohmann::json j = detail::read_json(side);
  const auto kind = basis_kind_from_string(detail::sidecar_field<std::string>(j, "kind", side));
  const auto m = detail::sidecar_field<Eigen::Index>(j, "M", side);
  const auto r = detail::sidecar_field<Eigen::Index>(j, "r", side);
  const std::vector<double> raw = detail::read_doubles(path);
  if (m < 1 || r < 1 || raw.size() != static_cast<std::size_t>(m * r)) {
    throw IoError("'" + path + "' does not hold the M x r matrix declared by its sidecar");
  }
  if (kind == BasisKind::identity) {
    return ReductionBasis::identity(m);
  }
  return ReductionBasis::from_columns(Eigen::Map<const Matrix>(raw.data(), m, r), kind, kind == BasisKind::aus);
}

}  // namespace projda

#endif
