// Copyright 2026 The ctoqw Authors
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

// JSON model and state formats.
//
// A matrix is a list of rows; each entry is a real number or a [re, im] pair.
// A bare number is a 1x1 matrix. Vertex ids may be strings or integers
// (integers are stored as their decimal string).
//
// Model:
//   {"vertices": [{"id": 0, "dim": 2}, ...],
//    "hamiltonians": {"0": M, ...},     optional, missing means zero
//    "effective": {"0": M, ...},        optional, replaces H for that vertex
//    "jumps": [{"from": 0, "to": 1, "matrix": M}, ...],
//    "escapes": [{"from": 0, "matrix": M}, ...],
//    "lattice": {...},                  optional, see below
//    "tolerance": 1e-10}
//
// Lattice block: integer sites in [-window, window] ("symmetric": true) or
// [0, window]. Every site gets dimension "dim" (default 1) and nearest
// neighbour jumps "right" {"matrix", "from"} for sites >= from and "left"
// {"matrix", "from"} likewise; "hamiltonian" is a per-site default.
// Explicit vertices and jumps override generated ones. Jumps leaving the
// window become escapes, and explicit entries at sites outside the window are
// dropped, so the same file can be re-read with a different window.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctoqw/errors.hpp"
#include "ctoqw/linalg.hpp"
#include "ctoqw/model.hpp"

namespace ctoqw::io {

using Json = nlohmann::json;

inline std::string id_string(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ParseError("vertex id must be a string or an integer, got " + j.dump());
}

inline Complex parse_entry(const Json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
    return {e[0].get<double>(), e[1].get<double>()};
  }
  throw ParseError("matrix entry must be a number or [re, im], got " + e.dump());
}

inline Matrix parse_matrix(const Json& j) {
  if (j.is_number()) return Matrix::Constant(1, 1, Complex(j.get<double>(), 0.0));
  if (!j.is_array() || j.empty()) throw ParseError("matrix must be a non-empty list of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array()) throw ParseError("matrix rows must be lists");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ParseError("ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = parse_entry(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

/// Real entries as numbers, complex ones as [re, im].
inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      const Complex z = m(r, c);
      if (z.imag() == 0.0) {
        row.push_back(z.real());
      } else {
        row.push_back(Json::array({z.real(), z.imag()}));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

namespace detail {

inline std::optional<long long> as_site(const std::string& id) {
  if (id.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const long long v = std::stoll(id, &pos);
    if (pos == id.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Parses the model JSON into an unchecked raw description.
inline RawModel parse_raw_model(const Json& j) {
  if (!j.is_object()) throw ParseError("model must be a JSON object");
  RawModel raw;
  raw.tolerance = detail::get_or(j, "tolerance", 1e-10);

  std::optional<std::pair<long long, long long>> window;
  std::map<std::string, Index> dims;  // explicit and lattice vertices
  std::vector<std::string> order;
  std::map<std::pair<std::string, std::string>, Matrix> jump_map;
  std::vector<std::pair<std::string, std::string>> jump_order;
  std::vector<RawModel::RawEscape> escapes;

  auto inside = [&](const std::string& id) {
    if (!window) return true;
    const auto s = detail::as_site(id);
    return !s || (*s >= window->first && *s <= window->second);
  };
  auto add_vertex = [&](const std::string& id, Index dim) {
    if (dims.emplace(id, dim).second) {
      order.push_back(id);
    } else {
      dims[id] = dim;
    }
  };
  auto add_jump = [&](const std::string& from, const std::string& to, const Matrix& m) {
    if (!inside(from)) return;
    if (!inside(to)) {
      escapes.push_back({from, m});
      return;
    }
    const auto key = std::make_pair(from, to);
    if (jump_map.emplace(key, m).second) {
      jump_order.push_back(key);
    } else {
      jump_map[key] = m;
    }
  };

  std::optional<Matrix> lattice_h;
  if (j.contains("lattice")) {
    const auto& lat = j.at("lattice");
    const auto n = detail::get_or<long long>(lat, "window", 0);
    if (n < 1) throw ParseError("lattice window must be >= 1");
    const bool symmetric = detail::get_or(lat, "symmetric", false);
    window = std::make_pair(symmetric ? -n : 0LL, n);
    const auto dim = detail::get_or<Index>(lat, "dim", 1);
    for (long long s = window->first; s <= window->second; ++s) add_vertex(std::to_string(s), dim);
    if (lat.contains("hamiltonian")) lattice_h = parse_matrix(lat.at("hamiltonian"));
    for (const auto* side : {"right", "left"}) {
      if (!lat.contains(side)) continue;
      const auto& spec = lat.at(side);
      const Matrix m = parse_matrix(spec.at("matrix"));
      const long long from = detail::get_or<long long>(spec, "from", window->first);
      const long long step = std::string(side) == "right" ? 1 : -1;
      for (long long s = std::max(from, window->first); s <= window->second; ++s) {
        add_jump(std::to_string(s), std::to_string(s + step), m);
      }
    }
  }

  if (j.contains("vertices")) {
    for (const auto& v : j.at("vertices")) {
      const std::string id = id_string(v.at("id"));
      if (!inside(id)) continue;
      add_vertex(id, detail::get_or<Index>(v, "dim", 1));
    }
  }
  if (dims.empty()) throw ParseError("model has no vertices");
  for (const auto& id : order) raw.vertices.push_back({id, dims[id]});

  // Explicit jumps replace generated ones; generated jumps whose shape no
  // longer matches an overridden vertex dimension are dropped.
  if (j.contains("jumps")) {
    std::set<std::pair<std::string, std::string>> explicit_keys;
    for (const auto& e : j.at("jumps")) {
      explicit_keys.emplace(id_string(e.at("from")), id_string(e.at("to")));
    }
    for (const auto& key : explicit_keys) {
      // An explicit jump into a site outside the window removes any generated escape.
      std::erase_if(escapes, [&](const RawModel::RawEscape& es) {
        return es.from == key.first && !inside(key.second);
      });
    }
    for (const auto& e : j.at("jumps")) {
      add_jump(id_string(e.at("from")), id_string(e.at("to")), parse_matrix(e.at("matrix")));
    }
  }
  for (const auto& key : jump_order) {
    const Matrix& m = jump_map[key];
    const auto fd = dims.find(key.first);
    const auto td = dims.find(key.second);
    if (window && fd != dims.end() && td != dims.end() && (m.cols() != fd->second || m.rows() != td->second)) {
      // Generated lattice jump incompatible with an explicit vertex dimension
      // and not overridden: report it rather than guess.
      throw ParseError("lattice jump " + key.first + "->" + key.second +
                       " does not fit the vertex dimensions; give it explicitly");
    }
    raw.jumps.push_back({key.first, key.second, m});
  }
  if (j.contains("escapes")) {
    for (const auto& e : j.at("escapes")) {
      const std::string from = id_string(e.at("from"));
      if (!inside(from)) continue;
      escapes.push_back({from, parse_matrix(e.at("matrix"))});
    }
  }
  raw.escapes = std::move(escapes);

  if (lattice_h) {
    for (const auto& v : raw.vertices) {
      if (v.dim == lattice_h->rows()) raw.hamiltonians[v.id] = *lattice_h;
    }
  }
  for (const auto* key : {"hamiltonians", "effective"}) {
    if (!j.contains(key)) continue;
    auto& target = std::string(key) == "hamiltonians" ? raw.hamiltonians : raw.effective;
    for (const auto& [id, m] : j.at(key).items()) {
      if (!inside(id)) continue;
      target[id] = parse_matrix(m);
    }
  }
  return raw;
}

inline WalkModel parse_model(const Json& j) {
  try {
    return build_walk(parse_raw_model(j));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

/// Replaces the lattice window of a model document.
inline Json with_window(Json j, long long window) {
  if (!j.contains("lattice")) throw PreconditionError("--window needs a model with a lattice block");
  j["lattice"]["window"] = window;
  return j;
}

inline bool has_lattice(const Json& j) { return j.is_object() && j.contains("lattice"); }

/// Explicit (lattice-free) JSON for a model: vertices, effective matrices, jumps, escapes.
inline Json model_json(const WalkModel& m) {
  Json j;
  j["vertices"] = Json::array();
  for (const auto& v : m.vertices()) j["vertices"].push_back({{"id", v.id}, {"dim", v.dim}});
  Json h = Json::object();
  for (Index i = 0; i < m.num_vertices(); ++i) {
    if (m.hamiltonian(i).norm() > 0.0) h[m.id(i)] = matrix_json(m.hamiltonian(i));
  }
  j["hamiltonians"] = h;
  j["jumps"] = Json::array();
  for (const auto& jp : m.jumps()) {
    j["jumps"].push_back({{"from", m.id(jp.from)}, {"to", m.id(jp.to)}, {"matrix", matrix_json(jp.op)}});
  }
  if (m.has_escapes()) {
    j["escapes"] = Json::array();
    for (const auto& e : m.escapes()) j["escapes"].push_back({{"from", m.id(e.from)}, {"matrix", matrix_json(e.op)}});
  }
  j["tolerance"] = m.tolerance();
  return j;
}

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON text.
inline std::string content_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline Json block_state_json(const WalkModel& m, const BlockState& s) {
  Json blocks = Json::object();
  for (Index i = 0; i < m.num_vertices(); ++i) {
    blocks[m.id(i)] = matrix_json(s.blocks[static_cast<std::size_t>(i)]);
  }
  return {{"blocks", blocks}};
}

/// Reads either {"blocks": {id: M}} (missing blocks are zero) or a sited
/// state {"vertex": id, "rho": M}.
inline BlockState parse_block_state(const WalkModel& m, const Json& j) {
  try {
    if (j.contains("vertex")) {
      const Index v = m.index_of(id_string(j.at("vertex")));
      return BlockState::localized(m, v, parse_matrix(j.at("rho")));
    }
    BlockState s = BlockState::zero(m);
    for (const auto& [id, mat] : j.at("blocks").items()) {
      const Index v = m.index_of(id);
      Matrix b = parse_matrix(mat);
      if (b.rows() != m.dim(v) || b.cols() != m.dim(v)) {
        throw ValidationError("block '" + id + "' has the wrong dimension");
      }
      s.blocks[static_cast<std::size_t>(v)] = std::move(b);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("state: ") + e.what());
  }
}

/// Start specification "v" (maximally mixed; the pure state when d = 1),
/// "v:eK" (K-th basis projector, 1-based), "v:mixed", or "v:path.json" (a
/// JSON matrix or a sited state).
inline SitedState parse_start(const WalkModel& m, const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string vid = spec.substr(0, colon);
  if (!m.contains(vid)) throw ParseError("unknown start vertex '" + vid + "'");
  SitedState s;
  s.vertex = m.index_of(vid);
  const Index d = m.dim(s.vertex);
  const std::string rest = colon == std::string::npos ? std::string("mixed") : spec.substr(colon + 1);
  if (rest == "mixed") {
    s.rho = maximally_mixed(d);
  } else if (rest.size() > 1 && rest[0] == 'e' && rest.find_first_not_of("0123456789", 1) == std::string::npos) {
    const Index k = std::stoll(rest.substr(1));
    if (k < 1 || k > d) throw ParseError("basis index out of range in start '" + spec + "'");
    s.rho = basis_projector(d, k - 1);
  } else {
    const Json j = read_json_file(rest);
    s.rho = j.is_object() ? parse_matrix(j.at("rho")) : parse_matrix(j);
  }
  s.validate(m);
  return s;
}

}  // namespace ctoqw::io
