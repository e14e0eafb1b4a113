#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stochflow/chain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/matrix.hpp"
#include "stochflow/switching.hpp"

namespace stochflow {

using json = nlohmann::ordered_json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open input file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError("invalid JSON in " + path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot open output file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw SpecError("write failed: " + path);
}

inline void write_text_file(const std::string& path,
                            const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot open output file: " + path);
  out << text;
  if (!out) throw SpecError("write failed: " + path);
}

/// %.17g rendering used for CSV cells (exact double round-trip).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline double json_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw SpecError(what + ": expected a number");
  return v.get<double>();
}

inline StochMatrix parse_matrix(const json& rows, int dim, double stoch_tol,
                                const std::string& what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
    throw SpecError(what + ": expected " + std::to_string(dim) + " rows");
  std::vector<double> e;
  e.reserve(static_cast<std::size_t>(dim) * dim);
  for (const json& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw SpecError(what + ": expected rows of " + std::to_string(dim) +
                      " numbers");
    for (const json& v : row) e.push_back(json_number(v, what));
  }
  try {
    return StochMatrix(dim, std::move(e), stoch_tol);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(what + ": " + ex.what());
  }
}

inline Permutation parse_perm(const json& arr, int dim,
                              const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
    throw SpecError(what + ": expected a map of " + std::to_string(dim) +
                    " indices");
  std::vector<int> map;
  map.reserve(static_cast<std::size_t>(dim));
  for (const json& v : arr) {
    if (!v.is_number_integer())
      throw SpecError(what + ": expected integer indices");
    map.push_back(v.get<int>());
  }
  try {
    return Permutation(std::move(map));
  } catch (const std::invalid_argument& ex) {
    throw SpecError(what + ": " + ex.what());
  }
}

}  // namespace detail

/// Parsed chain input. When the chain was given as permutation maps the
/// original permutation chain is kept alongside its matrix form.
struct ChainSpec {
  Chain chain;
  std::optional<std::vector<double>> x0;
  std::optional<PermChain> pchain;
};

/// Chain spec object:
///   {"kind": "chain", "dim": m, "flavor": "stochastic"|"doubly_stochastic",
///    "prefix": [matrix...], "cycle": [matrix...], "x0": [..]}
/// or the permutation form with "perm_prefix"/"perm_cycle" holding maps
/// (image-of-index arrays); the permutation form is always doubly stochastic.
inline ChainSpec parse_chain_spec(const json& j,
                                  double stoch_tol = default_stoch_tol) {
  if (!j.is_object()) throw SpecError("chain spec: expected an object");
  if (j.contains("kind") && j["kind"] != "chain")
    throw SpecError("chain spec: kind must be \"chain\"");
  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw SpecError("chain spec: missing integer \"dim\"");
  int dim = j["dim"].get<int>();
  if (dim < 1) throw SpecError("chain spec: dim must be >= 1");

  bool mat_form = j.contains("cycle");
  bool perm_form = j.contains("perm_cycle");
  if (mat_form == perm_form)
    throw SpecError(
        "chain spec: provide exactly one of \"cycle\" or \"perm_cycle\"");

  std::optional<std::vector<double>> x0;
  if (j.contains("x0")) {
    const json& v = j["x0"];
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
      throw SpecError("chain spec: x0 must hold " + std::to_string(dim) +
                      " numbers");
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(dim));
    for (const json& c : v) x.push_back(detail::json_number(c, "x0"));
    x0 = std::move(x);
  }

  if (perm_form) {
    if (j.contains("flavor") && j["flavor"] != "doubly_stochastic")
      throw SpecError("chain spec: permutation chains are doubly stochastic");
    std::vector<Permutation> pre, cyc;
    if (j.contains("perm_prefix")) {
      if (!j["perm_prefix"].is_array())
        throw SpecError("chain spec: perm_prefix must be an array");
      for (const json& p : j["perm_prefix"])
        pre.push_back(detail::parse_perm(p, dim, "perm_prefix"));
    }
    if (!j["perm_cycle"].is_array() || j["perm_cycle"].empty())
      throw SpecError("chain spec: perm_cycle must be a nonempty array");
    for (const json& p : j["perm_cycle"])
      cyc.push_back(detail::parse_perm(p, dim, "perm_cycle"));
    PermChain pc(dim, std::move(pre), std::move(cyc));
    Chain chain = pc.to_matrix_chain();
    return {std::move(chain), std::move(x0), std::move(pc)};
  }

  Flavor fl = Flavor::stochastic;
  if (j.contains("flavor")) {
    if (j["flavor"] == "doubly_stochastic")
      fl = Flavor::doubly_stochastic;
    else if (j["flavor"] != "stochastic")
      throw SpecError("chain spec: unknown flavor");
  }
  std::vector<StochMatrix> pre, cyc;
  if (j.contains("prefix")) {
    if (!j["prefix"].is_array())
      throw SpecError("chain spec: prefix must be an array");
    for (const json& a : j["prefix"])
      pre.push_back(detail::parse_matrix(a, dim, stoch_tol, "prefix"));
  }
  if (!j["cycle"].is_array() || j["cycle"].empty())
    throw SpecError("chain spec: cycle must be a nonempty array");
  for (const json& a : j["cycle"])
    cyc.push_back(detail::parse_matrix(a, dim, stoch_tol, "cycle"));
  try {
    return {Chain(dim, fl, std::move(pre), std::move(cyc), stoch_tol),
            std::move(x0), std::nullopt};
  } catch (const std::invalid_argument& ex) {
    throw SpecError(std::string("chain spec: ") + ex.what());
  }
}

/// Collection spec object:
///   {"kind": "collection", "dim": m, "flavor": "stochastic"|
///    "doubly_stochastic"|"doubly_stochastic_trivial_component",
///    "matrices": [matrix...]}
inline Collection parse_collection_spec(const json& j,
                                        double stoch_tol = default_stoch_tol,
                                        double zero_tol = default_zero_tol) {
  if (!j.is_object()) throw SpecError("collection spec: expected an object");
  if (j.contains("kind") && j["kind"] != "collection")
    throw SpecError("collection spec: kind must be \"collection\"");
  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw SpecError("collection spec: missing integer \"dim\"");
  int dim = j["dim"].get<int>();
  if (dim < 1) throw SpecError("collection spec: dim must be >= 1");
  CollectionFlavor fl = CollectionFlavor::stochastic;
  if (j.contains("flavor")) {
    if (j["flavor"] == "doubly_stochastic")
      fl = CollectionFlavor::doubly_stochastic;
    else if (j["flavor"] == "doubly_stochastic_trivial_component")
      fl = CollectionFlavor::doubly_stochastic_trivial_component;
    else if (j["flavor"] != "stochastic")
      throw SpecError("collection spec: unknown flavor");
  }
  if (!j.contains("matrices") || !j["matrices"].is_array() ||
      j["matrices"].empty())
    throw SpecError("collection spec: matrices must be a nonempty array");
  std::vector<StochMatrix> mats;
  for (const json& a : j["matrices"])
    mats.push_back(detail::parse_matrix(a, dim, stoch_tol, "matrices"));
  try {
    return Collection(std::move(mats), fl, stoch_tol, zero_tol);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(std::string("collection spec: ") + ex.what());
  }
}

inline json matrix_to_json(const StochMatrix& a) {
  json rows = json::array();
  for (int i = 0; i < a.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.dim(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json index_set_to_json(const IndexSet& s) {
  json arr = json::array();
  for (int i : s.indices()) arr.push_back(i);
  return arr;
}

inline IndexSet index_set_from_json(const json& v, int dim) {
  if (!v.is_array()) throw SpecError("index set: expected an array");
  std::vector<int> idx;
  for (const json& c : v) {
    if (!c.is_number_integer())
      throw SpecError("index set: expected integer indices");
    idx.push_back(c.get<int>());
  }
  try {
    return IndexSet::from_indices(dim, idx);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(std::string("index set: ") + ex.what());
  }
}

inline json regular_seq_to_json(const RegularSeq& s) {
  json j = json::object();
  j["cardinality"] = s.cardinality();
  json pre = json::array();
  for (const IndexSet& t : s.prefix()) pre.push_back(index_set_to_json(t));
  json cyc = json::array();
  for (const IndexSet& t : s.cycle()) cyc.push_back(index_set_to_json(t));
  j["prefix"] = std::move(pre);
  j["cycle"] = std::move(cyc);
  return j;
}

inline RegularSeq regular_seq_from_json(const json& v, int dim) {
  if (!v.is_object() || !v.contains("cycle"))
    throw SpecError("set sequence: expected an object with \"cycle\"");
  std::vector<IndexSet> pre, cyc;
  if (v.contains("prefix"))
    for (const json& s : v["prefix"]) pre.push_back(index_set_from_json(s, dim));
  for (const json& s : v["cycle"]) cyc.push_back(index_set_from_json(s, dim));
  try {
    return RegularSeq(dim, std::move(pre), std::move(cyc));
  } catch (const std::invalid_argument& ex) {
    throw SpecError(std::string("set sequence: ") + ex.what());
  }
}

/// Round-trippable chain spec (matrix form).
inline json chain_to_spec_json(const Chain& c) {
  json j = json::object();
  j["kind"] = "chain";
  j["dim"] = c.dim();
  j["flavor"] = to_string(c.flavor());
  if (!c.prefix().empty()) {
    json pre = json::array();
    for (const StochMatrix& a : c.prefix()) pre.push_back(matrix_to_json(a));
    j["prefix"] = std::move(pre);
  }
  json cyc = json::array();
  for (const StochMatrix& a : c.cycle()) cyc.push_back(matrix_to_json(a));
  j["cycle"] = std::move(cyc);
  return j;
}

}  // namespace stochflow
