#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stochflow/birkhoff.hpp"
#include "stochflow/chain.hpp"
#include "stochflow/ergodicity.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/io.hpp"
#include "stochflow/matrix.hpp"
#include "stochflow/switching.hpp"

namespace stochflow {

struct RunConfig {
  std::string command;       // analyze | simulate | rate | stability
  std::string input_path;
  std::string output_path;   // empty: report goes to stdout
  std::string trace_path;    // rate: accumulation-interval CSV
  std::string witness_path;  // stability: witness chain spec file
  double tol_zero = default_zero_tol;
  double tol_stoch = default_stoch_tol;
  double delta = 1.0 / 3.0;
  long horizon = 100;
  int count = 8;
  int spread_log2 = 20;
};

namespace detail {

inline json perm_chain_to_json(const PermChain& pc) {
  json j = json::object();
  if (!pc.prefix().empty()) {
    json pre = json::array();
    for (const Permutation& p : pc.prefix()) pre.push_back(p.map());
    j["perm_prefix"] = std::move(pre);
  }
  json cyc = json::array();
  for (const Permutation& p : pc.cycle()) cyc.push_back(p.map());
  j["perm_cycle"] = std::move(cyc);
  return j;
}

}  // namespace detail

inline json analyze_report(const RunConfig& cfg) {
  ChainSpec spec = parse_chain_spec(load_json_file(cfg.input_path),
                                    cfg.tol_stoch);
  const Chain& chain = spec.chain;
  if (chain.dim() < 2) throw SpecError("analyze: dim must be >= 2");

  json out = json::object();
  out["command"] = "analyze";
  out["dim"] = chain.dim();
  out["flavor"] = to_string(chain.flavor());
  out["tolerances"] = {{"zero", cfg.tol_zero}, {"stochastic", cfg.tol_stoch}};

  InfiniteFlowResult inf = has_infinite_flow(chain, cfg.tol_zero);
  json jf = json::object();
  jf["holds"] = inf.holds;
  if (inf.witness) jf["finite_flow_cut"] = index_set_to_json(*inf.witness);
  out["infinite_flow"] = std::move(jf);

  AbsoluteFlowResult aif = has_absolute_infinite_flow(chain, cfg.tol_zero);
  json ja = json::object();
  ja["holds"] = aif.holds;
  if (aif.witness) {
    ja["finite_flow_sequence"] = regular_seq_to_json(*aif.witness);
    FlowReport rep = total_flow(chain, *aif.witness, cfg.tol_zero);
    ja["witness_flow_finite"] = !rep.infinite;
    if (rep.finite_value) ja["witness_total_flow"] = *rep.finite_value;
  }
  out["absolute_infinite_flow"] = std::move(ja);

  ErgodicityVerdict verdict =
      ergodicity_verdict(chain, cfg.tol_zero, cfg.spread_log2);
  json je = json::object();
  je["status"] = to_string(verdict.status);
  je["reason"] = to_string(verdict.reason);
  if (verdict.witness)
    je["finite_flow_sequence"] = regular_seq_to_json(*verdict.witness);
  if (!verdict.spread.empty()) {
    json sp = json::array();
    for (auto [k, d] : verdict.spread)
      sp.push_back({{"k", k}, {"row_spread", d}});
    je["row_spread_trace"] = std::move(sp);
  }
  out["ergodicity"] = std::move(je);

  if (chain.flavor() == Flavor::doubly_stochastic) {
    auto pc = decompose_chain(chain, cfg.tol_zero);
    if (pc) {
      json jp = json::object();
      jp["gamma"] = pc->gamma;
      jp["degenerate"] = pc->degenerate;
      jp["permutations"] = detail::perm_chain_to_json(pc->pchain);
      out["permutation_component"] = std::move(jp);
      InfiniteFlowGraph g = infinite_flow_graph(chain, pc->pchain,
                                                cfg.tol_zero);
      json jg = json::object();
      json edges = json::array();
      for (auto [i, j] : g.edges) edges.push_back({i, j});
      jg["edges"] = std::move(edges);
      jg["components"] = g.components();
      jg["connected"] = g.connected();
      out["flow_graph"] = std::move(jg);
    } else {
      out["permutation_component"] = nullptr;
    }
  }
  return out;
}

inline std::string simulate_csv(const RunConfig& cfg) {
  ChainSpec spec = parse_chain_spec(load_json_file(cfg.input_path),
                                    cfg.tol_stoch);
  if (!spec.x0) throw SpecError("simulate: input must provide x0");
  if (cfg.horizon < 0) throw SpecError("simulate: negative horizon");
  auto traj = simulate(spec.chain, *spec.x0, cfg.horizon);
  int m = spec.chain.dim();
  std::string csv = "k";
  for (int i = 0; i < m; ++i) csv += ",x" + std::to_string(i);
  csv += ",V\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    csv += std::to_string(k);
    for (double v : traj[k]) csv += "," + format_g17(v);
    csv += "," + format_g17(lyapunov(traj[k])) + "\n";
  }
  return csv;
}

inline json rate_report(const RunConfig& cfg, std::string* trace_csv) {
  ChainSpec spec = parse_chain_spec(load_json_file(cfg.input_path),
                                    cfg.tol_stoch);
  const Chain& chain = spec.chain;
  if (chain.flavor() != Flavor::doubly_stochastic)
    throw SpecError("rate: chain must be doubly_stochastic");
  if (!spec.x0) throw SpecError("rate: input must provide x0");
  RateCertificate rc =
      rate_certificate(chain, *spec.x0, cfg.delta, cfg.count, cfg.tol_zero);
  json out = json::object();
  out["command"] = "rate";
  out["dim"] = chain.dim();
  out["gamma"] = rc.gamma;
  out["delta"] = rc.delta;
  out["contraction"] = rc.contraction;
  out["times"] = rc.times;
  out["lyapunov"] = rc.lyapunov_values;
  if (trace_csv) {
    std::string csv = "q,t,V\n";
    csv += "0,0," + format_g17(rc.lyapunov_values.front()) + "\n";
    for (std::size_t q = 0; q < rc.times.size(); ++q)
      csv += std::to_string(q + 1) + "," + std::to_string(rc.times[q]) + "," +
             format_g17(rc.lyapunov_values[q + 1]) + "\n";
    *trace_csv = std::move(csv);
  }
  return out;
}

inline json stability_report(const RunConfig& cfg,
                             std::optional<json>* witness_out) {
  Collection coll = parse_collection_spec(load_json_file(cfg.input_path),
                                          cfg.tol_stoch, cfg.tol_zero);
  std::vector<ZeroFlowGraph> graphs =
      build_zero_flow_graphs(coll, cfg.tol_zero);
  StabilityVerdict verdict = stability_verdict(coll, cfg.tol_zero);

  json out = json::object();
  out["command"] = "stability";
  out["dim"] = coll.dim();
  out["flavor"] = to_string(coll.flavor());
  out["matrices"] = coll.size();
  out["answer"] = to_string(verdict.answer);

  std::size_t total_edges = 0;
  for (const ZeroFlowGraph& g : graphs)
    for (const auto& row : g.adj) total_edges += row.size();
  json jg = json::array();
  for (const ZeroFlowGraph& g : graphs) {
    json cls = json::object();
    cls["cardinality"] = g.cardinality;
    cls["nodes"] = g.nodes.size();
    std::size_t ec = 0;
    for (const auto& row : g.adj) ec += row.size();
    cls["edge_count"] = ec;
    if (total_edges <= 10000) {
      json edges = json::array();
      for (int u = 0; u < static_cast<int>(g.nodes.size()); ++u)
        for (int v : g.adj[static_cast<std::size_t>(u)])
          edges.push_back(
              {index_set_to_json(IndexSet(g.dim, g.nodes[static_cast<std::size_t>(u)])),
               index_set_to_json(IndexSet(g.dim, g.nodes[static_cast<std::size_t>(v)]))});
      cls["edges"] = std::move(edges);
    }
    jg.push_back(std::move(cls));
  }
  out["zero_flow_graphs"] = std::move(jg);

  if (verdict.witness_cycle) {
    json cyc = json::array();
    for (const IndexSet& s : *verdict.witness_cycle)
      cyc.push_back(index_set_to_json(s));
    out["witness_cycle"] = std::move(cyc);
    WitnessChain w =
        witness_chain_from_cycle(coll, *verdict.witness_cycle, cfg.tol_zero);
    FlowReport rep = total_flow(w.chain, w.seq, cfg.tol_zero);
    out["witness_flow_finite"] = !rep.infinite;
    if (rep.finite_value) out["witness_total_flow"] = *rep.finite_value;
    if (witness_out) {
      json wj = json::object();
      wj["chain"] = chain_to_spec_json(w.chain);
      wj["sequence"] = regular_seq_to_json(w.seq);
      if (rep.finite_value) wj["total_flow"] = *rep.finite_value;
      *witness_out = std::move(wj);
    }
  }
  return out;
}

namespace detail {

inline void emit_json(const RunConfig& cfg, const json& out,
                      std::ostream& os) {
  if (!cfg.output_path.empty())
    write_json_file(cfg.output_path, out);
  else
    os << out.dump(2) << '\n';
}

}  // namespace detail

/// Exit codes: 0 ok, 2 bad input or infeasible request, 3 resource cap,
/// 4 internal error.
inline int run_command(const RunConfig& cfg, std::ostream& os,
                       std::ostream& es) {
  try {
    if (cfg.command == "analyze") {
      detail::emit_json(cfg, analyze_report(cfg), os);
    } else if (cfg.command == "simulate") {
      std::string csv = simulate_csv(cfg);
      if (!cfg.output_path.empty())
        write_text_file(cfg.output_path, csv);
      else
        os << csv;
    } else if (cfg.command == "rate") {
      std::string trace;
      json out = rate_report(cfg, cfg.trace_path.empty() ? nullptr : &trace);
      if (!cfg.trace_path.empty()) write_text_file(cfg.trace_path, trace);
      detail::emit_json(cfg, out, os);
    } else if (cfg.command == "stability") {
      std::optional<json> witness;
      json out = stability_report(
          cfg, cfg.witness_path.empty() ? nullptr : &witness);
      if (!cfg.witness_path.empty() && witness)
        write_json_file(cfg.witness_path, *witness);
      detail::emit_json(cfg, out, os);
    } else {
      throw SpecError("unknown command: " + cfg.command);
    }
    return 0;
  } catch (const SpecError& e) {
    es << "error: " << e.what() << '\n';
    return 2;
  } catch (const FlowStarvation& e) {
    es << "error: " << e.what() << " (cut:";
    for (int i : e.starving.indices()) es << ' ' << i;
    es << ")\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    es << "error: " << e.what() << '\n';
    return 2;
  } catch (const CapacityError& e) {
    es << "capacity: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    es << "internal: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace stochflow
