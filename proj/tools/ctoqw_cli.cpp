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

// Command-line front end. Every artifact carries the model hash, the seed,
// the tolerances in force and the tool version, and nothing time-dependent,
// so re-running a command reproduces its output byte for byte.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctoqw/ctoqw.hpp"

namespace {

using namespace ctoqw;
using io::Json;

struct GlobalOptions {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  double tol = 1e-8;
  bool json_logs = false;
};

GlobalOptions g_opts;

void log_info(const std::string& msg, const std::string& level = "info") {
  if (g_opts.json_logs) {
    std::cerr << Json{{"level", level}, {"message", msg}}.dump() << "\n";
  } else {
    std::cerr << "[" << level << "] " << msg << "\n";
  }
}

struct LoadedModel {
  Json doc;
  WalkModel model;
  std::string hash;
  std::optional<long long> window;
};

// The "meta" block written by `fixtures` is not part of the model content.
Json model_content(Json doc) {
  if (doc.is_object()) doc.erase("meta");
  return doc;
}

Json load_document(const std::string& path, std::optional<long long> window, std::optional<long long>& used) {
  Json doc = model_content(io::read_json_file(path));
  if (window) {
    doc = io::with_window(doc, *window);
    used = window;
  } else if (io::has_lattice(doc) && doc["lattice"].contains("window")) {
    used = doc["lattice"]["window"].get<long long>();
  }
  return doc;
}

LoadedModel load_model(const std::string& path, std::optional<long long> window = std::nullopt) {
  LoadedModel m;
  m.doc = load_document(path, window, m.window);
  m.model = io::parse_model(m.doc);
  m.hash = io::content_hash(m.doc);
  log_info("model " + path + ": " + std::to_string(m.model.num_vertices()) + " vertices, hash " + m.hash);
  return m;
}

Json meta(const std::string& command, const LoadedModel& m, Json tolerances) {
  tolerances["model"] = m.model.tolerance();
  Json out{{"tool", "ctoqw"},
           {"version", kVersion},
           {"command", command},
           {"model_hash", m.hash},
           {"seed", g_opts.seed},
           {"tolerances", std::move(tolerances)}};
  out["window"] = m.window ? Json(*m.window) : Json(nullptr);
  return out;
}

void write_text(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error("cannot write '" + out + "'");
  f << text;
  if (!f) throw Error("error while writing '" + out + "'");
  log_info("wrote " + out);
}

void write_json(const std::string& out, const Json& j) { write_text(out, j.dump(2) + "\n"); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Index vertex_arg(const WalkModel& m, const std::string& id) {
  if (!m.contains(id)) throw ParseError("unknown vertex '" + id + "'");
  return m.index_of(id);
}

Json passage_diagnostics_json(const PassageDiagnostics& d) {
  return {{"method", d.method},
          {"taboo_radius", d.taboo_radius},
          {"iterations", d.iterations},
          {"last_increment", d.last_increment},
          {"converged", d.converged}};
}

PassageOptions passage_options() {
  PassageOptions o;
  o.tol = g_opts.tol;
  return o;
}

Json passage_tolerances() {
  const PassageOptions o = passage_options();
  return {{"tol", o.tol}, {"eps_stab", o.eps_stab}, {"stall_iterations", o.stall_iterations}};
}

// ---- validate -------------------------------------------------------------

struct ValidateArgs {
  std::string model;
  std::string out = "-";
};

int run_validate(const ValidateArgs& a) {
  LoadedModel m;
  m.doc = load_document(a.model, std::nullopt, m.window);
  m.hash = io::content_hash(m.doc);
  Json report;
  bool ok = true;
  try {
    m.model = WalkModel::assemble(io::parse_raw_model(m.doc));
    const auto rep = validate(m.model);
    ok = rep.ok();
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"residual", c.residual}, {"threshold", c.threshold}});
    }
    report = {{"meta", meta("validate", m, Json::object())},
              {"ok", ok},
              {"vertices", m.model.num_vertices()},
              {"jumps", m.model.jumps().size()},
              {"escapes", m.model.escapes().size()},
              {"checks", checks}};
    if (!ok) log_info("model failed validation:\n" + rep.summary(), "error");
  } catch (const ValidationError& e) {
    ok = false;
    report = {{"meta", {{"tool", "ctoqw"}, {"version", kVersion}, {"command", "validate"}, {"model_hash", m.hash}}},
              {"ok", false},
              {"error", e.what()}};
    log_info(e.what(), "error");
  }
  write_json(a.out, report);
  return ok ? 0 : ValidationError("").exit_code();
}

// ---- evolve ---------------------------------------------------------------

struct EvolveArgs {
  std::string model;
  std::string state;
  std::string start;
  std::vector<double> times;
  std::string report = "json";
  std::string out = "-";
};

int run_evolve(const EvolveArgs& a) {
  const LoadedModel m = load_model(a.model);
  BlockState mu;
  if (!a.state.empty()) {
    mu = io::parse_block_state(m.model, io::read_json_file(a.state));
  } else if (!a.start.empty()) {
    mu = io::parse_start(m.model, a.start).as_block_state(m.model);
  } else {
    throw PreconditionError("evolve: give --state or --start");
  }
  mu.validate(m.model, 1e-9);
  if (a.times.empty()) throw PreconditionError("evolve: give --t");
  const BlockGenerator gen(m.model);
  const Json tolerances{{"trace_defect", gen.trace_defect()}};
  if (a.report == "csv") {
    std::ostringstream os;
    os << "# tool=ctoqw version=" << kVersion << " command=evolve model_hash=" << m.hash
       << " seed=" << g_opts.seed << " model_tolerance=" << num(m.model.tolerance()) << "\n";
    os << "t,vertex,probability\n";
    for (double t : a.times) {
      const auto p = position_distribution(gen.evolve(mu, t));
      for (Index v = 0; v < m.model.num_vertices(); ++v) {
        os << num(t) << "," << m.model.id(v) << "," << num(p(v)) << "\n";
      }
      if (m.model.has_escapes()) os << num(t) << ",escaped," << num(std::max(0.0, mu.total_trace() - p.sum())) << "\n";
    }
    write_text(a.out, os.str());
    return 0;
  }
  Json states = Json::array();
  for (double t : a.times) {
    const BlockState s = gen.evolve(mu, t);
    const auto p = position_distribution(s);
    Json pos = Json::object();
    for (Index v = 0; v < m.model.num_vertices(); ++v) pos[m.model.id(v)] = p(v);
    Json entry = io::block_state_json(m.model, s);
    entry["t"] = t;
    entry["position"] = pos;
    entry["escaped"] = std::max(0.0, mu.total_trace() - p.sum());
    states.push_back(std::move(entry));
  }
  Json out{{"meta", meta("evolve", m, tolerances)}};
  if (states.size() == 1) {
    out.update(states[0]);
  } else {
    out["states"] = states;
  }
  write_json(a.out, out);
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string model;
  std::string start;
  double horizon = 10.0;
  std::size_t n = 10000;
  std::string queries;
  std::string out = "-";
  std::string dump;
  std::size_t dump_max = 100;
};

Query::Kind query_kind(const std::string& s) {
  if (s == "passage") return Query::Kind::Passage;
  if (s == "occupation") return Query::Kind::Occupation;
  if (s == "visits") return Query::Kind::Visits;
  if (s == "position") return Query::Kind::Position;
  throw ParseError("unknown query kind '" + s + "' (passage, occupation, visits, position)");
}

std::vector<Query> parse_queries(const WalkModel& model, const Json& doc) {
  const Json& list = doc.is_object() ? doc.at("queries") : doc;
  if (!list.is_array()) throw ParseError("queries must be a list");
  std::vector<Query> out;
  try {
    for (const auto& q : list) {
      Query query;
      query.kind = query_kind(q.at("kind").get<std::string>());
      query.id = q.value("id", "q" + std::to_string(out.size()));
      if (query.kind != Query::Kind::Position) query.target = vertex_arg(model, io::id_string(q.at("target")));
      if (query.kind == Query::Kind::Passage) query.times = q.at("times").get<std::vector<double>>();
      if (query.kind == Query::Kind::Position) query.t = q.at("t").get<double>();
      out.push_back(std::move(query));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("queries: ") + e.what());
  }
  return out;
}

Json vec_json(const Matrix& rho) {
  Json a = Json::array();
  const Vector v = vec(rho);
  for (Index k = 0; k < v.size(); ++k) a.push_back(Json::array({v(k).real(), v(k).imag()}));
  return a;
}

int run_simulate(const SimulateArgs& a) {
  const LoadedModel m = load_model(a.model);
  const SitedState init = io::parse_start(m.model, a.start);
  std::vector<Query> queries;
  if (!a.queries.empty()) {
    queries = parse_queries(m.model, io::read_json_file(a.queries));
  } else {
    Query q;
    q.id = "position";
    q.kind = Query::Kind::Position;
    q.t = a.horizon;
    queries.push_back(q);
  }
  log_info("simulating " + std::to_string(a.n) + " trajectories on " + std::to_string(g_opts.threads) + " thread(s)");
  const auto est = estimate(m.model, init, a.horizon, a.n, g_opts.seed, queries, g_opts.threads);
  std::ostringstream os;
  os << "# tool=ctoqw version=" << kVersion << " command=simulate model_hash=" << m.hash << " seed=" << g_opts.seed
     << " start=" << a.start << " horizon=" << num(a.horizon) << " n=" << a.n
     << " model_tolerance=" << num(m.model.tolerance()) << "\n";
  os << "query_id,vertex,t,estimate,stderr,ci_lo,ci_hi,n\n";
  for (const auto& e : est) {
    os << e.query_id << "," << e.vertex << "," << num(e.t) << "," << num(e.value) << "," << num(e.std_error) << ","
       << num(e.ci_lo) << "," << num(e.ci_hi) << "," << e.n << "\n";
  }
  write_text(a.out, os.str());

  if (!a.dump.empty()) {
    const TrajectorySampler sampler(m.model);
    std::ostringstream d;
    const std::size_t count = std::min(a.dump_max, a.n);
    for (std::size_t k = 0; k < count; ++k) {
      const auto rec = sampler.simulate(init, a.horizon, g_opts.seed, k);
      for (const auto& e : rec.events) {
        Json line{{"trajectory", k},
                  {"t", e.time},
                  {"from", m.model.id(e.from)},
                  {"to", e.to == kEscaped ? std::string("escaped") : m.model.id(e.to)},
                  {"rho", e.to == kEscaped ? Json::array() : vec_json(e.rho)}};
        d << line.dump() << "\n";
      }
    }
    write_text(a.dump, d.str());
  }
  return 0;
}

// ---- first-passage and occupation -----------------------------------------

struct PassageArgs {
  std::string model;
  std::string from;
  std::string to;
  std::vector<long long> windows;
  std::string out = "-";
};

Json passage_at(const LoadedModel& m, const std::string& from, const std::string& to) {
  const SitedState s = io::parse_start(m.model, from);
  const Index j = vertex_arg(m.model, to);
  PassageSystem sys(m.model, passage_options());
  const auto res = sys.first_passage_map(s.vertex, j);
  const auto reach = reach_probability(res.map, s.rho);
  const Matrix mm = res.map.adjoint_identity();
  return {{"window", m.window ? Json(*m.window) : Json(nullptr)},
          {"reach_probability", reach.value},
          {"clamped_by", reach.clamped_by},
          {"adjoint_identity", io::matrix_json(mm)},
          {"adjoint_identity_spectrum", io::vector_json(hermitian_eigenvalues(mm))},
          {"min_choi_eigenvalue", res.map.min_choi_eigenvalue()},
          {"diagnostics", passage_diagnostics_json(res.diagnostics)}};
}

int run_first_passage(const PassageArgs& a) {
  std::vector<std::optional<long long>> windows;
  for (long long w : a.windows) windows.emplace_back(w);
  if (windows.empty()) windows.emplace_back(std::nullopt);
  Json study = Json::array();
  Json main_meta;
  Json first;
  std::optional<double> previous;
  for (const auto& w : windows) {
    const LoadedModel m = load_model(a.model, w);
    Json r = passage_at(m, a.from, a.to);
    const double p = r["reach_probability"].get<double>();
    if (previous) r["increment"] = p - *previous;
    previous = p;
    if (first.is_null()) {
      first = r;
      main_meta = meta("first-passage", m, passage_tolerances());
    }
    study.push_back(std::move(r));
  }
  Json out{{"meta", main_meta}, {"from", a.from}, {"to", a.to}};
  out.update(first);
  if (study.size() > 1) out["window_study"] = study;
  write_json(a.out, out);
  return 0;
}

struct OccupationArgs {
  std::string model;
  std::string from;
  std::string to;
  std::optional<long long> window;
  std::string out = "-";
};

int run_occupation(const OccupationArgs& a) {
  const LoadedModel m = load_model(a.model, a.window);
  const SitedState s = io::parse_start(m.model, a.from);
  const Index j = vertex_arg(m.model, a.to);
  PassageSystem sys(m.model, passage_options());
  const auto occ = expected_occupation(sys, s.vertex, j, s.rho);
  Json out{{"meta", meta("occupation", m, passage_tolerances())},
           {"from", a.from},
           {"to", a.to},
           {"infinite", occ.infinite},
           {"expected_occupation", occ.infinite ? Json("infinite") : Json(occ.value)},
           {"return_radius", occ.return_radius}};
  write_json(a.out, out);
  return 0;
}

// ---- classify and irreducible ---------------------------------------------

struct ClassifyArgs {
  std::string model;
  std::string vertex;
  double eps = 1e-8;
  std::vector<long long> windows;
  bool all_vertices = false;
  std::string out = "-";
};

Json verdict_json(const IrreducibilityVerdict& v) {
  Json j{{"irreducible", v.irreducible},
         {"algebra_dim", v.algebra_dim},
         {"full_dim", v.total_dim * v.total_dim},
         {"total_dim", v.total_dim}};
  if (!v.irreducible) {
    j["invariant_subspace"] = io::matrix_json(v.witness);
    j["invariant_subspace_dim"] = v.witness.cols();
    j["witness_residual"] = v.witness_residual;
  }
  return j;
}

Json report_json(const ClassificationReport& r, const WalkModel& model) {
  return {{"case", to_string(r.recurrence)},
          {"vertex", model.id(r.base_vertex)},
          {"lambda", r.lambda},
          {"perron_state", io::matrix_json(r.perron_state)},
          {"perron_min_eigenvalue", r.perron_min_eig},
          {"perron_residual", r.perron_residual},
          {"perron_method", r.perron_method},
          {"m", io::matrix_json(r.m)},
          {"m_spectrum", io::vector_json(r.m_spectrum)},
          {"m_eigenvectors", io::matrix_json(r.m_eigenvectors)},
          {"min_choi_eigenvalue", r.min_choi_eigenvalue},
          {"passage", passage_diagnostics_json(r.passage)}};
}

int run_classify(const ClassifyArgs& a) {
  std::vector<std::optional<long long>> windows;
  for (long long w : a.windows) windows.emplace_back(w);
  if (windows.empty()) windows.emplace_back(std::nullopt);
  Json out;
  Json study = Json::array();
  for (const auto& w : windows) {
    const LoadedModel m = load_model(a.model, w);
    const Index base = a.vertex.empty() ? 0 : vertex_arg(m.model, a.vertex);
    PassageSystem sys(m.model, passage_options());
    const auto rep = classify_trichotomy(sys, base, a.eps, true);
    if (out.is_null()) {
      Json tol = passage_tolerances();
      tol["eps_spec"] = a.eps;
      out = {{"meta", meta("classify", m, tol)}};
      out.update(report_json(rep, m.model));
      out["irreducibility"] = verdict_json(rep.irreducibility);
      if (a.all_vertices) {
        Json per = Json::object();
        bool agree = true;
        for (Index v = 0; v < m.model.num_vertices(); ++v) {
          const auto r = classify_trichotomy(sys, v, a.eps, false);
          per[m.model.id(v)] = {{"case", to_string(r.recurrence)}, {"lambda", r.lambda}};
          agree = agree && r.recurrence == rep.recurrence;
        }
        out["per_vertex"] = per;
        out["vertices_agree"] = agree;
        if (!agree) log_info("classification differs between base vertices", "warning");
      }
    }
    study.push_back({{"window", m.window ? Json(*m.window) : Json(nullptr)},
                     {"case", to_string(rep.recurrence)},
                     {"lambda", rep.lambda}});
  }
  if (study.size() > 1) out["window_study"] = study;
  write_json(a.out, out);
  return 0;
}

struct IrreducibleArgs {
  std::string model;
  bool discrete = false;
  std::optional<long long> window;
  std::string out = "-";
};

int run_irreducible(const IrreducibleArgs& a) {
  const LoadedModel m = load_model(a.model, a.window);
  const auto v = a.discrete ? check_discrete_irreducible(m.model) : check_irreducible(m.model);
  Json tol{{"span", detail::kSpanTolerance}};
  Json out{{"meta", meta("irreducible", m, tol)}, {"generator", a.discrete ? "jumps" : "semigroup"}};
  out.update(verdict_json(v));
  write_json(a.out, out);
  return 0;
}

// ---- fixtures -------------------------------------------------------------

struct FixtureArgs {
  std::string name;
  long long window = 30;
  std::string out = "-";
};

int run_fixtures(const FixtureArgs& a) {
  Json doc = fixtures::by_name(a.name, a.window);
  (void)io::parse_model(doc);
  const std::string hash = io::content_hash(doc);
  doc["meta"] = {{"tool", "ctoqw"}, {"version", kVersion}, {"fixture", a.name}, {"model_hash", hash},
                 {"seed", g_opts.seed}};
  write_json(a.out, doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctoqw: continuous-time open quantum walks on finite graphs"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g_opts.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", g_opts.threads, "worker threads for Monte Carlo")->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--tol", g_opts.tol, "passage series/solve tolerance")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--json-logs", g_opts.json_logs, "log to stderr as JSON lines");

  int status = 0;

  ValidateArgs va;
  auto* validate_cmd = app.add_subcommand("validate", "check the structural invariants of a model");
  validate_cmd->add_option("--model", va.model)->required();
  validate_cmd->add_option("--out", va.out);
  validate_cmd->callback([&] { status = run_validate(va); });

  EvolveArgs ea;
  auto* evolve_cmd = app.add_subcommand("evolve", "apply the semigroup to a block state");
  evolve_cmd->add_option("--model", ea.model)->required();
  auto* state_opt = evolve_cmd->add_option("--state", ea.state, "block state JSON");
  evolve_cmd->add_option("--start", ea.start, "localized start \"v\", \"v:eK\", \"v:mixed\" or \"v:file.json\"")
      ->excludes(state_opt);
  evolve_cmd->add_option("--t", ea.times, "time (repeat for a grid)")->required();
  evolve_cmd->add_option("--report", ea.report)->check(CLI::IsMember({"json", "csv"}));
  evolve_cmd->add_option("--out", ea.out);
  evolve_cmd->callback([&] { status = run_evolve(ea); });

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimates from quantum trajectories");
  sim_cmd->add_option("--model", sa.model)->required();
  sim_cmd->add_option("--start", sa.start)->required();
  sim_cmd->add_option("--horizon", sa.horizon)->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n", sa.n, "number of trajectories")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--queries", sa.queries, "query list JSON");
  sim_cmd->add_option("--out", sa.out, "estimate CSV");
  sim_cmd->add_option("--dump", sa.dump, "line-delimited JSON event dump");
  sim_cmd->add_option("--dump-max", sa.dump_max, "trajectories to dump")->capture_default_str();
  sim_cmd->callback([&] { status = run_simulate(sa); });

  PassageArgs pa;
  auto* fp_cmd = app.add_subcommand("first-passage", "first-passage map and reach probability");
  fp_cmd->add_option("--model", pa.model)->required();
  fp_cmd->add_option("--from", pa.from)->required();
  fp_cmd->add_option("--to", pa.to)->required();
  fp_cmd->add_option("--window", pa.windows, "lattice window (repeat for a convergence study)");
  fp_cmd->add_option("--out", pa.out);
  fp_cmd->callback([&] { status = run_first_passage(pa); });

  OccupationArgs oa;
  auto* occ_cmd = app.add_subcommand("occupation", "expected total time spent at a vertex");
  occ_cmd->add_option("--model", oa.model)->required();
  occ_cmd->add_option("--from", oa.from)->required();
  occ_cmd->add_option("--to", oa.to)->required();
  occ_cmd->add_option("--window", oa.window);
  occ_cmd->add_option("--out", oa.out);
  occ_cmd->callback([&] { status = run_occupation(oa); });

  ClassifyArgs ca;
  auto* cls_cmd = app.add_subcommand("classify", "recurrence trichotomy of an irreducible walk");
  cls_cmd->add_option("--model", ca.model)->required();
  cls_cmd->add_option("--vertex", ca.vertex, "base vertex (default: the first)");
  cls_cmd->add_option("--eps", ca.eps)->capture_default_str()->check(CLI::PositiveNumber);
  cls_cmd->add_option("--window", ca.windows, "lattice window (repeat for a convergence study)");
  cls_cmd->add_flag("--all-vertices", ca.all_vertices, "classify from every base vertex and compare");
  cls_cmd->add_option("--out", ca.out);
  cls_cmd->callback([&] { status = run_classify(ca); });

  IrreducibleArgs ia;
  auto* irr_cmd = app.add_subcommand("irreducible", "irreducibility of the semigroup or of the jump map");
  irr_cmd->add_option("--model", ia.model)->required();
  irr_cmd->add_flag("--discrete", ia.discrete, "use the jump operators only");
  irr_cmd->add_option("--window", ia.window);
  irr_cmd->add_option("--out", ia.out);
  irr_cmd->callback([&] { status = run_irreducible(ia); });

  FixtureArgs fa;
  auto* fix_cmd = app.add_subcommand("fixtures", "write a built-in reference model");
  fix_cmd->add_option("--name", fa.name)->required()->check(CLI::IsMember(fixtures::names()));
  fix_cmd->add_option("--window", fa.window, "lattice window")->capture_default_str()->check(CLI::PositiveNumber);
  fix_cmd->add_option("--out", fa.out);
  fix_cmd->callback([&] { status = run_fixtures(fa); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the exit status of malformed input.
    return app.exit(e) == 0 ? 0 : ParseError("").exit_code();
  } catch (const ctoqw::Error& e) {
    log_info(e.what(), "error");
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    log_info(std::string("malformed input: ") + e.what(), "error");
    return ParseError("").exit_code();
  }
  return status;
}
