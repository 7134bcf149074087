#include "qrev/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "qrev/balance.hpp"
#include "qrev/ctmc.hpp"
#include "qrev/kernels.hpp"
#include "qrev/reversal.hpp"
#include "qrev/sim.hpp"

namespace qrev::cli {

using json = nlohmann::json;

SchemaError::SchemaError(std::string path, std::string reason)
    : Error(ErrorCode::SchemaError, path + ": " + reason), path_(std::move(path)), reason_(std::move(reason)) {}

const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds{"birth_death",   "mm1",          "mms",     "batch_service",
                                              "symmetric",     "reacting",     "self_reacting",
                                              "batch_movement", "whittle",     "jackson", "explicit"};
  return kinds;
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"stationary", "closed_form", "reversible",       "kelly",
                                              "local_balance", "quasi",    "gamma",            "poisson_backward",
                                              "symmetric",  "routing_reversal", "product_form"};
  return names;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"solve", "reverse", "check", "network", "simulate"};
  return names;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

[[noreturn]] void fail(const std::string& path, const std::string& reason) { throw SchemaError(path, reason); }

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.count(k)) fail(path + "." + k, "unknown field");
  }
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path + "." + key, "required field is missing");
  return obj.at(key);
}

double number(const json& v, const std::string& path, double min = -kInf, bool strict = false) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  if (strict ? !(x > min) : !(x >= min)) {
    fail(path, std::string("must be ") + (strict ? "> " : ">= ") + std::to_string(min));
  }
  return x;
}

double rate(const json& v, const std::string& path) { return number(v, path, 0.0, true); }

long long integer(const json& v, const std::string& path, long long min) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < min) fail(path, "must be >= " + std::to_string(min));
  return x;
}

std::vector<double> numbers(const json& v, const std::string& path, double min, bool strict) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]", min, strict));
  return out;
}

std::vector<int> ints(const json& v, const std::string& path, long long min) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(integer(v[i], path + "[" + std::to_string(i) + "]", min)));
  return out;
}

std::vector<std::vector<double>> matrix(const json& v, const std::string& path, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows) fail(path, "expected " + std::to_string(rows) + " rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    auto row = numbers(v[i], p, 0.0, false);
    if (row.size() != cols) fail(p, "expected " + std::to_string(cols) + " entries");
    out.push_back(std::move(row));
  }
  return out;
}

State state_of(const json& v, const std::string& path) {
  if (v.is_number_integer()) return {static_cast<int>(integer(v, path, 0))};
  if (!v.is_array() || v.empty()) fail(path, "expected a state (integer or array of integers)");
  return ints(v, path, 0);
}

json states_field(const json& m, const std::string& path, std::set<State>& known) {
  const auto& v = field(m, "states", path);
  const auto p = path + ".states";
  if (!v.is_array() || v.empty()) fail(p, "expected a nonempty array of states");
  json out = json::array();
  std::size_t dim = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto q = p + "[" + std::to_string(i) + "]";
    auto s = state_of(v[i], q);
    if (i == 0) dim = s.size();
    if (s.size() != dim) fail(q, "all states need " + std::to_string(dim) + " coordinates");
    if (!known.insert(s).second) fail(q, "duplicate state");
    out.push_back(s);
  }
  return out;
}

json triples(const json& v, const std::string& path, const std::set<State>& known, bool probability = false) {
  if (!v.is_array()) fail(path, "expected an array of [from, to, value] entries");
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto q = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != 3) fail(q, "expected [from, to, value]");
    auto a = state_of(v[i][0], q + "[0]");
    auto b = state_of(v[i][1], q + "[1]");
    if (!known.count(a)) fail(q + "[0]", "state " + format_state(a) + " is not listed in states");
    if (!known.count(b)) fail(q + "[1]", "state " + format_state(b) + " is not listed in states");
    const double x = number(v[i][2], q + "[2]", 0.0);
    if (probability && x > 1.0) fail(q + "[2]", "probabilities must not exceed 1");
    out.push_back(json::array({a, b, x}));
  }
  return out;
}

json typed_triples(const json& m, const std::string& key, const std::string& path, const std::vector<std::string>& types,
                   const std::set<State>& known, bool probability) {
  json out = json::object();
  const json empty = json::object();
  const json& v = m.contains(key) ? m.at(key) : empty;
  if (!v.is_object()) fail(path + "." + key, "expected an object keyed by type");
  for (const auto& [k, _] : v.items()) {
    if (std::find(types.begin(), types.end(), k) == types.end()) fail(path + "." + key + "." + k, "unknown type");
  }
  for (const auto& t : types) {
    out[t] = v.contains(t) ? triples(v.at(t), path + "." + key + "." + t, known, probability) : json::array();
  }
  return out;
}

std::vector<std::string> type_list(const json& m, const std::string& path, bool required) {
  if (!m.contains("types")) {
    if (required) fail(path + ".types", "required field is missing");
    return {""};
  }
  const auto& v = m.at("types");
  if (!v.is_array() || v.empty()) fail(path + ".types", "expected a nonempty array of type names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) fail(path + ".types[" + std::to_string(i) + "]", "expected a string");
    auto s = v[i].get<std::string>();
    if (std::find(out.begin(), out.end(), s) != out.end()) fail(path + ".types[" + std::to_string(i) + "]", "duplicate type");
    out.push_back(std::move(s));
  }
  return out;
}

json function_spec(const json& v, const std::string& path) {
  only_keys(v, path, {"constant", "product", "table"});
  if (v.size() != 1) fail(path, "give exactly one of constant, product, table");
  if (v.contains("constant")) return {{"constant", rate(v.at("constant"), path + ".constant")}};
  if (v.contains("product")) return {{"product", numbers(v.at("product"), path + ".product", 0.0, true)}};
  const auto& t = v.at("table");
  if (!t.is_array()) fail(path + ".table", "expected an array of [state, value] pairs");
  json out = json::array();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto q = path + ".table[" + std::to_string(i) + "]";
    if (!t[i].is_array() || t[i].size() != 2) fail(q, "expected [state, value]");
    out.push_back(json::array({state_of(t[i][0], q + "[0]"), rate(t[i][1], q + "[1]")}));
  }
  return {{"table", out}};
}

std::function<double(const State&)> make_function(const json& f) {
  if (f.contains("constant")) {
    const double c = f.at("constant").get<double>();
    return [c](const State&) { return c; };
  }
  if (f.contains("product")) {
    const auto rho = f.at("product").get<std::vector<double>>();
    return [rho](const State& x) {
      double v = 1.0;
      for (std::size_t i = 0; i < x.size() && i < rho.size(); ++i) v *= std::pow(rho[i], x[i]);
      return v;
    };
  }
  std::map<State, double> table;
  for (const auto& e : f.at("table")) table[e[0].get<State>()] = e[1].get<double>();
  return [table](const State& x) {
    auto it = table.find(x);
    return it == table.end() ? 0.0 : it->second;
  };
}

json normalize_model(const json& m) {
  const std::string path = "model";
  if (!m.is_object()) fail(path, "expected an object");
  if (!m.contains("kind") || !m.at("kind").is_string()) fail("model.kind", "required string; valid kinds: " + join(model_kinds()));
  const auto kind = m.at("kind").get<std::string>();
  if (std::find(model_kinds().begin(), model_kinds().end(), kind) == model_kinds().end()) {
    fail("model.kind", "unknown kind '" + kind + "'; valid kinds: " + join(model_kinds()));
  }
  json out{{"kind", kind}};
  auto p = [&](const std::string& k) { return path + "." + k; };
  if (kind == "birth_death") {
    only_keys(m, path, {"kind", "up", "down", "boundary_up"});
    auto up = numbers(field(m, "up", path), p("up"), 0.0, true);
    auto down = numbers(field(m, "down", path), p("down"), 0.0, true);
    if (up.empty() || up.size() != down.size()) fail(p("down"), "needs as many entries as up (at least one)");
    out["up"] = up;
    out["down"] = down;
    out["boundary_up"] = m.contains("boundary_up") ? number(m.at("boundary_up"), p("boundary_up"), 0.0) : 0.0;
  } else if (kind == "mm1" || kind == "mms") {
    if (kind == "mm1") {
      only_keys(m, path, {"kind", "lambda", "mu"});
    } else {
      only_keys(m, path, {"kind", "lambda", "mu", "servers"});
      out["servers"] = integer(field(m, "servers", path), p("servers"), 1);
    }
    out["lambda"] = rate(field(m, "lambda", path), p("lambda"));
    out["mu"] = rate(field(m, "mu", path), p("mu"));
  } else if (kind == "batch_service") {
    only_keys(m, path, {"kind", "lambda", "mu", "batch_dist", "counting"});
    out["lambda"] = rate(field(m, "lambda", path), p("lambda"));
    out["mu"] = rate(field(m, "mu", path), p("mu"));
    auto dist = numbers(field(m, "batch_dist", path), p("batch_dist"), 0.0, false);
    double s = 0.0;
    for (double v : dist) s += v;
    if (dist.empty() || std::abs(s - 1.0) > 1e-9) fail(p("batch_dist"), "must be a probability vector");
    out["batch_dist"] = dist;
    const std::string counting = m.value("counting", "all");
    if (counting != "all" && counting != "full") fail(p("counting"), "must be \"all\" or \"full\"");
    out["counting"] = counting;
  } else if (kind == "symmetric") {
    only_keys(m, path, {"kind", "alpha", "eta", "erlang", "discipline"});
    auto alpha = numbers(field(m, "alpha", path), p("alpha"), 0.0, true);
    if (alpha.empty()) fail(p("alpha"), "at least one type required");
    out["alpha"] = alpha;
    if (m.contains("eta") == m.contains("erlang")) fail(path, "give exactly one of eta, erlang");
    if (m.contains("eta")) {
      const auto& e = m.at("eta");
      if (!e.is_array() || e.size() != alpha.size()) fail(p("eta"), "one stage-rate list per type required");
      json rows = json::array();
      for (std::size_t u = 0; u < e.size(); ++u) {
        auto r = numbers(e[u], p("eta") + "[" + std::to_string(u) + "]", 0.0, true);
        if (r.empty()) fail(p("eta") + "[" + std::to_string(u) + "]", "at least one stage required");
        rows.push_back(r);
      }
      out["eta"] = rows;
    } else {
      const auto& e = m.at("erlang");
      if (!e.is_array() || e.size() != alpha.size()) fail(p("erlang"), "one {k, mean} per type required");
      json rows = json::array();
      for (std::size_t u = 0; u < e.size(); ++u) {
        const auto q = p("erlang") + "[" + std::to_string(u) + "]";
        only_keys(e[u], q, {"k", "mean"});
        rows.push_back({{"k", integer(field(e[u], "k", q), q + ".k", 1)}, {"mean", rate(field(e[u], "mean", q), q + ".mean")}});
      }
      out["erlang"] = rows;
    }
    const std::string d = m.value("discipline", "ps");
    if (d != "ps" && d != "lcfs" && d != "fcfs") fail(p("discipline"), "must be ps, lcfs or fcfs");
    out["discipline"] = d;
  } else if (kind == "reacting" || kind == "self_reacting" || kind == "explicit") {
    std::set<State> known;
    out["states"] = states_field(m, path, known);
    if (kind == "explicit") {
      only_keys(m, path, {"kind", "states", "rates", "parts", "gamma", "closed_form"});
      out["rates"] = triples(field(m, "rates", path), p("rates"), known);
      json parts = json::object();
      if (m.contains("parts")) {
        if (!m.at("parts").is_object()) fail(p("parts"), "expected an object keyed by label");
        for (const auto& [k, v] : m.at("parts").items()) parts[k] = triples(v, p("parts") + "." + k, known);
      }
      out["parts"] = parts;
      json gamma = json::object();
      if (m.contains("gamma")) {
        if (!m.at("gamma").is_object()) fail(p("gamma"), "expected an object label -> label");
        for (const auto& [k, v] : m.at("gamma").items()) {
          if (!parts.contains(k)) fail(p("gamma") + "." + k, "unknown label");
          if (!v.is_string() || !parts.contains(v.get<std::string>())) fail(p("gamma") + "." + k, "image must be a label");
          gamma[k] = v;
        }
      }
      out["gamma"] = gamma;
      if (m.contains("closed_form")) {
        auto w = numbers(m.at("closed_form"), p("closed_form"), 0.0, false);
        if (w.size() != out["states"].size()) fail(p("closed_form"), "one weight per state required");
        out["closed_form"] = w;
      }
    } else if (kind == "reacting") {
      only_keys(m, path, {"kind", "states", "types", "alpha", "arrival", "departure", "internal"});
      const auto types = type_list(m, path, false);
      out["types"] = types;
      auto alpha = numbers(field(m, "alpha", path), p("alpha"), 0.0, true);
      if (alpha.size() != types.size()) fail(p("alpha"), "one arrival rate per type required");
      out["alpha"] = alpha;
      out["arrival"] = typed_triples(m, "arrival", path, types, known, true);
      out["departure"] = typed_triples(m, "departure", path, types, known, false);
      out["internal"] = m.contains("internal") ? triples(m.at("internal"), p("internal"), known) : json::array();
    } else {
      only_keys(m, path, {"kind", "states", "types", "release", "routing", "arrival", "internal"});
      const auto types = type_list(m, path, true);
      out["types"] = types;
      out["release"] = typed_triples(m, "release", path, types, known, false);
      out["routing"] = matrix(field(m, "routing", path), p("routing"), types.size(), types.size());
      out["arrival"] = typed_triples(m, "arrival", path, types, known, true);
      out["internal"] = m.contains("internal") ? triples(m.at("internal"), p("internal"), known) : json::array();
    }
  } else if (kind == "batch_movement") {
    only_keys(m, path, {"kind", "nodes", "types", "routing", "phi", "psi", "population", "weight_by_nu"});
    const auto n = integer(field(m, "nodes", path), p("nodes"), 1);
    out["nodes"] = n;
    const auto& t = field(m, "types", path);
    if (!t.is_array() || t.empty()) fail(p("types"), "expected a nonempty array of batch vectors");
    json types = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto q = p("types") + "[" + std::to_string(i) + "]";
      auto u = ints(t[i], q, 0);
      if (u.size() != static_cast<std::size_t>(n) + 1) fail(q, "batch vectors have nodes + 1 entries");
      types.push_back(u);
    }
    out["types"] = types;
    out["routing"] = matrix(field(m, "routing", path), p("routing"), types.size(), types.size());
    out["phi"] = function_spec(field(m, "phi", path), p("phi"));
    out["psi"] = m.contains("psi") ? function_spec(m.at("psi"), p("psi")) : json{{"constant", 1.0}};
    if (m.contains("population")) out["population"] = integer(m.at("population"), p("population"), 0);
    if (m.contains("weight_by_nu") && !m.at("weight_by_nu").is_boolean()) fail(p("weight_by_nu"), "expected a boolean");
    out["weight_by_nu"] = m.value("weight_by_nu", true);
  } else if (kind == "whittle") {
    only_keys(m, path, {"kind", "nodes", "w", "phi", "psi"});
    const auto n = integer(field(m, "nodes", path), p("nodes"), 1);
    out["nodes"] = n;
    auto w = numbers(field(m, "w", path), p("w"), 0.0, true);
    if (w.size() != static_cast<std::size_t>(n)) fail(p("w"), "one weight per node required");
    out["w"] = w;
    out["phi"] = function_spec(field(m, "phi", path), p("phi"));
    out["psi"] = m.contains("psi") ? function_spec(m.at("psi"), p("psi")) : json{{"constant", 1.0}};
  } else if (kind == "jackson") {
    only_keys(m, path, {"kind", "lambda", "mu", "servers", "routing"});
    auto lambda = numbers(field(m, "lambda", path), p("lambda"), 0.0, false);
    auto mu = numbers(field(m, "mu", path), p("mu"), 0.0, true);
    const std::size_t n = mu.size();
    if (n == 0) fail(p("mu"), "at least one node required");
    if (lambda.size() != n) fail(p("lambda"), "one external rate per node required");
    out["lambda"] = lambda;
    out["mu"] = mu;
    if (m.contains("servers")) {
      auto s = ints(m.at("servers"), p("servers"), 1);
      if (s.size() != n) fail(p("servers"), "one server count per node required");
      out["servers"] = s;
    } else {
      out["servers"] = std::vector<int>(n, 1);
    }
    out["routing"] = m.contains("routing") ? json(matrix(m.at("routing"), p("routing"), n, n))
                                           : json(std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  }
  return out;
}

TruncationSpec parse_truncation(const json& doc, const std::string& kind) {
  TruncationSpec t;
  if (doc.contains("truncation")) {
    const auto& v = doc.at("truncation");
    only_keys(v, "truncation", {"bound", "bounds"});
    if (v.contains("bound")) t.bound = static_cast<int>(integer(v.at("bound"), "truncation.bound", 0));
    if (v.contains("bounds")) t.bounds = ints(v.at("bounds"), "truncation.bounds", 0);
  }
  static const std::set<std::string> single{"mm1", "mms", "batch_service", "symmetric"};
  static const std::set<std::string> multi{"batch_movement", "whittle", "jackson"};
  if (single.count(kind) && !t.bound) fail("truncation.bound", "required for kind " + kind);
  if (multi.count(kind) && !t.bound && t.bounds.empty()) fail("truncation.bounds", "required for kind " + kind);
  if (kind == "symmetric" && t.bound && *t.bound < 1) fail("truncation.bound", "must be >= 1");
  return t;
}

std::vector<int> node_bounds(const ModelSpecFile& spec, std::size_t nodes) {
  if (!spec.truncation.bounds.empty()) {
    if (spec.truncation.bounds.size() != nodes) fail("truncation.bounds", "one bound per node required");
    return spec.truncation.bounds;
  }
  return std::vector<int>(nodes, *spec.truncation.bound);
}

}  // namespace

ModelSpecFile parse_spec_document(const json& doc) {
  only_keys(doc, "$", {"model", "truncation", "checks", "solver", "sim"});
  ModelSpecFile spec;
  if (!doc.contains("model")) fail("model", "required field is missing");
  spec.model = normalize_model(doc.at("model"));
  spec.kind = spec.model.at("kind").get<std::string>();
  spec.truncation = parse_truncation(doc, spec.kind);
  if (doc.contains("checks")) {
    const auto& c = doc.at("checks");
    if (!c.is_array()) fail("checks", "expected an array of check names");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto q = "checks[" + std::to_string(i) + "]";
      if (!c[i].is_string()) fail(q, "expected a string");
      const auto name = c[i].get<std::string>();
      if (std::find(check_names().begin(), check_names().end(), name) == check_names().end()) {
        fail(q, "unknown check '" + name + "'; valid checks: " + join(check_names()));
      }
      spec.checks.push_back(name);
    }
  }
  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    only_keys(s, "solver", {"method", "tol", "max_iter"});
    spec.solver.method = s.value("method", spec.solver.method);
    if (spec.solver.method != "auto" && spec.solver.method != "direct" && spec.solver.method != "power") {
      fail("solver.method", "must be auto, direct or power");
    }
    if (s.contains("tol")) spec.solver.tol = number(s.at("tol"), "solver.tol", 0.0, true);
    if (s.contains("max_iter")) spec.solver.max_iter = static_cast<std::size_t>(integer(s.at("max_iter"), "solver.max_iter", 1));
  }
  if (doc.contains("sim")) {
    const auto& s = doc.at("sim");
    only_keys(s, "sim", {"horizon", "events", "seed", "replications", "label"});
    if (s.contains("horizon")) spec.sim.horizon = number(s.at("horizon"), "sim.horizon", 0.0, true);
    if (s.contains("events")) spec.sim.events = static_cast<std::size_t>(integer(s.at("events"), "sim.events", 100));
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) fail("sim.seed", "expected a nonnegative integer");
      spec.sim.seed = s.at("seed").get<std::uint64_t>();
    }
    if (s.contains("replications")) spec.sim.replications = static_cast<std::size_t>(integer(s.at("replications"), "sim.replications", 1));
    if (s.contains("label")) {
      if (!s.at("label").is_string()) fail("sim.label", "expected a string");
      spec.sim.label = s.at("label").get<std::string>();
    }
  }
  return spec;
}

ModelSpecFile parse_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_spec_document(doc);
}

json to_json(const ModelSpecFile& spec) {
  json doc;
  doc["model"] = spec.model;
  json t = json::object();
  if (spec.truncation.bound) t["bound"] = *spec.truncation.bound;
  if (!spec.truncation.bounds.empty()) t["bounds"] = spec.truncation.bounds;
  doc["truncation"] = t;
  doc["checks"] = spec.checks;
  doc["solver"] = {{"method", spec.solver.method}, {"tol", spec.solver.tol}, {"max_iter", spec.solver.max_iter}};
  json sim{{"events", spec.sim.events}, {"replications", spec.sim.replications}, {"label", spec.sim.label}};
  if (spec.sim.horizon) sim["horizon"] = *spec.sim.horizon;
  if (spec.sim.seed) sim["seed"] = *spec.sim.seed;
  doc["sim"] = sim;
  return doc;
}

std::string print_spec(const ModelSpecFile& spec) { return to_json(spec).dump(2); }

std::string spec_hash(const ModelSpecFile& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(spec).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

SpacePtr space_from(const json& states) {
  std::vector<State> s;
  for (const auto& v : states) s.push_back(v.get<State>());
  const std::size_t dim = s.front().size();
  return StateSpace::make(dim, std::move(s));
}

RateMatrix matrix_from(const SpacePtr& space, const json& entries) {
  std::vector<Triplet> t;
  for (const auto& e : entries) {
    t.push_back({space->require_index(e[0].get<State>()), space->require_index(e[1].get<State>()), e[2].get<double>()});
  }
  return RateMatrix(space, t);
}

RateMatrix kernel_from(const SpacePtr& space, const json& entries) {
  const auto m = matrix_from(space, entries);
  auto sums = kernels::row_sums(m);
  for (auto& s : sums) s = std::max(0.0, 1.0 - s);
  return RateMatrix(space, m.triplets(), std::move(sums));
}

SymmetricQueueParams symmetric_params(const json& m) {
  const auto alpha = m.at("alpha").get<std::vector<double>>();
  std::vector<std::vector<double>> eta;
  if (m.contains("eta")) {
    eta = m.at("eta").get<std::vector<std::vector<double>>>();
  } else {
    for (const auto& e : m.at("erlang")) eta.push_back(erlang_stages(e.at("k").get<int>(), e.at("mean").get<double>()));
  }
  const auto d = m.at("discipline").get<std::string>();
  if (d == "lcfs") return preemptive_lcfs(alpha, eta);
  if (d == "fcfs") return fcfs(alpha, eta);
  return processor_sharing(alpha, eta);
}

}  // namespace

BuiltModel build_model(const ModelSpecFile& spec) {
  const auto& m = spec.model;
  const auto& kind = spec.kind;
  BuiltModel out;
  if (kind == "birth_death") {
    out.model = build_birth_death(m.at("up").get<std::vector<double>>(), m.at("down").get<std::vector<double>>(),
                                  m.at("boundary_up").get<double>());
  } else if (kind == "mm1") {
    out.model = build_mm1(m.at("lambda"), m.at("mu"), *spec.truncation.bound);
  } else if (kind == "mms") {
    out.model = build_mms(m.at("lambda"), m.at("mu"), m.at("servers"), *spec.truncation.bound);
  } else if (kind == "batch_service") {
    const auto counting = m.at("counting") == "full" ? BatchCounting::FullBatches : BatchCounting::All;
    out.model = build_batch_service_queue(m.at("lambda"), m.at("mu"), m.at("batch_dist").get<std::vector<double>>(),
                                          counting, *spec.truncation.bound);
  } else if (kind == "symmetric") {
    auto params = symmetric_params(m);
    out.n_max = *spec.truncation.bound;
    if (check_symmetric(params, out.n_max)) {
      out.model = build_symmetric_queue(params, out.n_max);
    } else {
      // Non-symmetric disciplines such as FCFS leave part of the sequence space unreachable.
      auto full = build_reacting_system(symmetric_reacting_spec(params, out.n_max), params.alpha);
      full.name = "symmetric";
      out.model = restrict_to_reachable(full, State(full.space->dimension(), 0));
    }
    out.symmetric = std::move(params);
  } else if (kind == "reacting") {
    ReactingSystemSpec r;
    r.space = space_from(m.at("states"));
    r.types = m.at("types").get<std::vector<std::string>>();
    for (const auto& t : r.types) {
      r.arrival_kernels.push_back(kernel_from(r.space, m.at("arrival").at(t)));
      r.departure_rates.push_back(matrix_from(r.space, m.at("departure").at(t)));
    }
    r.internal = matrix_from(r.space, m.at("internal"));
    out.model = build_reacting_system(r, m.at("alpha").get<std::vector<double>>());
  } else if (kind == "self_reacting") {
    SelfReactingSpec s;
    s.space = space_from(m.at("states"));
    s.types = m.at("types").get<std::vector<std::string>>();
    const auto r = m.at("routing").get<RoutingMatrix>();
    s.routing.assign(s.space->size(), r);
    for (const auto& t : s.types) {
      s.release.push_back(matrix_from(s.space, m.at("release").at(t)));
      s.arrival.push_back(kernel_from(s.space, m.at("arrival").at(t)));
    }
    s.internal = matrix_from(s.space, m.at("internal"));
    out.self_reacting = build_self_reacting(std::move(s));
    out.model = out.self_reacting->model;
  } else if (kind == "batch_movement") {
    BatchMovementParams p;
    p.nodes = m.at("nodes");
    p.types = m.at("types").get<std::vector<std::vector<int>>>();
    const auto r = m.at("routing").get<RoutingMatrix>();
    p.routing = [r](std::size_t u, const State&, std::size_t v) { return r[u][v]; };
    p.phi = make_function(m.at("phi"));
    p.psi = make_function(m.at("psi"));
    p.weight_by_nu = m.at("weight_by_nu");
    if (m.contains("population")) p.population = m.at("population").get<int>();
    p.bounds = node_bounds(spec, static_cast<std::size_t>(p.nodes));
    out.self_reacting = build_batch_movement_network(p);
    out.model = out.self_reacting->model;
  } else if (kind == "whittle") {
    const int n = m.at("nodes");
    out.self_reacting = build_whittle(n, make_function(m.at("phi")), make_function(m.at("psi")),
                                      m.at("w").get<std::vector<double>>(), node_bounds(spec, static_cast<std::size_t>(n)));
    out.model = out.self_reacting->model;
  } else if (kind == "jackson") {
    const auto mu = m.at("mu").get<std::vector<double>>();
    out.network = build_jackson(m.at("lambda").get<std::vector<double>>(), mu, m.at("servers").get<std::vector<int>>(),
                                m.at("routing").get<std::vector<std::vector<double>>>(), node_bounds(spec, mu.size()));
    auto& q = out.model;
    q.name = "jackson";
    q.q = joint_generator(*out.network);
    q.space = q.q.space_ptr();
    q.family = SubTransitionFamily(q.q, {}, {});
    q.closed_form_pi = product_form_distribution(*out.network, solve_traffic(*out.network));
  } else if (kind == "explicit") {
    auto& q = out.model;
    q.name = "explicit";
    q.space = space_from(m.at("states"));
    q.q = matrix_from(q.space, m.at("rates"));
    std::vector<std::string> labels;
    std::vector<RateMatrix> parts;
    for (const auto& [k, v] : m.at("parts").items()) {
      labels.push_back(k);
      parts.push_back(matrix_from(q.space, v));
    }
    q.family = SubTransitionFamily(q.q, labels, parts, m.at("gamma").get<std::map<std::string, std::string>>());
    if (m.contains("closed_form")) {
      // Weights follow the order of the states list, which need not be sorted.
      std::vector<double> w(q.space->size());
      const auto& states = m.at("states");
      for (std::size_t i = 0; i < states.size(); ++i) {
        w[q.space->require_index(states[i].get<State>())] = m.at("closed_form")[i].get<double>();
      }
      q.closed_form_pi = Measure(q.space, std::move(w)).normalized();
    }
  }
  return out;
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolverDidNotConverge:
    case ErrorCode::NoConvergence:
    case ErrorCode::NotIrreducible:
    case ErrorCode::AbsorbingStateReached:
    case ErrorCode::NoPositiveSolution:
      return kSolverFailure;
    default:
      return kInputError;
  }
}

json state_json(const State& s) { return json(s); }

std::string coords(const State& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ":" : "") + std::to_string(s[i]);
  return out;
}

json verdict(const std::string& name, bool pass, double residual, double tol) {
  return {{"check", name}, {"pass", pass}, {"residual", residual}, {"tol", tol}};
}

Measure solve(const QueueModel& m, const SolverSpec& s, json* info = nullptr) {
  SolverOptions o;
  o.method = s.method == "direct" ? SolveMethod::Direct : s.method == "power" ? SolveMethod::Power : SolveMethod::Auto;
  o.iter_tol = s.tol;
  o.max_iter = s.max_iter;
  auto r = solve_stationary(m.q, o);
  if (info) {
    (*info)["method"] = r.method == SolveMethod::Direct ? "direct" : "power";
    (*info)["iterations"] = r.iterations;
    (*info)["residual"] = r.residual;
  }
  return r.pi;
}

struct Context {
  const ModelSpecFile& spec;
  const RunOptions& opts;
  double tol;
  std::uint64_t seed;
};

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  ensure_dir(dir);
  std::ofstream f(std::filesystem::path(dir) / name);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + name + " in " + dir);
  f.precision(17);
  return f;
}

std::map<std::string, RateMatrix> departures_of(const QueueModel& m) {
  try {
    return m.departures_by_type();
  } catch (const Error&) {
    return {};
  }
}

double max_fit_residual(const QuasiReversibility& qr) {
  double r = 0.0;
  for (const auto& [_, f] : qr.fits) r = std::max(r, f.residual);
  return r;
}

json run_check(const std::string& name, const BuiltModel& b, const Measure& pi, const Context& ctx, bool& input_error) {
  const auto& m = b.model;
  const double tol = ctx.tol;
  const auto boundary = truncation_boundary(m.q);
  auto not_applicable = [&](const std::string& why) {
    input_error = true;
    return json{{"check", name}, {"pass", false}, {"error", why}};
  };
  if (name == "stationary") {
    const double r = kernels::balance_residual(m.q, pi.weights());
    return verdict(name, r <= tol, r, tol);
  }
  if (name == "closed_form") {
    if (!m.closed_form_pi) return not_applicable("model has no closed form");
    const double r = kernels::max_abs_distance(pi.weights(), m.closed_form_pi->weights());
    return verdict(name, r <= tol, r, tol);
  }
  if (name == "reversible") {
    const double r = detailed_balance_residual(m.q, pi);
    return verdict(name, r <= tol, r, tol);
  }
  if (name == "kelly") {
    const auto k = kelly_check(m.q, reverse(m.q, pi), pi, tol);
    auto v = verdict(name, k.pass(), std::max(k.balance_residual, k.conservation_residual), tol);
    v["verdict"] = to_string(k.verdict);
    return v;
  }
  if (name == "local_balance") {
    const auto lb = check_local_balance(m.q, pi, PairPartition::singletons(m.q), tol);
    double r = 0.0;
    for (const auto& blk : lb.blocks) r = std::max(r, blk.residual);
    return verdict(name, lb.all_pass(), r, tol);
  }
  if (name == "quasi" || name == "poisson_backward") {
    const auto deps = departures_of(m);
    if (deps.empty()) return not_applicable("model has no typed departure parts");
    if (name == "quasi") {
      const auto qr = quasi_reversibility(deps, pi, tol, boundary);
      auto v = verdict(name, qr.holds, max_fit_residual(qr), tol);
      json beta = json::object();
      for (const auto& [t, f] : qr.fits) beta[t] = f.rate;
      v["beta"] = beta;
      return v;
    }
    bool all = true;
    double r = 0.0;
    json beta = json::object();
    for (const auto& [t, qd] : deps) {
      const auto rate = poisson_backward(qd, pi, tol, boundary);
      all = all && rate.has_value();
      r = std::max(r, fit_departure_rate(qd, pi, boundary).residual);
      beta[t] = rate ? json(*rate) : json(nullptr);
    }
    auto v = verdict(name, all, r, tol);
    v["beta"] = beta;
    return v;
  }
  if (name == "gamma") {
    if (departures_of(m).empty()) return not_applicable("gamma check needs arrival and departure labels");
    const auto g = check_gamma_reversibility(m.family, pi, reacting_predicates(m.family, boundary), tol);
    // Residual: worst class fit of the reversed parts.
    const auto rev = gamma_reverse(m.family, pi);
    double r = 0.0;
    for (std::size_t u = 0; u < m.family.label_count(); ++u) {
      const auto& l = m.family.labels()[u];
      if (l.empty()) continue;
      if (l[0] == 'a') r = std::max(r, fit_arrival_rate(rev[u], pi, boundary).residual);
      if (l[0] == 'd') r = std::max(r, fit_departure_rate(rev[u], pi, boundary).residual);
    }
    auto v = verdict(name, g.pass, r, tol);
    v["failed_at"] = g.failed_at;
    return v;
  }
  if (name == "symmetric") {
    if (!b.symmetric) return not_applicable("only symmetric models have a service discipline");
    return verdict(name, check_symmetric(*b.symmetric, b.n_max, tol), 0.0, tol);
  }
  if (name == "routing_reversal") {
    if (!b.self_reacting) return not_applicable("only self-reacting models have routing");
    const auto r = check_routing_reversal(*b.self_reacting, pi, tol);
    auto v = verdict(name, r.equivalent(), std::max(r.departure_residual, r.invariance_residual), tol);
    v["departure_residual"] = r.departure_residual;
    v["invariance_residual"] = r.invariance_residual;
    v["departure_holds"] = r.departure_holds;
    v["reversed_invariant"] = r.reversed_invariant;
    return v;
  }
  if (name == "product_form") {
    if (!b.network) return not_applicable("only network models have a product form");
    const auto rep = verify_product_form(*b.network, std::max(tol, 1e-6));
    auto v = verdict(name, rep.pass, rep.tv_distance, std::max(tol, 1e-6));
    v["leak"] = rep.leak;
    return v;
  }
  return not_applicable("unknown check");
}

std::vector<std::string> default_checks(const BuiltModel& b) {
  if (b.network) return {"stationary", "kelly", "closed_form", "product_form"};
  std::vector<std::string> c{"stationary", "kelly", "reversible"};
  if (b.model.closed_form_pi) c.push_back("closed_form");
  if (!departures_of(b.model).empty()) {
    c.push_back("quasi");
    c.push_back("gamma");
    c.push_back("poisson_backward");
  }
  if (b.symmetric) c.push_back("symmetric");
  if (b.self_reacting) c.push_back("routing_reversal");
  return c;
}

json pi_table(const Measure& pi, const std::optional<Measure>& closed) {
  json rows = json::array();
  for (std::size_t i = 0; i < pi.size(); ++i) {
    json r{{"state", state_json(pi.space().state(i))}, {"p", pi[i]}};
    if (closed) r["closed_form"] = (*closed)[i];
    rows.push_back(r);
  }
  return rows;
}

void write_pi_csv(const std::string& dir, const Measure& pi, const std::optional<Measure>& closed) {
  auto f = open_csv(dir, "pi.csv");
  f << "state,p" << (closed ? ",closed_form" : "") << '\n';
  for (std::size_t i = 0; i < pi.size(); ++i) {
    f << coords(pi.space().state(i)) << ',' << pi[i];
    if (closed) f << ',' << (*closed)[i];
    f << '\n';
  }
}

json burke_json(const BurkeReport& r) {
  return {{"seed", r.seed},         {"stream", r.stream},     {"count", r.count},       {"elapsed", r.elapsed},
          {"rate", r.rate},         {"ci", {r.ci_low, r.ci_high}}, {"ks_d", r.ks_d},   {"ks_p", r.ks_p},
          {"lag1", r.lag1},         {"future_corr", r.future_corr}, {"bound", r.bound}, {"warm_start", r.warm_start},
          {"poisson", r.poisson()}, {"future_independent", r.future_pass()}};
}

int command_body(const Context& ctx, json& rep) {
  const auto& cmd = ctx.opts.command;
  if (cmd == "network") {
    if (ctx.spec.kind != "jackson") throw SchemaError("model.kind", "the network command needs a jackson model");
    const auto& m = ctx.spec.model;
    const auto mu = m.at("mu").get<std::vector<double>>();
    const auto net = build_jackson(m.at("lambda").get<std::vector<double>>(), mu, m.at("servers").get<std::vector<int>>(),
                                   m.at("routing").get<std::vector<std::vector<double>>>(), node_bounds(ctx.spec, mu.size()));
    const double tol = ctx.opts.tol ? *ctx.opts.tol : 1e-6;
    const auto pf = verify_product_form(net, tol);
    json nodes = json::array();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      nodes.push_back({{"node", i}, {"name", net.nodes[i].name}, {"types", net.nodes[i].spec.types},
                       {"alpha", pf.traffic.alpha[i]}, {"beta", pf.traffic.beta[i]}});
    }
    json failures = json::array();
    for (const auto& f : pf.traffic.failures) failures.push_back({{"node", f.node}, {"type", f.type}, {"residual", f.residual}});
    rep["traffic"] = {{"nodes", nodes},
                      {"converged", pf.traffic.converged},
                      {"residual", pf.traffic.residual},
                      {"iterations", pf.traffic.iterations},
                      {"failures", failures}};
    rep["product_form"] = {{"tv_distance", pf.tv_distance}, {"residual", pf.residual}, {"leak", pf.leak},
                           {"states", pf.product.size()}};
    rep["verdicts"] = json::array({verdict("product_form", pf.pass, pf.tv_distance, tol)});
    if (ctx.opts.out_dir) {
      auto f = open_csv(*ctx.opts.out_dir, "product_form.csv");
      f << "state,product,joint\n";
      for (std::size_t x = 0; x < pf.product.size(); ++x) {
        f << coords(pf.product.space().state(x)) << ',' << pf.product[x] << ',' << pf.joint[x] << '\n';
      }
    }
    return pf.pass ? kOk : kCheckFailed;
  }

  const auto built = build_model(ctx.spec);
  const auto& m = built.model;
  rep["states"] = m.q.size();
  if (cmd == "simulate") {
    BurkeConfig c;
    c.label = ctx.spec.sim.label;
    c.departures = ctx.spec.sim.events;
    c.horizon = ctx.spec.sim.horizon;
    c.seed = ctx.seed;
    c.keep_trajectory = ctx.opts.out_dir.has_value();
    std::vector<BurkeReport> reps;
    if (ctx.spec.sim.replications > 1) {
      reps = burke_replications(m, c, ctx.spec.sim.replications);
    } else {
      reps.push_back(burke_report(m, c));
    }
    json list = json::array();
    std::size_t flagged = 0;
    for (const auto& r : reps) {
      list.push_back(burke_json(r));
      if (!r.poisson()) ++flagged;
    }
    rep["replications"] = list;
    rep["flagged"] = flagged;
    const bool pass = 2 * flagged <= reps.size();
    rep["verdicts"] = json::array({verdict("poisson_departures", pass, static_cast<double>(flagged) / reps.size(), 0.5)});
    if (ctx.opts.out_dir && reps.front().trajectory) {
      ensure_dir(*ctx.opts.out_dir);
      write_trajectory_csv(*reps.front().trajectory, (std::filesystem::path(*ctx.opts.out_dir) / "trajectory.csv").string());
    }
    return pass ? kOk : kCheckFailed;
  }

  json solver;
  const auto pi = solve(m, ctx.spec.solver, &solver);
  rep["solver"] = solver;
  if (cmd == "solve") {
    rep["pi"] = pi_table(pi, m.closed_form_pi);
    if (m.closed_form_pi) rep["closed_form_error"] = kernels::max_abs_distance(pi.weights(), m.closed_form_pi->weights());
    if (ctx.opts.out_dir) write_pi_csv(*ctx.opts.out_dir, pi, m.closed_form_pi);
    return kOk;
  }
  if (cmd == "reverse") {
    const auto rq = reverse(m.q, pi);
    json entries = json::array();
    for (const auto& t : rq.triplets()) {
      entries.push_back({{"from", state_json(rq.space().state(t.from))}, {"to", state_json(rq.space().state(t.to))},
                         {"rate", t.value}});
    }
    rep["reversed"] = entries;
    const double r = detailed_balance_residual(m.q, pi);
    const auto k = kelly_check(m.q, rq, pi, ctx.tol);
    rep["reversible"] = r <= ctx.tol;
    rep["verdicts"] = json::array({verdict("reversible", r <= ctx.tol, r, ctx.tol),
                                   verdict("kelly", k.pass(), std::max(k.balance_residual, k.conservation_residual), ctx.tol)});
    if (ctx.opts.out_dir) {
      auto f = open_csv(*ctx.opts.out_dir, "reversed.csv");
      f << "from,to,rate\n";
      for (const auto& t : rq.triplets()) f << coords(rq.space().state(t.from)) << ',' << coords(rq.space().state(t.to)) << ',' << t.value << '\n';
      write_pi_csv(*ctx.opts.out_dir, pi, m.closed_form_pi);
    }
    return kOk;
  }
  // check
  const auto names = ctx.spec.checks.empty() ? default_checks(built) : ctx.spec.checks;
  json verdicts = json::array();
  bool all = true, input_error = false;
  for (const auto& n : names) {
    auto v = run_check(n, built, pi, ctx, input_error);
    all = all && v.at("pass").get<bool>();
    verdicts.push_back(std::move(v));
  }
  rep["verdicts"] = verdicts;
  if (input_error) return kInputError;
  return all ? kOk : kCheckFailed;
}

}  // namespace

RunResult run(const ModelSpecFile& spec, const RunOptions& options) {
  RunResult res;
  auto& rep = res.report;
  rep["schema_version"] = kSchemaVersion;
  rep["tool"] = {{"name", "qrev"}, {"version", kToolVersion}};
  rep["command"] = options.command;
  rep["kind"] = spec.kind;
  rep["spec_hash"] = spec_hash(spec);
  const std::uint64_t seed = options.seed ? *options.seed : spec.sim.seed ? *spec.sim.seed : default_seed();
  rep["seed"] = seed;
  const double tol = options.tol ? *options.tol : 1e-9;
  rep["tol"] = tol;
  try {
    if (std::find(commands().begin(), commands().end(), options.command) == commands().end()) {
      throw SchemaError("command", "unknown command '" + options.command + "'; valid commands: " + join(commands()));
    }
    res.exit_code = command_body(Context{spec, options, tol, seed}, rep);
  } catch (const SchemaError& e) {
    rep["error"] = {{"code", "SchemaError"}, {"path", e.path()}, {"message", e.reason()}};
    res.exit_code = kInputError;
  } catch (const Error& e) {
    rep["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    res.exit_code = exit_code_for(e.code());
  } catch (const std::exception& e) {
    rep["error"] = {{"code", "InvalidArgument"}, {"message", e.what()}};
    res.exit_code = kInputError;
  }
  rep["ok"] = res.exit_code == kOk;
  return res;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reversibility and product-form toolkit for queueing Markov chains", "qrev"};
  std::string command, spec_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  app.add_option("command", command, "solve | reverse | check | network | simulate")->required();
  app.add_option("--spec", spec_path, "model spec file (JSON)")->required();
  app.add_option("--out", out_dir, "directory for CSV sidecars");
  app.add_option("--seed", seed, "simulation seed (default: QREV_SEED or 42)");
  app.add_option("--tol", tol, "check tolerance");
  auto error_report = [&](const std::string& code, const std::string& msg, const std::string& path) {
    json rep{{"schema_version", kSchemaVersion}, {"tool", {{"name", "qrev"}, {"version", kToolVersion}}},
             {"command", command}, {"ok", false}};
    rep["error"] = {{"code", code}, {"message", msg}};
    if (!path.empty()) rep["error"]["path"] = path;
    out << rep.dump(2) << '\n';
    return static_cast<int>(kInputError);
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    err << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return error_report("UsageError", e.what(), "");
  }
  std::ifstream f(spec_path);
  if (!f) return error_report("InvalidArgument", "cannot read spec file " + spec_path, "");
  std::stringstream buf;
  buf << f.rdbuf();
  ModelSpecFile spec;
  try {
    spec = parse_spec(buf.str());
  } catch (const SchemaError& e) {
    err << "schema error at " << e.path() << ": " << e.reason() << '\n';
    return error_report("SchemaError", e.reason(), e.path());
  }
  const auto res = run(spec, RunOptions{command, out_dir, seed, tol});
  out << res.report.dump(2) << '\n';
  if (res.report.contains("error")) err << res.report["error"]["message"].get<std::string>() << '\n';
  return res.exit_code;
}

}  // namespace qrev::cli
