#include "cvgp/runner.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cvgp {

using nlohmann::json;

namespace {
constexpr uint64_t kOracleStream = 41;
constexpr uint64_t kTestStream = 42;
constexpr uint64_t kRecoverStream = 43;
}  // namespace

std::string ops_to_string(const std::vector<Op>& ops) {
  std::string out;
  for (size_t i = 0; i < ops.size(); ++i) {
    if (i) out += ',';
    out += op_spec(ops[i]).name;
  }
  return out;
}

std::vector<Op> ops_from_string(const std::string& spec) {
  std::vector<Op> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto op = op_from_name(item);
    if (!op) throw std::invalid_argument("unknown operator '" + item + "'");
    out.push_back(*op);
  }
  if (out.empty()) throw std::invalid_argument("empty operator set");
  return out;
}

RunResult run_search(const RunConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  if (config.engine != "cvgp" && config.engine != "gp")
    throw std::invalid_argument("engine must be 'cvgp' or 'gp'");
  if (config.truth_text.empty()) throw std::invalid_argument("missing truth");

  ExpressionTree truth = parse(config.truth_text);
  int m = config.num_vars > 0 ? config.num_vars : std::max(1, max_var_index(truth) + 1);

  DataOracle oracle = make_oracle(truth, config.sigma,
                                  mix_seed({config.master_seed, kOracleStream}), m,
                                  config.range);

  CvgpConfig engine_config;
  engine_config.gp = config.gp;
  engine_config.operators = config.operators;
  engine_config.num_trials = config.num_trials;
  engine_config.batch_size = config.batch_size;
  engine_config.fit_thresh = config.fit_thresh;
  engine_config.var_thresh = config.var_thresh;
  engine_config.fitter = config.fitter;
  engine_config.master_seed = config.master_seed;
  engine_config.threads = config.threads;

  std::vector<int> order = config.variable_order;
  if (order.empty())
    for (int v = 0; v < m; ++v) order.push_back(v);

  auto schedule = config.engine == "cvgp" ? single_release_schedule(order)
                                          : joint_release_schedule(m);
  CvgpResult search = cvgp_run(oracle, engine_config, schedule);

  // held-out scoring: fresh data, every variable free
  TrialBatch test = make_trial(oracle, VariablePartition::all_free(m), {},
                               config.test_size,
                               mix_seed({config.master_seed, kTestStream}));

  RunResult result;
  result.stages = std::move(search.stages);
  for (size_t rank = 0; rank < search.population.hall_of_fame.size(); ++rank) {
    const HofEntry& entry = search.population.hall_of_fame[rank];
    HofReport report;
    report.expr = entry.text;
    report.fitness = entry.fitness;
    report.nodes = entry.nodes;

    EvalProgram prog(entry.tree);
    std::vector<double> pred(test.batch_size());
    prog.run(test.cols, pred);
    for (double& p : pred)
      if (!std::isfinite(p)) p = std::numeric_limits<double>::infinity();
    report.test = compute_metrics(pred, test.y);

    report.recovered = recovered(entry.tree, truth, config.range,
                                 mix_seed({config.master_seed, kRecoverStream,
                                           static_cast<uint64_t>(rank)}));
    result.hof.push_back(std::move(report));
  }

  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

// -- json ----------------------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw std::invalid_argument("unknown config key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void load(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  check_keys(j,
             {"engine", "truth", "num_vars", "operators", "sigma", "master_seed", "gp",
              "trials", "freeze", "fitter", "sample_range", "test_size",
              "variable_order", "threads"},
             "run config");
  load(j, "engine", cfg.engine);
  load(j, "truth", cfg.truth_text);
  load(j, "num_vars", cfg.num_vars);
  if (j.contains("operators")) cfg.operators = ops_from_string(j.at("operators"));
  load(j, "sigma", cfg.sigma);
  load(j, "master_seed", cfg.master_seed);
  load(j, "test_size", cfg.test_size);
  load(j, "threads", cfg.threads);
  if (j.contains("variable_order")) {
    cfg.variable_order.clear();
    for (int v : j.at("variable_order")) cfg.variable_order.push_back(v - 1);
  }
  if (j.contains("gp")) {
    const json& g = j.at("gp");
    check_keys(g,
               {"pool_size", "generations", "hof_size", "p_mutate", "p_mate",
                "max_nodes", "init_depth", "mutate_depth"},
               "gp");
    load(g, "pool_size", cfg.gp.pool_size);
    load(g, "generations", cfg.gp.generations);
    load(g, "hof_size", cfg.gp.hof_size);
    load(g, "p_mutate", cfg.gp.p_mutate);
    load(g, "p_mate", cfg.gp.p_mate);
    load(g, "max_nodes", cfg.gp.max_nodes);
    load(g, "init_depth", cfg.gp.init_depth);
    load(g, "mutate_depth", cfg.gp.mutate_depth);
  }
  if (j.contains("trials")) {
    const json& t = j.at("trials");
    check_keys(t, {"k", "batch_size"}, "trials");
    load(t, "k", cfg.num_trials);
    load(t, "batch_size", cfg.batch_size);
  }
  if (j.contains("freeze")) {
    const json& f = j.at("freeze");
    check_keys(f, {"fit_thresh", "var_thresh"}, "freeze");
    load(f, "fit_thresh", cfg.fit_thresh);
    load(f, "var_thresh", cfg.var_thresh);
  }
  if (j.contains("fitter")) {
    const json& f = j.at("fitter");
    check_keys(f, {"restarts", "max_iters", "init_lo", "init_hi", "tol",
                   "early_exit_mse"},
               "fitter");
    load(f, "restarts", cfg.fitter.restarts);
    load(f, "max_iters", cfg.fitter.max_iters);
    load(f, "init_lo", cfg.fitter.init_lo);
    load(f, "init_hi", cfg.fitter.init_hi);
    load(f, "tol", cfg.fitter.tol);
    load(f, "early_exit_mse", cfg.fitter.early_exit_mse);
  }
  if (j.contains("sample_range")) {
    const json& r = j.at("sample_range");
    check_keys(r, {"neg_lo", "neg_hi", "pos_lo", "pos_hi"}, "sample_range");
    load(r, "neg_lo", cfg.range.neg_lo);
    load(r, "neg_hi", cfg.range.neg_hi);
    load(r, "pos_lo", cfg.range.pos_lo);
    load(r, "pos_hi", cfg.range.pos_hi);
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["engine"] = cfg.engine;
  j["truth"] = cfg.truth_text;
  j["num_vars"] = cfg.num_vars;
  j["operators"] = ops_to_string(cfg.operators);
  j["sigma"] = cfg.sigma;
  j["master_seed"] = cfg.master_seed;
  j["gp"] = {{"pool_size", cfg.gp.pool_size},
             {"generations", cfg.gp.generations},
             {"hof_size", cfg.gp.hof_size},
             {"p_mutate", cfg.gp.p_mutate},
             {"p_mate", cfg.gp.p_mate},
             {"max_nodes", cfg.gp.max_nodes},
             {"init_depth", cfg.gp.init_depth},
             {"mutate_depth", cfg.gp.mutate_depth}};
  j["trials"] = {{"k", cfg.num_trials}, {"batch_size", cfg.batch_size}};
  j["freeze"] = {{"fit_thresh", cfg.fit_thresh}, {"var_thresh", cfg.var_thresh}};
  j["fitter"] = {{"restarts", cfg.fitter.restarts},
                 {"max_iters", cfg.fitter.max_iters},
                 {"init_lo", cfg.fitter.init_lo},
                 {"init_hi", cfg.fitter.init_hi},
                 {"tol", cfg.fitter.tol},
                 {"early_exit_mse", cfg.fitter.early_exit_mse}};
  j["sample_range"] = {{"neg_lo", cfg.range.neg_lo},
                       {"neg_hi", cfg.range.neg_hi},
                       {"pos_lo", cfg.range.pos_lo},
                       {"pos_hi", cfg.range.pos_hi}};
  j["test_size"] = cfg.test_size;
  j["threads"] = cfg.threads;
  if (!cfg.variable_order.empty()) {
    json order = json::array();
    for (int v : cfg.variable_order) order.push_back(v + 1);
    j["variable_order"] = order;
  }
  return j;
}

namespace {

json metrics_to_json(const MetricReport& m) {
  return {{"n", m.n},         {"sigma_y", m.sigma_y}, {"mse", m.mse},
          {"neg_mse", m.neg_mse}, {"nmse", m.nmse},   {"rmse", m.rmse},
          {"nrmse", m.nrmse}, {"inv_nrmse", m.inv_nrmse}};
}

}  // namespace

json run_result_to_json(const RunResult& result) {
  json stages = json::array();
  for (const StageReport& s : result.stages) {
    json freed = json::array();
    for (int v : s.freed_vars) freed.push_back(v + 1);
    stages.push_back({{"stage", s.stage},
                      {"freed_vars", freed},
                      {"best_fitness", s.best_fitness},
                      {"best_expr", s.best_expr},
                      {"members_frozen", s.members_frozen},
                      {"slots_standalone", s.slots_standalone},
                      {"slots_expandable", s.slots_expandable},
                      {"wall_ms", s.wall_ms}});
  }
  json hof = json::array();
  for (size_t rank = 0; rank < result.hof.size(); ++rank) {
    const HofReport& h = result.hof[rank];
    hof.push_back({{"rank", rank},
                   {"expr", h.expr},
                   {"fitness", h.fitness},
                   {"nodes", h.nodes},
                   {"recovered", h.recovered},
                   {"test", metrics_to_json(h.test)}});
  }
  return {{"stages", stages}, {"hof", hof}, {"wall_ms", result.wall_ms}};
}

// -- bench manifests -----------------------------------------------------------

BenchGenConfig bench_config_from_json(const json& j) {
  BenchGenConfig cfg;
  check_keys(j, {"operators", "a", "b", "c", "sigma", "count", "base_seed"},
             "bench config");
  if (j.contains("operators")) cfg.operand_set = ops_from_string(j.at("operators"));
  load(j, "a", cfg.a);
  load(j, "b", cfg.b);
  load(j, "c", cfg.c);
  load(j, "sigma", cfg.sigma);
  load(j, "count", cfg.count);
  load(j, "base_seed", cfg.base_seed);
  return cfg;
}

std::string bench_manifest_jsonl(const BenchGenConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("bench: count must be >= 1");
  std::string out;
  for (int i = 0; i < cfg.count; ++i) {
    BenchmarkConfig bc{cfg.operand_set, cfg.a, cfg.b, cfg.c, cfg.sigma,
                       mix_seed({cfg.base_seed, static_cast<uint64_t>(i)})};
    ExpressionTree truth = gen_truth(bc);
    TermCensus census = term_census(truth);
    if (census.singular != cfg.b || census.cross != cfg.c ||
        static_cast<int>(census.variables.size()) != cfg.a)
      throw std::runtime_error("bench: generated truth failed census validation");
    json line = {{"index", i},
                 {"seed", bc.seed},
                 {"operators", ops_to_string(cfg.operand_set)},
                 {"a", cfg.a},
                 {"b", cfg.b},
                 {"c", cfg.c},
                 {"sigma", cfg.sigma},
                 {"num_vars", cfg.a},
                 {"truth", serialize(truth)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

// -- report tables ---------------------------------------------------------------

std::string csv_quote(const std::string& field) {
  bool needs = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

ReportTables build_report(const std::vector<json>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("report: no run summaries");

  struct Group {
    std::vector<double> nmse;
    int recovered = 0;
    int runs = 0;
  };
  std::map<std::string, Group> groups;
  std::map<std::string, json> keys;

  for (const json& s : summaries) {
    json key = {{"operators", s.at("operators")}, {"a", s.at("a")},
                {"b", s.at("b")},                 {"c", s.at("c")},
                {"sigma", s.at("sigma")},         {"engine", s.at("engine")}};
    std::string id = key.dump();
    Group& g = groups[id];
    keys[id] = key;
    // non-finite NMSE serializes as null; aggregate it as +inf
    double nmse = s.at("nmse").is_number() ? s.at("nmse").get<double>()
                                           : std::numeric_limits<double>::infinity();
    g.nmse.push_back(std::isfinite(nmse) ? nmse : std::numeric_limits<double>::infinity());
    g.recovered += s.at("recovered").get<bool>() ? 1 : 0;
    g.runs += 1;
  }

  std::string qcsv =
      "operands,a,b,c,sigma,engine,runs,nmse_min,nmse_q25,nmse_q50,nmse_q75,nmse_max\n";
  std::string rcsv = "operands,a,b,c,sigma,engine,runs,recovered,rate\n";
  for (const auto& [id, g] : groups) {
    const json& key = keys[id];
    std::string prefix = csv_quote(key.at("operators").get<std::string>()) + "," +
                         key.at("a").dump() + "," + key.at("b").dump() + "," +
                         key.at("c").dump() + "," +
                         format_number(key.at("sigma").get<double>()) + "," +
                         key.at("engine").get<std::string>() + "," +
                         std::to_string(g.runs);
    QuantileSummary q = summarize_quantiles(g.nmse);
    qcsv += prefix + "," + format_number(q.min) + "," + format_number(q.q25) + "," +
            format_number(q.q50) + "," + format_number(q.q75) + "," +
            format_number(q.max) + "\n";
    rcsv += prefix + "," + std::to_string(g.recovered) + "," +
            format_number(static_cast<double>(g.recovered) / g.runs) + "\n";
  }
  return {std::move(qcsv), std::move(rcsv)};
}

}  // namespace cvgp
