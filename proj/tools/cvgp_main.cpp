// Command-line front end. Links only the C API; file layout, worker pool and
// CSV emission live here.
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvgp/capi.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailures = 1;
constexpr int kExitBadConfig = 2;

struct CStr {
  char* p = nullptr;
  ~CStr() { cvgp_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

[[noreturn]] void die_config(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  std::exit(kExitBadConfig);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die_config("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

std::string number_field(const json& v) {
  // non-finite metric values arrive as null
  if (v.is_null()) return "inf";
  return v.dump();
}

uint64_t mix_pair(uint64_t a, uint64_t b) {
  auto split = [](uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  uint64_t h = 0x8000000000000001ULL;
  h = split(h ^ split(a));
  return split(h ^ split(b));
}

std::vector<uint64_t> parse_seed_list(const std::string& spec) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) die_config("empty --seeds list");
  return seeds;
}

// -- run ------------------------------------------------------------------

struct RunJob {
  int index = 0;
  json config;       // full run config handed to the engine
  json provenance;   // manifest line info + seed
  fs::path dir;
};

std::string hof_csv(const json& result) {
  std::string csv = "rank,fitness,nodes,recovered,expression\n";
  for (const json& h : result.at("hof")) {
    std::string expr = h.at("expr").get<std::string>();
    csv += h.at("rank").dump() + "," + number_field(h.at("fitness")) + "," +
           h.at("nodes").dump() + "," + (h.at("recovered").get<bool>() ? "1" : "0") +
           ",\"" + expr + "\"\n";
  }
  return csv;
}

std::string metrics_csv(const json& result) {
  std::string csv = "rank,n,sigma_y,mse,neg_mse,nmse,rmse,nrmse,inv_nrmse\n";
  for (const json& h : result.at("hof")) {
    const json& t = h.at("test");
    csv += h.at("rank").dump() + "," + t.at("n").dump() + "," +
           number_field(t.at("sigma_y")) + "," + number_field(t.at("mse")) + "," +
           number_field(t.at("neg_mse")) + "," + number_field(t.at("nmse")) + "," +
           number_field(t.at("rmse")) + "," + number_field(t.at("nrmse")) + "," +
           number_field(t.at("inv_nrmse")) + "\n";
  }
  return csv;
}

std::string stages_jsonl(const json& result) {
  std::string out;
  for (const json& s : result.at("stages")) {
    out += s.dump();
    out += '\n';
  }
  return out;
}

bool execute_run_job(const RunJob& job) {
  CStr result_text;
  if (cvgp_run_search(job.config.dump().c_str(), &result_text.p) != CVGP_OK) {
    std::cerr << "run " << job.index << " failed: " << cvgp_last_error() << "\n";
    return false;
  }
  json result = json::parse(result_text.str());

  fs::create_directories(job.dir);
  json manifest = {{"config", job.config}, {"provenance", job.provenance}};
  write_file_atomic(job.dir / "manifest.json", manifest.dump(2) + "\n");
  write_file_atomic(job.dir / "stages.jsonl", stages_jsonl(result));
  write_file_atomic(job.dir / "hof.csv", hof_csv(result));
  write_file_atomic(job.dir / "metrics.csv", metrics_csv(result));

  const json& hof = result.at("hof");
  bool any_recovered = false;
  for (const json& h : hof) any_recovered = any_recovered || h.at("recovered").get<bool>();
  json summary = {{"engine", job.config.at("engine")},
                  {"operators", job.provenance.at("operators")},
                  {"a", job.provenance.at("a")},
                  {"b", job.provenance.at("b")},
                  {"c", job.provenance.at("c")},
                  {"sigma", job.config.at("sigma")},
                  {"truth_seed", job.provenance.at("truth_seed")},
                  {"master_seed", job.config.at("master_seed")},
                  {"nmse", hof.empty() ? json() : hof.at(0).at("test").at("nmse")},
                  {"recovered", any_recovered},
                  {"wall_ms", result.at("wall_ms")}};
  write_file_atomic(job.dir / "summary.json", summary.dump() + "\n");
  return true;
}

int cmd_run(const std::string& manifest_path, const std::string& config_path,
            const std::string& engine, const std::string& seeds_spec, double noise,
            bool noise_set, const std::string& out_dir, int jobs) {
  json base = json::object();
  if (!config_path.empty()) {
    try {
      base = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      die_config(std::string("bad run config: ") + e.what());
    }
  }
  std::vector<uint64_t> seeds = parse_seed_list(seeds_spec);
  if (const char* env = std::getenv("CVGP_SEED")) seeds = {std::stoull(env)};

  std::vector<json> lines;
  {
    std::stringstream ss(read_file(manifest_path));
    std::string line;
    while (std::getline(ss, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        lines.push_back(json::parse(line));
      } catch (const json::exception& e) {
        die_config(std::string("bad manifest line: ") + e.what());
      }
    }
  }
  if (lines.empty()) die_config("empty manifest");

  std::vector<RunJob> run_jobs;
  int index = 0;
  for (const json& line : lines) {
    for (uint64_t seed : seeds) {
      RunJob job;
      job.index = index;
      job.config = base;
      job.config["engine"] = engine;
      job.config["truth"] = line.at("truth");
      job.config["num_vars"] = line.at("num_vars");
      job.config["operators"] = line.at("operators");
      job.config["sigma"] = noise_set ? noise : line.at("sigma").get<double>();
      job.config["master_seed"] = mix_pair(seed, line.at("seed").get<uint64_t>());
      job.provenance = {{"manifest", manifest_path},
                        {"line_index", line.at("index")},
                        {"operators", line.at("operators")},
                        {"a", line.at("a")},
                        {"b", line.at("b")},
                        {"c", line.at("c")},
                        {"truth_seed", line.at("seed")},
                        {"cli_seed", seed}};
      char name[32];
      std::snprintf(name, sizeof(name), "run_%04d", index);
      job.dir = fs::path(out_dir) / name;
      run_jobs.push_back(std::move(job));
      ++index;
    }
  }

  fs::create_directories(out_dir);
  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= static_cast<int>(run_jobs.size())) return;
      if (!execute_run_job(run_jobs[i])) failures.fetch_add(1);
    }
  };
  int pool = std::max(1, std::min<int>(jobs, static_cast<int>(run_jobs.size())));
  std::vector<std::thread> threads;
  for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();

  std::cout << run_jobs.size() - failures.load() << "/" << run_jobs.size()
            << " runs completed under " << out_dir << "\n";
  return failures.load() ? kExitRunFailures : kExitOk;
}

// -- report ----------------------------------------------------------------

int cmd_report(const std::vector<std::string>& results_dirs, const std::string& out_dir) {
  std::vector<fs::path> summary_files;
  for (const std::string& dir : results_dirs) {
    if (!fs::exists(dir)) die_config("no such results directory: " + dir);
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().filename() == "summary.json")
        summary_files.push_back(entry.path());
  }
  if (summary_files.empty()) die_config("no run summaries found");
  std::sort(summary_files.begin(), summary_files.end());

  std::string jsonl;
  for (const fs::path& p : summary_files) jsonl += read_file(p);

  CStr quantiles, recovery;
  if (cvgp_report_build(jsonl.c_str(), &quantiles.p, &recovery.p) != CVGP_OK)
    die_config(cvgp_last_error());

  fs::create_directories(out_dir);
  write_file_atomic(fs::path(out_dir) / "quantiles.csv", quantiles.str());
  write_file_atomic(fs::path(out_dir) / "recovery.csv", recovery.str());
  std::cout << quantiles.str() << "\n" << recovery.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"control-variable genetic programming for symbolic regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cvgp_version());

  // bench gen
  auto* bench = app.add_subcommand("bench", "benchmark utilities");
  bench->require_subcommand(1);
  auto* gen = bench->add_subcommand("gen", "generate a ground-truth manifest");
  std::string gen_config, gen_out = "manifest.jsonl";
  gen->add_option("--config", gen_config, "bench config JSON file")->required();
  gen->add_option("--out", gen_out, "manifest output path");

  // run
  auto* run = app.add_subcommand("run", "run the search engine over a manifest");
  std::string run_manifest, run_config, run_engine = "cvgp", run_seeds = "0";
  std::string run_out = "results";
  double run_noise = 0.0;
  int run_jobs = 1;
  run->add_option("--manifest", run_manifest, "manifest JSON-lines file")->required();
  run->add_option("--config", run_config, "run config JSON file");
  run->add_option("--engine", run_engine, "search engine")
      ->check(CLI::IsMember({"cvgp", "gp"}));
  run->add_option("--seeds", run_seeds, "comma-separated master seeds");
  auto* noise_opt = run->add_option("--noise", run_noise, "override noise sigma");
  run->add_option("--out", run_out, "results directory");
  run->add_option("--jobs", run_jobs, "parallel runs")->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "aggregate results into tables");
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  report->add_option("dirs", report_dirs, "results directories")->required();
  report->add_option("--out", report_out, "report output directory");

  // count
  auto* count = app.add_subcommand("count", "exact search-space size table");
  int count_l = 21, count_m = 2, count_o = 2;
  std::string count_out;
  count->add_option("--l", count_l, "maximum node count (odd)");
  count->add_option("--m", count_m, "number of variables");
  count->add_option("--o", count_o, "number of binary operators");
  count->add_option("--out", count_out, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  if (gen->parsed()) {
    CStr manifest;
    std::string config = read_file(gen_config);
    if (cvgp_bench_generate(config.c_str(), &manifest.p) != CVGP_OK)
      die_config(cvgp_last_error());
    write_file_atomic(gen_out, manifest.str());
    std::cout << "wrote " << gen_out << "\n";
    return kExitOk;
  }
  if (run->parsed()) {
    return cmd_run(run_manifest, run_config, run_engine, run_seeds, run_noise,
                   noise_opt->count() > 0, run_out, run_jobs);
  }
  if (report->parsed()) {
    return cmd_report(report_dirs, report_out);
  }
  if (count->parsed()) {
    if (count_l % 2 == 0) die_config("--l must be odd");
    std::string csv = "l,A,S\n";
    for (int l = 1; l <= count_l; l += 2) {
      CStr a, s;
      if (cvgp_space_count(l, count_m, count_o, &a.p, &s.p) != CVGP_OK)
        die_config(cvgp_last_error());
      csv += std::to_string(l) + "," + a.str() + "," + s.str() + "\n";
    }
    if (count_out.empty()) {
      std::cout << csv;
    } else {
      write_file_atomic(count_out, csv);
    }
    return kExitOk;
  }
  return kExitBadConfig;
}
