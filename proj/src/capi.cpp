#include "cvgp/capi.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "cvgp/combinatorics.hpp"
#include "cvgp/metrics.hpp"
#include "cvgp/runner.hpp"
#include "cvgp/version.hpp"

using nlohmann::json;

struct cvgp_expr {
  cvgp::ExpressionTree tree;
};

namespace {

thread_local std::string g_last_error = "no error";

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
cvgp_status guarded(Fn&& fn) {
  try {
    fn();
    return CVGP_OK;
  } catch (const cvgp::ParseError& e) {
    g_last_error = e.what();
    return CVGP_ERROR_PARSE;
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return CVGP_ERROR_PARSE;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return CVGP_ERROR_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CVGP_ERROR_RUNTIME;
  }
}

cvgp_status require(bool cond, const char* message) {
  if (cond) return CVGP_OK;
  g_last_error = message;
  return CVGP_ERROR_INVALID;
}

}  // namespace

extern "C" {

const char* cvgp_version(void) { return cvgp::kVersion; }

const char* cvgp_last_error(void) { return g_last_error.c_str(); }

void cvgp_string_free(char* s) { delete[] s; }

cvgp_status cvgp_expr_parse(const char* text, cvgp_expr** out) {
  if (auto st = require(text && out, "null argument")) return st;
  return guarded([&] { *out = new cvgp_expr{cvgp::parse(text)}; });
}

cvgp_status cvgp_expr_serialize(const cvgp_expr* expr, char** out_text) {
  if (auto st = require(expr && out_text, "null argument")) return st;
  return guarded([&] { *out_text = copy_string(cvgp::serialize(expr->tree)); });
}

cvgp_status cvgp_expr_evaluate(const cvgp_expr* expr, const double* point,
                               size_t point_len, double* out_value) {
  if (auto st = require(expr && out_value && (point || point_len == 0), "null argument"))
    return st;
  return guarded([&] {
    *out_value = cvgp::evaluate(expr->tree, std::span<const double>(point, point_len));
  });
}

int cvgp_expr_node_count(const cvgp_expr* expr) {
  return expr ? cvgp::node_count(expr->tree) : 0;
}

int cvgp_expr_depth(const cvgp_expr* expr) {
  return expr ? cvgp::depth(expr->tree) : 0;
}

cvgp_expr* cvgp_expr_clone(const cvgp_expr* expr) {
  return expr ? new cvgp_expr{expr->tree} : nullptr;
}

void cvgp_expr_free(cvgp_expr* expr) { delete expr; }

cvgp_status cvgp_run_search(const char* config_json, char** out_result_json) {
  if (auto st = require(config_json && out_result_json, "null argument")) return st;
  return guarded([&] {
    cvgp::RunConfig config = cvgp::run_config_from_json(json::parse(config_json));
    cvgp::RunResult result = cvgp::run_search(config);
    *out_result_json = copy_string(cvgp::run_result_to_json(result).dump());
  });
}

cvgp_status cvgp_bench_generate(const char* config_json, char** out_manifest_jsonl) {
  if (auto st = require(config_json && out_manifest_jsonl, "null argument")) return st;
  return guarded([&] {
    cvgp::BenchGenConfig config = cvgp::bench_config_from_json(json::parse(config_json));
    *out_manifest_jsonl = copy_string(cvgp::bench_manifest_jsonl(config));
  });
}

cvgp_status cvgp_metrics_compute(const double* pred, const double* y, size_t n,
                                 cvgp_metrics* out) {
  if (auto st = require(pred && y && out, "null argument")) return st;
  return guarded([&] {
    cvgp::MetricReport r = cvgp::compute_metrics(std::span<const double>(pred, n),
                                                 std::span<const double>(y, n));
    *out = {r.mse, r.neg_mse, r.nmse, r.rmse, r.nrmse, r.inv_nrmse, r.sigma_y, r.n};
  });
}

cvgp_status cvgp_quantiles(const double* values, size_t n, double out[5]) {
  if (auto st = require(values && out && n > 0, "need at least one value")) return st;
  return guarded([&] {
    cvgp::QuantileSummary q =
        cvgp::summarize_quantiles(std::vector<double>(values, values + n));
    out[0] = q.min;
    out[1] = q.q25;
    out[2] = q.q50;
    out[3] = q.q75;
    out[4] = q.max;
  });
}

cvgp_status cvgp_recovered(const char* candidate_text, const char* truth_text,
                           uint64_t seed, int* out_flag) {
  if (auto st = require(candidate_text && truth_text && out_flag, "null argument"))
    return st;
  return guarded([&] {
    cvgp::ExpressionTree cand = cvgp::parse(candidate_text);
    cvgp::ExpressionTree truth = cvgp::parse(truth_text);
    *out_flag = cvgp::recovered(cand, truth, cvgp::SampleRange{}, seed) ? 1 : 0;
  });
}

cvgp_status cvgp_report_build(const char* summaries_jsonl, char** out_quantiles_csv,
                              char** out_recovery_csv) {
  if (auto st =
          require(summaries_jsonl && out_quantiles_csv && out_recovery_csv, "null argument"))
    return st;
  return guarded([&] {
    std::vector<json> summaries;
    std::string_view rest(summaries_jsonl);
    while (!rest.empty()) {
      size_t nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      summaries.push_back(json::parse(line));
    }
    cvgp::ReportTables tables = cvgp::build_report(summaries);
    *out_quantiles_csv = copy_string(tables.quantiles_csv);
    *out_recovery_csv = copy_string(tables.recovery_csv);
  });
}

cvgp_status cvgp_space_count(int l, int m, int o, char** out_a_dec, char** out_s_dec) {
  if (auto st = require(out_a_dec && out_s_dec, "null argument")) return st;
  return guarded([&] {
    cvgp::SpaceCount count = cvgp::count_exact(l, m, o);
    *out_a_dec = copy_string(count.a_l.str());
    *out_s_dec = copy_string(count.s_l.str());
  });
}

}  // extern "C"
