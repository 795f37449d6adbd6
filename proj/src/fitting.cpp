#include "cvgp/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cvgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard Nelder-Mead on f: R^p -> R (values may be +inf). Returns the best
// point and value found.
struct SimplexResult {
  std::vector<double> x;
  double f;
};

SimplexResult nelder_mead(const std::function<double(const double*)>& f,
                          std::vector<double> x0, int max_iters, double tol) {
  const int p = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;
  const double step = 0.25;

  std::vector<std::vector<double>> xs(p + 1, x0);
  std::vector<double> fs(p + 1);
  for (int i = 1; i <= p; ++i) xs[i][i - 1] += step * std::max(1.0, std::fabs(x0[i - 1]));
  for (int i = 0; i <= p; ++i) fs[i] = f(xs[i].data());

  std::vector<int> order(p + 1);
  std::vector<double> centroid(p), xr(p), xe(p), xc(p);

  for (int iter = 0; iter < max_iters; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    int best = order[0], worst = order[p], second_worst = order[p - 1];

    if (fs[best] == kInf) break;  // nowhere to go
    double spread = fs[worst] - fs[best];
    if (!(spread > tol * (1.0 + std::fabs(fs[best])))) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (int i = 0; i <= p; ++i) {
      if (i == worst) continue;
      for (int j = 0; j < p; ++j) centroid[j] += xs[i][j];
    }
    for (int j = 0; j < p; ++j) centroid[j] /= p;

    for (int j = 0; j < p; ++j) xr[j] = centroid[j] + alpha * (centroid[j] - xs[worst][j]);
    double fr = f(xr.data());

    if (fr < fs[best]) {
      for (int j = 0; j < p; ++j) xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
      double fe = f(xe.data());
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      bool outside = fr < fs[worst];
      const std::vector<double>& base = outside ? xr : xs[worst];
      for (int j = 0; j < p; ++j) xc[j] = centroid[j] + rho * (base[j] - centroid[j]);
      double fc = f(xc.data());
      if (fc < (outside ? fr : fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 0; i <= p; ++i) {
          if (i == best) continue;
          for (int j = 0; j < p; ++j)
            xs[i][j] = xs[best][j] + shrink * (xs[i][j] - xs[best][j]);
          fs[i] = f(xs[i].data());
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= p; ++i)
    if (fs[i] < fs[best]) best = i;
  return {xs[best], fs[best]};
}

double batch_mse(EvalProgram& prog, const TrialBatch& batch, std::vector<double>& pred) {
  prog.run(batch.cols, pred);
  double acc = 0.0;
  const int n = batch.batch_size();
  for (int i = 0; i < n; ++i) {
    double d = batch.y[i] - pred[i];
    acc += d * d;
  }
  acc /= n;
  return std::isfinite(acc) ? acc : kInf;
}

double unbiased_variance(const std::vector<double>& vs) {
  const size_t k = vs.size();
  double mean = std::accumulate(vs.begin(), vs.end(), 0.0) / k;
  double acc = 0.0;
  for (double v : vs) acc += (v - mean) * (v - mean);
  return acc / (k - 1);
}

}  // namespace

bool ExperimentOutcome::aligned_with(const ExpressionTree& expr) const {
  auto slots = open_constants(expr);
  for (const auto& t : trials)
    if (t.constants.size() != slot_tags.size()) return false;
  if (slot_tags.empty()) return true;
  // every recorded tag must still be a constant slot of the expression
  for (uint64_t tag : slot_tags) {
    bool found = false;
    for_each_node(expr, [&](const Node& n) {
      if (n.tag == tag && n.is_const()) found = true;
    });
    if (!found) return false;
  }
  return true;
}

TrialOutcome fit_constants(const ExpressionTree& expr, const TrialBatch& batch,
                           const FitterConfig& cfg, uint64_t seed) {
  if (cfg.restarts < 1) throw std::invalid_argument("fitter restarts must be >= 1");
  // variable leaves must stay within the batch's free variables
  {
    bool ok = true;
    for_each_node(expr, [&](const Node& n) {
      if (n.kind == Node::Kind::Variable &&
          (n.var >= batch.num_vars() || batch.controlled_values.count(n.var)))
        ok = false;
    });
    if (!ok)
      throw std::invalid_argument("expression uses a variable outside the free set");
  }

  EvalProgram prog(expr);
  const int p = prog.num_slots();
  std::vector<double> pred(batch.batch_size());

  if (p == 0) {
    double mse = batch_mse(prog, batch, pred);
    return {{}, mse == kInf ? -kInf : -mse};
  }

  auto slots = open_constants(expr);
  std::vector<double> warm(p);
  for (int i = 0; i < p; ++i) warm[i] = slots[i]->value;

  auto objective = [&](const double* params) {
    for (int i = 0; i < p; ++i) prog.set_slot(i, params[i]);
    return batch_mse(prog, batch, pred);
  };

  std::vector<double> best_x = warm;
  double best_f = kInf;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> x0(p);
    if (r == 0) {
      x0 = warm;
    } else {
      Rng rng = make_rng({seed, static_cast<uint64_t>(r)});
      for (int i = 0; i < p; ++i) x0[i] = uniform(rng, cfg.init_lo, cfg.init_hi);
    }
    SimplexResult res = nelder_mead(objective, std::move(x0), cfg.max_iters, cfg.tol);
    if (res.f < best_f) {
      best_f = res.f;
      best_x = std::move(res.x);
    }
    if (best_f <= cfg.early_exit_mse) break;
  }

  bool finite = std::isfinite(best_f);
  return {finite ? best_x : warm, finite ? -best_f : -kInf};
}

ExperimentOutcome cv_experiment(const ExpressionTree& expr,
                                const VariablePartition& part,
                                const std::vector<TrialBatch>& trials,
                                const FitterConfig& cfg, uint64_t seed) {
  (void)part;
  if (trials.size() < 2)
    throw std::invalid_argument("control variable experiments need at least 2 trials");
  ExperimentOutcome outcome;
  for (const Node* slot : open_constants(expr)) outcome.slot_tags.push_back(slot->tag);
  outcome.trials.reserve(trials.size());
  for (size_t k = 0; k < trials.size(); ++k)
    outcome.trials.push_back(
        fit_constants(expr, trials[k], cfg, mix_seed({seed, static_cast<uint64_t>(k)})));
  return outcome;
}

double scalar_fitness(const ExperimentOutcome& outcome) {
  std::vector<double> fs;
  fs.reserve(outcome.trials.size());
  for (const auto& t : outcome.trials) fs.push_back(std::isnan(t.fitness) ? -kInf : t.fitness);
  if (fs.empty()) return -kInf;
  std::sort(fs.begin(), fs.end());
  size_t n = fs.size();
  if (n % 2 == 1) return fs[n / 2];
  double lo = fs[n / 2 - 1], hi = fs[n / 2];
  if (lo == -kInf || hi == -kInf) return -kInf;
  return 0.5 * (lo + hi);
}

void freeze_equation(ExpressionTree& expr, const ExperimentOutcome& outcome,
                     double fit_thresh, double var_thresh) {
  if (outcome.trials.empty()) return;
  if (!outcome.aligned_with(expr))
    throw std::invalid_argument("freeze_equation: outcome not aligned with expression");

  for (const auto& t : outcome.trials) {
    double mse = -t.fitness;  // fitness is NegMSE
    if (!(mse <= fit_thresh)) return;
  }

  freeze_structure(expr);

  const size_t num_slots = outcome.slot_tags.size();
  const size_t k = outcome.trials.size();
  for (size_t j = 0; j < num_slots; ++j) {
    Node* slot = nullptr;
    for_each_node(expr, [&](Node& n) {
      if (n.tag == outcome.slot_tags[j] && n.is_const()) slot = &n;
    });
    if (!slot || slot->status == SlotStatus::FrozenStandalone) continue;

    std::vector<double> fits(k);
    for (size_t t = 0; t < k; ++t) fits[t] = outcome.trials[t].constants[j];
    double mean = std::accumulate(fits.begin(), fits.end(), 0.0) / k;
    double variance = k >= 2 ? unbiased_variance(fits) : 0.0;
    if (variance <= var_thresh) {
      slot->status = SlotStatus::FrozenStandalone;
      slot->frozen = true;
      slot->value = mean;
    } else {
      slot->status = SlotStatus::ExpandableSummary;
      slot->frozen = false;
      slot->value = mean;
    }
  }
}

}  // namespace cvgp
