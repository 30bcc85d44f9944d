#include "hilma/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hilma/csv.hpp"
#include "hilma/errors.hpp"
#include "hilma/inference.hpp"
#include "hilma/laplace.hpp"
#include "hilma/rng.hpp"

namespace hilma {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::y_com: return "y_com";
    case Estimator::y_obs: return "y_obs";
    case Estimator::y_ml: return "y_ML";
    case Estimator::y_ml_lap: return "y_ML_lap";
    case Estimator::em: return "em";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& name) {
  if (name == "y_com") return Estimator::y_com;
  if (name == "y_obs") return Estimator::y_obs;
  if (name == "y_ML") return Estimator::y_ml;
  if (name == "y_ML_lap") return Estimator::y_ml_lap;
  if (name == "em") return Estimator::em;
  throw UsageError("unknown estimator '" + name +
                   "' (choices: y_com, y_obs, y_ML, y_ML_lap, em)");
}

double estimator_y_ml(const FitResult& fit, const Dataset& data) {
  return (data.sum_observed() + fit.y_mis_hat.sum()) / data.n();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  if (p < 0 || p > 1) throw UsageError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

namespace {

int worker_count(int reps) {
  int threads = 1;
  if (const char* env = std::getenv("HILMA_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || parsed < 1 || parsed > 4096) {
      throw UsageError("HILMA_THREADS must be a positive integer, got '" +
                       std::string(env) + "'");
    }
    threads = static_cast<int>(parsed);
  }
  return std::min(threads, std::max(reps, 1));
}

struct RepOutcome {
  bool ok = false;
  std::string note;
  std::vector<double> values;  // aligned with config.estimators
  long covered = 0;
  long total = 0;
};

RepOutcome run_replication(const SimConfig& config, int rep) {
  RepOutcome out;
  const MissingnessMechanism mech = config.mechanism
                                        ? *config.mechanism
                                        : config.model.default_mechanism;
  try {
    const SimulatedData sim = config.model.simulate(
        config.true_params, mech, config.n, derive_stream(config.seed, rep));
    const Dataset& data = sim.data;

    // The joint and Laplace fits are shared across estimators that need them.
    std::optional<FitResult> fit;
    auto ml_fit = [&]() -> const FitResult& {
      if (!fit) fit = joint_maximize(config.model, data, config.solve);
      return *fit;
    };

    out.values.reserve(config.estimators.size());
    for (Estimator e : config.estimators) {
      switch (e) {
        case Estimator::y_com:
          out.values.push_back(sim.complete_mean);
          break;
        case Estimator::y_obs:
          out.values.push_back(data.sum_observed() / data.n_obs());
          break;
        case Estimator::y_ml:
          out.values.push_back(estimator_y_ml(ml_fit(), data));
          break;
        case Estimator::y_ml_lap: {
          const ScaleTransform b = config.b_scale
                                       ? *config.b_scale
                                       : *config.model.full_support_scale;
          const FitResult lap = approx_mle(config.model, data, b, config.solve);
          out.values.push_back(estimator_y_ml(lap, data));
          break;
        }
        case Estimator::em: {
          const EMResult em = em_fit(config.model, data, config.em);
          const Vector y_mis =
              solve_random_given_psi(config.model, em.psi_hat, data, config.solve);
          out.values.push_back((data.sum_observed() + y_mis.sum()) / data.n());
          break;
        }
      }
    }

    if (config.collect_coverage) {
      const VarianceReport report =
          z_scale_report(config.model, ml_fit(), data, config.interval_level);
      for (int i = 0; i < data.n_mis(); ++i) {
        const auto& pi = report.intervals[static_cast<std::size_t>(i)];
        const double truth = sim.y_mis_true[i];
        out.covered += (truth >= pi.lower && truth <= pi.upper) ? 1 : 0;
        ++out.total;
      }
    }
    out.ok = true;
  } catch (const Error& err) {
    out.ok = false;
    out.note = err.what();
  }
  return out;
}

void append_estimator_block(std::string& text, const EstimatorSummary& s) {
  text += s.name;
  text += ": mean=" + format_double(s.mean);
  text += " bias=" + format_double(s.bias);
  text += " sd=" + format_double(s.sd);
  text += " rmse=" + format_double(s.rmse);
  text += " mc_se=" + format_double(s.mc_se);
  text += " q1=" + format_double(s.q1);
  text += " median=" + format_double(s.median);
  text += " q3=" + format_double(s.q3);
  text += "\n";
}

}  // namespace

std::string SummaryTable::serialize() const {
  std::string text;
  text += "model: " + model_tag + "\n";
  text += "n: " + std::to_string(n) + "\n";
  text += "reps: " + std::to_string(reps_requested) + "\n";
  text += "failed: " + std::to_string(reps_failed) + "\n";
  text += "true_eta: " + format_double(true_eta) + "\n";
  for (const auto& s : estimators) append_estimator_block(text, s);
  if (coverage_total > 0) {
    text += "coverage: " + std::to_string(covered) + "/" +
            std::to_string(coverage_total) + " = " + format_double(coverage) +
            "\n";
  }
  for (std::size_t i = 0; i < failed_reps.size(); ++i) {
    text += "failed rep " + std::to_string(failed_reps[i]) + ": " +
            failure_notes[i] + "\n";
  }
  return text;
}

SummaryTable run_simulation(const SimConfig& config) {
  if (config.estimators.empty()) {
    throw UsageError("the estimator list is empty; nothing to simulate");
  }
  if (config.reps < 1) throw UsageError("reps must be at least 1");
  if (!(config.interval_level > 0 && config.interval_level < 1)) {
    throw UsageError("interval_level must lie strictly between 0 and 1");
  }
  if (!config.model.simulate) {
    throw UnsupportedError("model '" + config.model.tag +
                           "' has no simulation protocol");
  }
  if (!config.model.true_eta) {
    throw UnsupportedError("model '" + config.model.tag +
                           "' declares no population mean");
  }
  check_params(config.model, config.true_params);
  const bool wants_lap =
      std::count(config.estimators.begin(), config.estimators.end(),
                 Estimator::y_ml_lap) > 0;
  if (wants_lap && !config.b_scale && !config.model.full_support_scale) {
    throw UsageError("estimator y_ML_lap needs a full-support scale; model '" +
                     config.model.tag + "' declares none and no b_scale was "
                     "given");
  }
  const bool wants_ml =
      std::count(config.estimators.begin(), config.estimators.end(),
                 Estimator::y_ml) > 0;
  if (config.collect_coverage && !wants_ml) {
    throw UsageError("coverage collection needs estimator y_ML in the list");
  }

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps));
  const int threads = worker_count(config.reps);
  if (threads <= 1) {
    for (int r = 0; r < config.reps; ++r) {
      outcomes[static_cast<std::size_t>(r)] = run_replication(config, r);
    }
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      while (true) {
        const int r = next.fetch_add(1);
        if (r >= config.reps) return;
        outcomes[static_cast<std::size_t>(r)] = run_replication(config, r);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SummaryTable table;
  table.model_tag = config.model.tag;
  table.n = config.n;
  table.reps_requested = config.reps;
  table.true_eta = config.model.true_eta(config.true_params, config.n);

  for (int r = 0; r < config.reps; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    if (!o.ok) {
      table.failed_reps.push_back(r);
      table.failure_notes.push_back(o.note);
    }
  }
  table.reps_failed = static_cast<int>(table.failed_reps.size());
  if (20 * table.reps_failed > config.reps) {
    std::string detail = table.failure_notes.empty() ? std::string()
                                                     : table.failure_notes[0];
    throw ConvergenceError(
        std::to_string(table.reps_failed) + " of " +
        std::to_string(config.reps) +
        " replications failed (more than 5%); first failure: " + detail);
  }

  const int n_ok = config.reps - table.reps_failed;
  for (std::size_t j = 0; j < config.estimators.size(); ++j) {
    EstimatorSummary s;
    s.name = to_string(config.estimators[j]);
    s.values.reserve(static_cast<std::size_t>(n_ok));
    for (int r = 0; r < config.reps; ++r) {
      const auto& o = outcomes[static_cast<std::size_t>(r)];
      if (o.ok) s.values.push_back(o.values[j]);
    }
    double sum = 0;
    for (double v : s.values) sum += v;
    s.mean = sum / n_ok;
    s.bias = s.mean - table.true_eta;
    double ss = 0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / n_ok);
    s.rmse = std::sqrt(s.bias * s.bias + s.sd * s.sd);
    s.mc_se = s.sd / std::sqrt(static_cast<double>(n_ok));
    s.q1 = quantile(s.values, 0.25);
    s.median = quantile(s.values, 0.5);
    s.q3 = quantile(s.values, 0.75);
    table.estimators.push_back(std::move(s));
  }

  if (config.collect_coverage) {
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      table.covered += o.covered;
      table.coverage_total += o.total;
    }
    if (table.coverage_total > 0) {
      table.coverage = static_cast<double>(table.covered) /
                       static_cast<double>(table.coverage_total);
    }
  }
  return table;
}

void export_boxplot_data(const SummaryTable& table, const std::string& path) {
  std::string out = "estimator,rep,value\n";
  // Successful replication ids: everything not in the sorted failure list.
  std::vector<int> ok_reps;
  ok_reps.reserve(static_cast<std::size_t>(table.reps_requested));
  std::size_t f = 0;
  for (int r = 0; r < table.reps_requested; ++r) {
    if (f < table.failed_reps.size() && table.failed_reps[f] == r) {
      ++f;
      continue;
    }
    ok_reps.push_back(r);
  }
  for (const auto& s : table.estimators) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out += s.name + "," + std::to_string(ok_reps[i]) + "," +
             format_double(s.values[i]) + "\n";
    }
  }
  for (const auto& s : table.estimators) {
    out += s.name + ",quartiles," + format_double(s.q1) + ";" +
           format_double(s.median) + ";" + format_double(s.q3) + "\n";
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open '" + path + "' for writing");
  file << out;
  if (!file) throw DataError("write to '" + path + "' failed");
}

}  // namespace hilma
