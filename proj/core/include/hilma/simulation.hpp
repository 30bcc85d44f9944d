#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hilma/em.hpp"
#include "hilma/mechanism.hpp"
#include "hilma/model.hpp"
#include "hilma/scale.hpp"
#include "hilma/solver.hpp"
#include "hilma/types.hpp"

namespace hilma {

// Estimators of the population response mean compared by the Monte Carlo
// studies: the (infeasible) complete-sample mean, the observed-case mean, the
// maximum-likelihood imputation mean, its Laplace approximation, and the EM
// counterpart.
enum class Estimator { y_com, y_obs, y_ml, y_ml_lap, em };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct SimConfig {
  ModelSpec model;
  Vector true_params;
  // Mechanism used to generate missingness; absent means the model default.
  std::optional<MissingnessMechanism> mechanism;
  int n = 100;
  int reps = 1000;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{Estimator::y_com, Estimator::y_obs,
                                    Estimator::y_ml};
  double interval_level = 0.95;
  // Base scale for Estimator::y_ml_lap (model default when absent).
  std::optional<ScaleTransform> b_scale;
  SolveOptions solve;
  EMOptions em;
  // Collect predictive-interval coverage of the realized missing responses
  // (requires Estimator::y_ml).
  bool collect_coverage = false;
};

struct EstimatorSummary {
  std::string name;
  std::vector<double> values;  // one per successful replication, in rep order
  double mean = 0.0;
  double bias = 0.0;   // mean - true_eta
  double sd = 0.0;     // population standard deviation over replications
  double rmse = 0.0;   // sqrt(bias^2 + sd^2)
  double mc_se = 0.0;  // sd / sqrt(#replications)
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct SummaryTable {
  std::string model_tag;
  double true_eta = 0.0;
  int n = 0;
  int reps_requested = 0;
  int reps_failed = 0;
  std::vector<int> failed_reps;           // sorted replication indices
  std::vector<std::string> failure_notes; // aligned with failed_reps
  std::vector<EstimatorSummary> estimators;
  // Pooled predictive-interval coverage over all missing responses.
  long covered = 0;
  long coverage_total = 0;
  double coverage = 0.0;

  // Deterministic text rendering (byte-identical for identical runs).
  std::string serialize() const;
};

// Runs the Monte Carlo study. Replications are distributed over worker
// threads (HILMA_THREADS, default 1); each replication derives its own RNG
// stream from (seed, rep), so results are byte-identical regardless of the
// thread count. Throws ConvergenceError when more than 5% of replications
// fail.
SummaryTable run_simulation(const SimConfig& config);

// mean of (observed responses + imputed missing responses): the plug-in
// estimate of the population mean from a joint fit.
double estimator_y_ml(const FitResult& fit, const Dataset& data);

// Long-format CSV (estimator,rep,value), one row per replication value, plus
// one quartile summary row per estimator.
void export_boxplot_data(const SummaryTable& table, const std::string& path);

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

}  // namespace hilma
