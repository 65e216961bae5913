#pragma once

#include <optional>
#include <string>
#include <vector>

#include "erkf/filter.hpp"
#include "erkf/models.hpp"
#include "erkf/nav.hpp"
#include "erkf/synthetic.hpp"

namespace erkf::app {

struct Rmse {
  double attitude_rad = 0.0;    // all epochs, all three angles
  double position_m = 0.0;      // 3-D error at GPS update epochs
  double horizontal_m = 0.0;    // north/east error at GPS update epochs
  std::size_t position_samples = 0;
};

struct RunSummary {
  std::vector<nav::EstimateRecord> records;
  std::size_t erkf_updates = 0;
  double wall_seconds = 0.0;
  double mean_step_us = 0.0;  // per IMU epoch, both filters included
  std::optional<std::uint64_t> flops;
  std::optional<Rmse> rmse;
};

struct RunOptions {
  nav::NavOptions nav;
  bool count_flops = false;
};

/// Replays the sensor streams through the fusion scheduler. When `truth` is
/// given it must hold one sample per IMU epoch.
RunSummary run_pipeline(const std::vector<models::ImuSample>& imu,
                        const std::vector<models::GpsSample>& gps, const models::ModelConfig& cfg,
                        const RunOptions& options = {},
                        const std::vector<sim::TruthSample>* truth = nullptr);

/// Error statistics of `records` against per-IMU-epoch truth.
Rmse compute_rmse(const std::vector<nav::EstimateRecord>& records,
                  const std::vector<sim::TruthSample>& truth);

/// Extreme singular values of one filter's predicted covariance after one
/// ERKF step.
struct SigmaSample {
  double t = 0.0;
  std::string system;  // "attitude" or "position"
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

struct ComparisonRow {
  double t = 0.0;
  std::string system;
  double smax_givens = 0.0, smax_inv = 0.0;
  double smin_givens = 0.0, smin_inv = 0.0;
  double dmax = 0.0, dmin = 0.0;
};

/// Pairs two traces entry by entry. Throws StructuralError when their
/// lengths, timestamps or systems differ.
std::vector<ComparisonRow> compare_traces(const std::vector<SigmaSample>& givens,
                                          const std::vector<SigmaSample>& inverse);

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  double max_delta = 0.0;           // max |d sigma| over rows
  double max_state_rel_diff = 0.0;  // max |x_g - x_i|_inf / max(1, |x_i|_inf) per filter
  double threshold = 1e-12;
  bool pass = false;
};

/// Runs both backends step-locked on the same inputs.
ComparisonResult compare_backends(const std::vector<models::ImuSample>& imu,
                                  const std::vector<models::GpsSample>& gps,
                                  const models::ModelConfig& cfg, double threshold = 1e-12,
                                  linalg::Schedule schedule = linalg::Schedule::kShared);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct BenchRow {
  FlopReport flops;
  // Median wall time of one step, milliseconds.
  double givens_ms = 0.0, inverse_ms = 0.0;                // per-column schedule
  double givens_shared_ms = 0.0, inverse_shared_ms = 0.0;  // shared factorization
};

struct BenchResult {
  std::vector<BenchRow> rows;
  /// Log-log slope of the Givens triangularization FLOPs between
  /// successive sizes.
  std::vector<double> slopes;
  /// Givens below inversion, in FLOPs and median time, for every size with
  /// n < M/3, under both schedules.
  bool ordering_ok = true;
  bool slopes_ok = true;  // every slope in [2.5, 3.3]
};

BenchResult bench(const std::vector<Index>& sizes, int trials, std::uint64_t seed = 1);

std::string bench_csv(const BenchResult& result);

}  // namespace erkf::app
