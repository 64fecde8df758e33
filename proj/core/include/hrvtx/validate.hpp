#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hrvtx/features.hpp"

namespace hrvtx {

// One patient's feature rows, one row per segment, columns in HrvVector
// order.
struct PatientFeatures {
  std::string patient_id;
  Eigen::MatrixXd nsr;
  Eigen::MatrixXd af;
};

struct ValidateConfig {
  int folds = 5;
  std::uint64_t seed = 20240101;
  double alpha = 0.05;
  // Threshold for the as-printed pass reading (indices whose best p stays
  // below it count as passing).
  double pass_p_threshold = 0.05;
  double ridge = 1e-3;
  int k_neighbours = 0;
  bool strict_printed_forms = false;
};

struct SplitResult {
  int split_id = 0;  // 1-based
  std::vector<std::string> test_patients;
  std::map<std::string, double> bhattacharyya;           // per test patient
  std::map<std::string, double> baseline_bhattacharyya;  // pooled training AF
  double mean_bhattacharyya = 0.0;
  double best_bhattacharyya = 0.0;
  double worst_bhattacharyya = 0.0;
  double baseline_mean_bhattacharyya = 0.0;
  // ks_p[i] maps patient -> p-value of index i (HrvVector order).
  std::array<std::map<std::string, double>, HrvVector::kDim> ks_p;
};

struct ValidationReport {
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  int folds = 0;
  double alpha = 0.05;
  double pass_p_threshold = 0.05;
  std::vector<std::string> patients;
  std::vector<SplitResult> splits;
  double overall_mean_bhattacharyya = 0.0;
  double overall_best_bhattacharyya = 0.0;
  double overall_worst_bhattacharyya = 0.0;
  double overall_baseline_mean_bhattacharyya = 0.0;
  std::vector<std::string> notes;
};

// Deterministic Fisher-Yates shuffle of the sorted patient ids followed by
// an as-even-as-possible split into `folds` test groups (the first
// patients % folds groups get one extra member).
std::vector<std::vector<std::string>> make_folds(std::vector<std::string> patient_ids,
                                                 int folds, std::uint64_t seed);

// Cross-validated evaluation. Per fold: fit the transfer model on the
// training patients, then for each held-out patient transform every NSR row
// to a predicted AF row, estimate the predicted distribution, and score it
// against the observed AF distribution with the Bhattacharyya distance plus
// per-index two-sample KS tests. A pooled-training-AF distribution provides
// the baseline distance for the same patients.
ValidationReport kfold_validate(const std::vector<PatientFeatures>& patients,
                                const ValidateConfig& cfg,
                                const std::string& config_fingerprint);

// Per-patient predicted AF rows for one fitted model; used by the predict
// command and the fold loop.
Eigen::MatrixXd predict_rows(const struct TransferModel& model,
                             const Eigen::MatrixXd& nsr_rows);

std::string report_to_json(const ValidationReport& report);
ValidationReport report_from_json(const std::string& text);

// Fixed-width text tables: per-split Bhattacharyya summary plus the
// max-p-per-split KS grid with both pass-count readings. Works on an empty
// report (headers only).
std::string render_report(const ValidationReport& report);

}  // namespace hrvtx
