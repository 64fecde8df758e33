#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hrvtx {

// Multivariate Gaussian summary of one patient's feature rows. Rotation
// rows are eigenvectors (descending eigenvalue order), so
// covariance = rotation^T * diag(eigenvalues) * rotation.
struct PatientDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd rotation;     // rows are unit eigenvectors
};

// Affine map taking one patient's source-rhythm cloud onto their
// target-rhythm cloud: center, rotate into source principal axes, scale per
// axis, rotate out along target axes, re-center.
struct PatientTransform {
  std::string patient_id;
  Eigen::VectorXd source_mean;
  Eigen::VectorXd target_mean;
  Eigen::MatrixXd source_rotation;  // rows are source eigenvectors
  Eigen::MatrixXd target_rotation;  // rows are target eigenvectors
  Eigen::VectorXd scale;            // per-axis factors
  int clamped_axes = 0;             // axes where the eigenvalue floor engaged
};

struct TransferModelEntry {
  std::string patient_id;
  Eigen::Index sample_count = 0;
  PatientDistribution source;  // ridge-regularized, used for distances
  PatientTransform transform;
};

struct TransferModel {
  double ridge = 1e-3;
  // 0 means use every training patient; otherwise 1 <= k <= entries.size().
  int k_neighbours = 0;
  bool strict_printed_forms = false;
  std::string config_fingerprint;
  std::vector<TransferModelEntry> entries;  // sorted by patient_id
};

// Intermediate stages of one transform application, for inspection and the
// demo artifact.
struct TransformStages {
  Eigen::VectorXd centered;
  Eigen::VectorXd rotated;
  Eigen::VectorXd scaled;
  Eigen::VectorXd result;
};

// Sample mean and unbiased covariance, regularized by adding
// ridge * (trace/dim) to the diagonal (plain ridge * identity for an
// all-zero covariance), then eigendecomposed. Requires at least 2 rows.
// Throws ConditioningError when the regularized matrix is not positive
// definite; `label` names the offender in the message.
PatientDistribution estimate_distribution(const Eigen::MatrixXd& rows, double ridge,
                                          const std::string& label = "");

// Distribution from explicit moments, same regularization and decomposition.
PatientDistribution distribution_from_moments(const Eigen::VectorXd& mean,
                                              const Eigen::MatrixXd& covariance,
                                              double ridge,
                                              const std::string& label = "");

// Mahalanobis distance from x to the distribution: sqrt(sum y_i^2 / lambda_i)
// with y the rotation of (x - mean). With strict_printed_forms the inverse
// is dropped, reproducing the as-printed variant: sqrt((x-mu)^T Sigma (x-mu)).
double mahalanobis(const PatientDistribution& d, const Eigen::VectorXd& x,
                   bool strict_printed_forms = false);

// Fits the per-patient transform from raw (unregularized) sample moments so
// that applying it to the source rows reproduces the target sample mean and
// covariance up to floating-point error. Axis scale i is
// sqrt(max(lambda_target, 0) / max(lambda_source, floor)) where
// floor = ridge * mean(source eigenvalues) guards near-null directions;
// engaging it is counted in clamped_axes. The strict variant scales by
// sqrt(lambda_source * lambda_target) instead.
PatientTransform fit_pair(const std::string& patient_id, const Eigen::MatrixXd& source_rows,
                          const Eigen::MatrixXd& target_rows, double ridge,
                          bool strict_printed_forms = false);

Eigen::VectorXd apply_transform(const PatientTransform& t, const Eigen::VectorXd& x);
TransformStages apply_transform_stages(const PatientTransform& t, const Eigen::VectorXd& x);

// Fits one entry per (source rows, target rows) patient pair.
TransferModel fit_transfer_model(
    const std::vector<std::string>& patient_ids,
    const std::vector<Eigen::MatrixXd>& source_rows,
    const std::vector<Eigen::MatrixXd>& target_rows, double ridge, int k_neighbours,
    bool strict_printed_forms, const std::string& config_fingerprint);

// Predicts the target-rhythm vector for x: every entry's transform output,
// blended by a softmax over negated Mahalanobis distances from x to the
// entries' source distributions (the strict variant drops the negation).
// With k_neighbours > 0 only the k nearest entries participate; ties at the
// k-th distance break toward the smaller patient_id.
Eigen::VectorXd predict_target(const TransferModel& model, const Eigen::VectorXd& x);

// Blend weights used by predict_target, aligned with model.entries; zero for
// entries outside the k nearest. Weights are non-negative and sum to 1.
Eigen::VectorXd predict_weights(const TransferModel& model, const Eigen::VectorXd& x);

std::string model_to_json(const TransferModel& model);
TransferModel model_from_json(const std::string& text);
void save_model(const TransferModel& model, const std::filesystem::path& path);
TransferModel load_model(const std::filesystem::path& path);

}  // namespace hrvtx
