#include "hrvtx/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hrvtx/errors.hpp"
#include "hrvtx/util.hpp"
#include "hrvtx/version.hpp"

namespace hrvtx {

namespace {

using ordered_json = nlohmann::ordered_json;

struct EigenSystem {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXd rotation;  // rows are eigenvectors
};

// Descending eigenvalues with a deterministic sign: each eigenvector's
// largest-magnitude component (first such on ties) is made positive.
EigenSystem eigen_descending(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("eigendecomposition failed to converge");
  }
  const Eigen::Index d = sym.rows();
  EigenSystem out;
  out.values.resize(d);
  out.rotation.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index src = d - 1 - i;  // solver sorts ascending
    out.values(i) = solver.eigenvalues()(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < d; ++j) {
      if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
    }
    if (v(pivot) < 0.0) v = -v;
    out.rotation.row(i) = v.transpose();
  }
  return out;
}

Eigen::MatrixXd regularize(const Eigen::MatrixXd& cov, double ridge) {
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  if (ridge > 0.0) {
    const double tr = sym.trace();
    const double bump = tr > 0.0 ? ridge * tr / static_cast<double>(d) : ridge;
    sym += bump * Eigen::MatrixXd::Identity(d, d);
  }
  return sym;
}

PatientDistribution finalize_distribution(const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& cov, double ridge,
                                          const std::string& label) {
  PatientDistribution dist;
  dist.mean = mean;
  dist.covariance = regularize(cov, ridge);
  auto sys = eigen_descending(dist.covariance);
  if (sys.values(sys.values.size() - 1) <= 0.0) {
    throw ConditioningError("covariance not positive definite" +
                            (label.empty() ? std::string() : " for " + label));
  }
  dist.eigenvalues = std::move(sys.values);
  dist.rotation = std::move(sys.rotation);
  return dist;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, symmetrized, no ridge
};

Moments sample_moments(const Eigen::MatrixXd& rows, const std::string& label) {
  if (rows.rows() < 2) {
    throw DataError("need at least 2 rows to estimate a distribution" +
                    (label.empty() ? std::string() : " for " + label));
  }
  Moments m;
  m.mean = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - m.mean.transpose();
  m.covariance = centered.transpose() * centered /
                 static_cast<double>(rows.rows() - 1);
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
  return m;
}

}  // namespace

PatientDistribution estimate_distribution(const Eigen::MatrixXd& rows, double ridge,
                                          const std::string& label) {
  if (ridge < 0.0) throw ConfigError("ridge must be non-negative");
  const Moments m = sample_moments(rows, label);
  return finalize_distribution(m.mean, m.covariance, ridge, label);
}

PatientDistribution distribution_from_moments(const Eigen::VectorXd& mean,
                                              const Eigen::MatrixXd& covariance,
                                              double ridge, const std::string& label) {
  if (ridge < 0.0) throw ConfigError("ridge must be non-negative");
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size()) {
    throw DataError("moment dimensions disagree" +
                    (label.empty() ? std::string() : " for " + label));
  }
  return finalize_distribution(mean, covariance, ridge, label);
}

double mahalanobis(const PatientDistribution& d, const Eigen::VectorXd& x,
                   bool strict_printed_forms) {
  if (x.size() != d.mean.size()) {
    throw DataError("mahalanobis: dimension mismatch");
  }
  const Eigen::VectorXd y = d.rotation * (x - d.mean);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    acc += strict_printed_forms ? d.eigenvalues(i) * y(i) * y(i)
                                : y(i) * y(i) / d.eigenvalues(i);
  }
  return std::sqrt(acc);
}

PatientTransform fit_pair(const std::string& patient_id,
                          const Eigen::MatrixXd& source_rows,
                          const Eigen::MatrixXd& target_rows, double ridge,
                          bool strict_printed_forms) {
  if (source_rows.cols() != target_rows.cols()) {
    throw DataError("fit_pair: source and target dimensions differ for " + patient_id);
  }
  const Moments src = sample_moments(source_rows, patient_id + " source");
  const Moments tgt = sample_moments(target_rows, patient_id + " target");
  const auto src_sys = eigen_descending(src.covariance);
  const auto tgt_sys = eigen_descending(tgt.covariance);

  const Eigen::Index d = src_sys.values.size();
  const double src_trace = src.covariance.trace();
  const double floor =
      ridge * (src_trace > 0.0 ? src_trace / static_cast<double>(d) : 1.0);

  PatientTransform t;
  t.patient_id = patient_id;
  t.source_mean = src.mean;
  t.target_mean = tgt.mean;
  t.source_rotation = src_sys.rotation;
  t.target_rotation = tgt_sys.rotation;
  t.scale.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ls = std::max(src_sys.values(i), 0.0);
    const double lt = std::max(tgt_sys.values(i), 0.0);
    if (strict_printed_forms) {
      t.scale(i) = std::sqrt(ls * lt);
      continue;
    }
    double denom = ls;
    if (denom < floor) {
      denom = floor;
      ++t.clamped_axes;
    }
    if (denom <= 0.0) {
      throw ConditioningError("fit_pair: zero source variance on axis " +
                              std::to_string(i) + " for " + patient_id +
                              " with no eigenvalue floor");
    }
    t.scale(i) = std::sqrt(lt / denom);
  }
  return t;
}

TransformStages apply_transform_stages(const PatientTransform& t,
                                       const Eigen::VectorXd& x) {
  if (x.size() != t.source_mean.size()) {
    throw DataError("apply_transform: dimension mismatch");
  }
  TransformStages s;
  s.centered = x - t.source_mean;
  s.rotated = t.source_rotation * s.centered;
  s.scaled = s.rotated.cwiseProduct(t.scale);
  s.result = t.target_rotation.transpose() * s.scaled + t.target_mean;
  return s;
}

Eigen::VectorXd apply_transform(const PatientTransform& t, const Eigen::VectorXd& x) {
  return apply_transform_stages(t, x).result;
}

TransferModel fit_transfer_model(
    const std::vector<std::string>& patient_ids,
    const std::vector<Eigen::MatrixXd>& source_rows,
    const std::vector<Eigen::MatrixXd>& target_rows, double ridge, int k_neighbours,
    bool strict_printed_forms, const std::string& config_fingerprint) {
  if (patient_ids.size() != source_rows.size() ||
      patient_ids.size() != target_rows.size()) {
    throw DataError("fit_transfer_model: per-patient lists have different lengths");
  }
  if (patient_ids.empty()) throw DataError("fit_transfer_model: no training patients");
  if (k_neighbours < 0 ||
      (k_neighbours > 0 && k_neighbours > static_cast<int>(patient_ids.size()))) {
    throw ConfigError("k_neighbours must be 0 (all) or within the patient count");
  }

  TransferModel model;
  model.ridge = ridge;
  model.k_neighbours = k_neighbours;
  model.strict_printed_forms = strict_printed_forms;
  model.config_fingerprint = config_fingerprint;
  for (std::size_t p = 0; p < patient_ids.size(); ++p) {
    TransferModelEntry e;
    e.patient_id = patient_ids[p];
    e.sample_count = source_rows[p].rows();
    e.source = estimate_distribution(source_rows[p], ridge, patient_ids[p]);
    e.transform = fit_pair(patient_ids[p], source_rows[p], target_rows[p], ridge,
                           strict_printed_forms);
    model.entries.push_back(std::move(e));
  }
  std::sort(model.entries.begin(), model.entries.end(),
            [](const TransferModelEntry& a, const TransferModelEntry& b) {
              return a.patient_id < b.patient_id;
            });
  return model;
}

Eigen::VectorXd predict_weights(const TransferModel& model, const Eigen::VectorXd& x) {
  const std::size_t n = model.entries.size();
  if (n == 0) throw DataError("predict: model has no entries");

  std::vector<double> distance(n);
  for (std::size_t p = 0; p < n; ++p) {
    distance[p] = mahalanobis(model.entries[p].source, x, model.strict_printed_forms);
  }

  std::vector<std::size_t> selected(n);
  std::iota(selected.begin(), selected.end(), 0);
  if (model.k_neighbours > 0 && static_cast<std::size_t>(model.k_neighbours) < n) {
    // Ties at the cut break toward the smaller patient id; entries are
    // sorted by id, so the index is the tiebreaker.
    std::sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
      if (distance[a] != distance[b]) return distance[a] < distance[b];
      return a < b;
    });
    selected.resize(static_cast<std::size_t>(model.k_neighbours));
  }

  // Softmax over negated distances (closer source cloud, larger weight);
  // the strict variant keeps the as-printed positive sign.
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p : selected) {
    const double s = model.strict_printed_forms ? distance[p] : -distance[p];
    best = std::max(best, s);
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  double total = 0.0;
  for (std::size_t p : selected) {
    const double s = model.strict_printed_forms ? distance[p] : -distance[p];
    const double w = std::exp(s - best);
    weights(static_cast<Eigen::Index>(p)) = w;
    total += w;
  }
  weights /= total;
  return weights;
}

Eigen::VectorXd predict_target(const TransferModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd weights = predict_weights(model, x);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (std::size_t p = 0; p < model.entries.size(); ++p) {
    const double w = weights(static_cast<Eigen::Index>(p));
    if (w == 0.0) continue;
    out += w * apply_transform(model.entries[p].transform, x);
  }
  return out;
}

namespace {

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const ordered_json& a, const char* what) {
  if (!a.is_array()) throw ParseError(std::string("model json: ") + what + " not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& a, const char* what) {
  if (!a.is_array() || a.empty()) {
    throw ParseError(std::string("model json: ") + what + " not a matrix");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(a.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(a[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(a[static_cast<std::size_t>(r)].size()) != cols) {
      throw ParseError(std::string("model json: ") + what + " rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

void check_rotation(const Eigen::MatrixXd& rot, const std::string& who) {
  const Eigen::MatrixXd gram = rot * rot.transpose();
  const double err =
      (gram - Eigen::MatrixXd::Identity(rot.rows(), rot.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-10) {
    throw DataError("model json: rotation for " + who + " is not orthonormal");
  }
}

}  // namespace

std::string model_to_json(const TransferModel& model) {
  ordered_json j;
  j["schema"] = "hrvtx.model.v1";
  j["tool_version"] = kVersion;
  j["ridge"] = model.ridge;
  j["k_neighbours"] = model.k_neighbours;
  j["strict_printed_forms"] = model.strict_printed_forms;
  j["config_fingerprint"] = model.config_fingerprint;
  ordered_json entries = ordered_json::array();
  for (const auto& e : model.entries) {
    ordered_json je;
    je["patient_id"] = e.patient_id;
    je["sample_count"] = e.sample_count;
    je["source_mean"] = vector_to_json(e.source.mean);
    je["source_covariance"] = matrix_to_json(e.source.covariance);
    je["source_eigenvalues"] = vector_to_json(e.source.eigenvalues);
    je["source_rotation"] = matrix_to_json(e.source.rotation);
    je["transform_source_mean"] = vector_to_json(e.transform.source_mean);
    je["transform_target_mean"] = vector_to_json(e.transform.target_mean);
    je["transform_source_rotation"] = matrix_to_json(e.transform.source_rotation);
    je["transform_target_rotation"] = matrix_to_json(e.transform.target_rotation);
    je["transform_scale"] = vector_to_json(e.transform.scale);
    je["clamped_axes"] = e.transform.clamped_axes;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

TransferModel model_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "hrvtx.model.v1") {
    throw ParseError("model json: missing or unknown schema marker");
  }

  TransferModel model;
  try {
    model.ridge = j.at("ridge").get<double>();
    model.k_neighbours = j.at("k_neighbours").get<int>();
    model.strict_printed_forms = j.at("strict_printed_forms").get<bool>();
    model.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    for (const auto& je : j.at("entries")) {
      TransferModelEntry e;
      e.patient_id = je.at("patient_id").get<std::string>();
      e.sample_count = je.at("sample_count").get<Eigen::Index>();
      e.source.mean = vector_from_json(je.at("source_mean"), "source_mean");
      e.source.covariance =
          matrix_from_json(je.at("source_covariance"), "source_covariance");
      e.source.eigenvalues =
          vector_from_json(je.at("source_eigenvalues"), "source_eigenvalues");
      e.source.rotation = matrix_from_json(je.at("source_rotation"), "source_rotation");
      e.transform.patient_id = e.patient_id;
      e.transform.source_mean =
          vector_from_json(je.at("transform_source_mean"), "transform_source_mean");
      e.transform.target_mean =
          vector_from_json(je.at("transform_target_mean"), "transform_target_mean");
      e.transform.source_rotation = matrix_from_json(je.at("transform_source_rotation"),
                                                     "transform_source_rotation");
      e.transform.target_rotation = matrix_from_json(je.at("transform_target_rotation"),
                                                     "transform_target_rotation");
      e.transform.scale = vector_from_json(je.at("transform_scale"), "transform_scale");
      e.transform.clamped_axes = je.value("clamped_axes", 0);
      model.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }

  for (const auto& e : model.entries) {
    if (e.source.eigenvalues.size() == 0 ||
        e.source.eigenvalues(e.source.eigenvalues.size() - 1) <= 0.0) {
      throw DataError("model json: non-positive eigenvalue for " + e.patient_id);
    }
    check_rotation(e.source.rotation, e.patient_id + " source");
    check_rotation(e.transform.source_rotation, e.patient_id + " transform source");
    check_rotation(e.transform.target_rotation, e.patient_id + " transform target");
  }
  if (model.k_neighbours < 0 ||
      (model.k_neighbours > 0 &&
       model.k_neighbours > static_cast<int>(model.entries.size()))) {
    throw DataError("model json: k_neighbours outside the entry count");
  }
  return model;
}

void save_model(const TransferModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

TransferModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace hrvtx
