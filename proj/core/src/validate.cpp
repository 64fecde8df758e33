#include "hrvtx/validate.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "hrvtx/errors.hpp"
#include "hrvtx/gaussian.hpp"
#include "hrvtx/rng.hpp"
#include "hrvtx/stats.hpp"
#include "hrvtx/util.hpp"
#include "hrvtx/version.hpp"

namespace hrvtx {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<double> column_values(const Eigen::MatrixXd& m, Eigen::Index col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = m(r, col);
  }
  return out;
}

std::string fixed(double v, int decimals, int width = 0) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.*f", width, decimals, v);
  return buf;
}

}  // namespace

std::vector<std::vector<std::string>> make_folds(std::vector<std::string> patient_ids,
                                                 int folds, std::uint64_t seed) {
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()),
                    patient_ids.end());
  const std::size_t n = patient_ids.size();
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (static_cast<std::size_t>(folds) > n) {
    throw DataError("more folds than patients (" + std::to_string(folds) + " > " +
                    std::to_string(n) + ")");
  }

  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(patient_ids[i], patient_ids[j]);
  }

  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(folds));
  const std::size_t base = n / static_cast<std::size_t>(folds);
  const std::size_t extra = n % static_cast<std::size_t>(folds);
  std::size_t at = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    out[f].assign(patient_ids.begin() + static_cast<std::ptrdiff_t>(at),
                  patient_ids.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return out;
}

Eigen::MatrixXd predict_rows(const TransferModel& model, const Eigen::MatrixXd& nsr_rows) {
  Eigen::MatrixXd out(nsr_rows.rows(), nsr_rows.cols());
  for (Eigen::Index r = 0; r < nsr_rows.rows(); ++r) {
    out.row(r) = predict_target(model, nsr_rows.row(r).transpose()).transpose();
  }
  return out;
}

ValidationReport kfold_validate(const std::vector<PatientFeatures>& patients,
                                const ValidateConfig& cfg,
                                const std::string& config_fingerprint) {
  if (patients.size() < 2) throw DataError("cross-validation needs at least 2 patients");
  const Eigen::Index dim = static_cast<Eigen::Index>(HrvVector::kDim);
  std::map<std::string, const PatientFeatures*> by_id;
  std::vector<std::string> ids;
  for (const auto& p : patients) {
    if (p.nsr.cols() != dim || p.af.cols() != dim) {
      throw DataError("feature matrix for " + p.patient_id + " must have " +
                      std::to_string(dim) + " columns");
    }
    if (p.nsr.rows() < 2 || p.af.rows() < 2) {
      throw DataError("patient " + p.patient_id +
                      " needs at least 2 segments per rhythm");
    }
    if (!by_id.emplace(p.patient_id, &p).second) {
      throw DataError("duplicate patient id " + p.patient_id);
    }
    ids.push_back(p.patient_id);
  }

  const auto folds = make_folds(ids, cfg.folds, cfg.seed);

  ValidationReport report;
  report.config_fingerprint = config_fingerprint;
  report.seed = cfg.seed;
  report.folds = cfg.folds;
  report.alpha = cfg.alpha;
  report.pass_p_threshold = cfg.pass_p_threshold;
  report.patients = ids;
  std::sort(report.patients.begin(), report.patients.end());

  double overall_sum = 0.0;
  double overall_baseline_sum = 0.0;
  std::size_t overall_count = 0;
  double overall_best = std::numeric_limits<double>::infinity();
  double overall_worst = -std::numeric_limits<double>::infinity();

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::set<std::string> test_set(folds[f].begin(), folds[f].end());

    std::vector<std::string> train_ids;
    std::vector<Eigen::MatrixXd> train_nsr;
    std::vector<Eigen::MatrixXd> train_af;
    Eigen::Index pooled_rows = 0;
    for (const auto& id : report.patients) {
      if (test_set.count(id)) continue;
      const auto* p = by_id.at(id);
      train_ids.push_back(id);
      train_nsr.push_back(p->nsr);
      train_af.push_back(p->af);
      pooled_rows += p->af.rows();
    }
    if (train_ids.empty()) throw DataError("fold leaves no training patients");

    const TransferModel model =
        fit_transfer_model(train_ids, train_nsr, train_af, cfg.ridge, cfg.k_neighbours,
                           cfg.strict_printed_forms, config_fingerprint);

    Eigen::MatrixXd pooled(pooled_rows, dim);
    Eigen::Index at = 0;
    for (const auto& af : train_af) {
      pooled.middleRows(at, af.rows()) = af;
      at += af.rows();
    }
    const PatientDistribution pooled_dist =
        estimate_distribution(pooled, cfg.ridge, "pooled training AF");

    SplitResult split;
    split.split_id = static_cast<int>(f) + 1;
    split.test_patients = folds[f];
    std::sort(split.test_patients.begin(), split.test_patients.end());

    double sum = 0.0;
    double baseline_sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& id : split.test_patients) {
      const auto* p = by_id.at(id);
      const Eigen::MatrixXd predicted = predict_rows(model, p->nsr);
      const PatientDistribution predicted_dist =
          estimate_distribution(predicted, cfg.ridge, id + " predicted");
      const PatientDistribution observed_dist =
          estimate_distribution(p->af, cfg.ridge, id + " observed");

      const double b = bhattacharyya(predicted_dist, observed_dist, id);
      split.bhattacharyya[id] = b;
      sum += b;
      best = std::min(best, b);
      worst = std::max(worst, b);

      const double bb = bhattacharyya(pooled_dist.mean, pooled_dist.covariance,
                                      observed_dist.mean, observed_dist.covariance, id);
      split.baseline_bhattacharyya[id] = bb;
      baseline_sum += bb;

      for (Eigen::Index i = 0; i < dim; ++i) {
        const auto pred_col = column_values(predicted, i);
        const auto obs_col = column_values(p->af, i);
        split.ks_p[static_cast<std::size_t>(i)][id] =
            ks_two_sample(pred_col, obs_col, cfg.alpha).p_value;
      }

      overall_sum += b;
      overall_baseline_sum += bb;
      ++overall_count;
      overall_best = std::min(overall_best, b);
      overall_worst = std::max(overall_worst, b);
    }
    const double count = static_cast<double>(split.test_patients.size());
    split.mean_bhattacharyya = sum / count;
    split.best_bhattacharyya = best;
    split.worst_bhattacharyya = worst;
    split.baseline_mean_bhattacharyya = baseline_sum / count;
    report.splits.push_back(std::move(split));
  }

  report.overall_mean_bhattacharyya = overall_sum / static_cast<double>(overall_count);
  report.overall_best_bhattacharyya = overall_best;
  report.overall_worst_bhattacharyya = overall_worst;
  report.overall_baseline_mean_bhattacharyya =
      overall_baseline_sum / static_cast<double>(overall_count);

  report.notes.push_back("baseline: Bhattacharyya from the pooled training AF "
                         "distribution to each test patient's observed AF distribution");
  report.notes.push_back("KS p-values from the asymptotic Kolmogorov tail sum");
  report.notes.push_back(
      "fold sizes as equal as possible; with 30 patients and 5 folds every "
      "split trains on 24 and tests on 6");
  return report;
}

namespace {

ordered_json split_to_json(const SplitResult& s) {
  ordered_json j;
  j["split_id"] = s.split_id;
  j["test_patients"] = s.test_patients;
  ordered_json bh = ordered_json::object();
  for (const auto& [id, v] : s.bhattacharyya) bh[id] = v;
  j["bhattacharyya"] = std::move(bh);
  ordered_json bl = ordered_json::object();
  for (const auto& [id, v] : s.baseline_bhattacharyya) bl[id] = v;
  j["baseline_bhattacharyya"] = std::move(bl);
  j["mean_bhattacharyya"] = s.mean_bhattacharyya;
  j["best_bhattacharyya"] = s.best_bhattacharyya;
  j["worst_bhattacharyya"] = s.worst_bhattacharyya;
  j["baseline_mean_bhattacharyya"] = s.baseline_mean_bhattacharyya;
  ordered_json ks = ordered_json::object();
  const auto& names = HrvVector::names();
  for (std::size_t i = 0; i < HrvVector::kDim; ++i) {
    ordered_json per_patient = ordered_json::object();
    for (const auto& [id, p] : s.ks_p[i]) per_patient[id] = p;
    ks[std::string(names[i])] = std::move(per_patient);
  }
  j["ks_p_values"] = std::move(ks);
  return j;
}

SplitResult split_from_json(const ordered_json& j) {
  SplitResult s;
  s.split_id = j.at("split_id").get<int>();
  s.test_patients = j.at("test_patients").get<std::vector<std::string>>();
  for (const auto& [id, v] : j.at("bhattacharyya").items()) {
    s.bhattacharyya[id] = v.get<double>();
  }
  for (const auto& [id, v] : j.at("baseline_bhattacharyya").items()) {
    s.baseline_bhattacharyya[id] = v.get<double>();
  }
  s.mean_bhattacharyya = j.at("mean_bhattacharyya").get<double>();
  s.best_bhattacharyya = j.at("best_bhattacharyya").get<double>();
  s.worst_bhattacharyya = j.at("worst_bhattacharyya").get<double>();
  s.baseline_mean_bhattacharyya = j.at("baseline_mean_bhattacharyya").get<double>();
  const auto& names = HrvVector::names();
  const auto& ks = j.at("ks_p_values");
  for (std::size_t i = 0; i < HrvVector::kDim; ++i) {
    const auto it = ks.find(std::string(names[i]));
    if (it == ks.end()) throw ParseError("report json: missing KS entry");
    for (const auto& [id, p] : it->items()) {
      s.ks_p[i][id] = p.get<double>();
    }
  }
  return s;
}

}  // namespace

std::string report_to_json(const ValidationReport& report) {
  ordered_json j;
  j["schema"] = "hrvtx.report.v1";
  j["tool_version"] = kVersion;
  j["config_fingerprint"] = report.config_fingerprint;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["alpha"] = report.alpha;
  j["pass_p_threshold"] = report.pass_p_threshold;
  j["patients"] = report.patients;
  ordered_json splits = ordered_json::array();
  for (const auto& s : report.splits) splits.push_back(split_to_json(s));
  j["splits"] = std::move(splits);
  ordered_json overall;
  overall["mean_bhattacharyya"] = report.overall_mean_bhattacharyya;
  overall["best_bhattacharyya"] = report.overall_best_bhattacharyya;
  overall["worst_bhattacharyya"] = report.overall_worst_bhattacharyya;
  overall["baseline_mean_bhattacharyya"] = report.overall_baseline_mean_bhattacharyya;
  j["overall"] = std::move(overall);
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

ValidationReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report json: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "hrvtx.report.v1") {
    throw ParseError("report json: missing or unknown schema marker");
  }
  ValidationReport r;
  try {
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.folds = j.at("folds").get<int>();
    r.alpha = j.at("alpha").get<double>();
    r.pass_p_threshold = j.at("pass_p_threshold").get<double>();
    r.patients = j.at("patients").get<std::vector<std::string>>();
    for (const auto& js : j.at("splits")) r.splits.push_back(split_from_json(js));
    const auto& overall = j.at("overall");
    r.overall_mean_bhattacharyya = overall.at("mean_bhattacharyya").get<double>();
    r.overall_best_bhattacharyya = overall.at("best_bhattacharyya").get<double>();
    r.overall_worst_bhattacharyya = overall.at("worst_bhattacharyya").get<double>();
    r.overall_baseline_mean_bhattacharyya =
        overall.at("baseline_mean_bhattacharyya").get<double>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report json: ") + e.what());
  }
  return r;
}

std::string render_report(const ValidationReport& report) {
  std::string out;
  out += "Patients: " + std::to_string(report.patients.size()) +
         "   Folds: " + std::to_string(report.folds) +
         "   Seed: " + std::to_string(report.seed) + "\n\n";

  out += "Bhattacharyya distance, predicted vs observed AF distribution\n";
  out += "Split   Tested  Mean        Best        Worst       PooledBase\n";
  for (const auto& s : report.splits) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-7d %-7zu %-11s %-11s %-11s %-11s\n",
                  s.split_id, s.test_patients.size(),
                  fixed(s.mean_bhattacharyya, 4).c_str(),
                  fixed(s.best_bhattacharyya, 4).c_str(),
                  fixed(s.worst_bhattacharyya, 4).c_str(),
                  fixed(s.baseline_mean_bhattacharyya, 4).c_str());
    out += line;
  }
  if (!report.splits.empty()) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-7s %-7zu %-11s %-11s %-11s %-11s\n", "All",
                  report.patients.size(),
                  fixed(report.overall_mean_bhattacharyya, 4).c_str(),
                  fixed(report.overall_best_bhattacharyya, 4).c_str(),
                  fixed(report.overall_worst_bhattacharyya, 4).c_str(),
                  fixed(report.overall_baseline_mean_bhattacharyya, 4).c_str());
    out += line;
  }
  out += "\n";

  out += "Highest KS p-value among a split's test patients, per index\n";
  out += "Index   ";
  for (const auto& s : report.splits) {
    char head[32];
    std::snprintf(head, sizeof(head), "S%-9d", s.split_id);
    out += head;
  }
  const std::string below_hdr = "below_t";
  const std::string above_hdr = "above_a";
  out += below_hdr + " " + above_hdr + "\n";

  std::vector<std::size_t> pass_below(report.splits.size(), 0);
  std::vector<std::size_t> pass_above(report.splits.size(), 0);
  const auto& display = HrvVector::display_names();
  for (std::size_t i = 0; i < HrvVector::kDim; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%-8s", std::string(display[i]).c_str());
    out += name;
    std::size_t below = 0;
    std::size_t above = 0;
    for (std::size_t f = 0; f < report.splits.size(); ++f) {
      const auto& per_patient = report.splits[f].ks_p[i];
      double max_p = 0.0;
      for (const auto& [id, p] : per_patient) max_p = std::max(max_p, p);
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%-10s", fixed(max_p, 4).c_str());
      out += cell;
      if (max_p < report.pass_p_threshold) {
        ++below;
        ++pass_below[f];
      }
      if (max_p > report.alpha) {
        ++above;
        ++pass_above[f];
      }
    }
    char tail[48];
    std::snprintf(tail, sizeof(tail), "%-7zu %-7zu\n", below, above);
    out += tail;
  }
  if (!report.splits.empty()) {
    out += "\nIndices with max p below " + format_double(report.pass_p_threshold) +
           " per split:";
    for (std::size_t f = 0; f < report.splits.size(); ++f) {
      out += " S" + std::to_string(report.splits[f].split_id) + "=" +
             std::to_string(pass_below[f]);
    }
    out += "\nIndices with max p above alpha " + format_double(report.alpha) +
           " per split:";
    for (std::size_t f = 0; f < report.splits.size(); ++f) {
      out += " S" + std::to_string(report.splits[f].split_id) + "=" +
             std::to_string(pass_above[f]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace hrvtx
