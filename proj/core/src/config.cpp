#include "hrvtx/config.hpp"

#include <json.hpp>

#include "hrvtx/errors.hpp"
#include "hrvtx/util.hpp"
#include "hrvtx/version.hpp"

namespace hrvtx {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json ingest_to_json(const wfdb::IngestConfig& c) {
  ordered_json j;
  j["nn_min_ms"] = c.nn_min_ms;
  j["nn_max_ms"] = c.nn_max_ms;
  return j;
}

ordered_json segment_to_json(const SegmentConfig& c) {
  ordered_json j;
  j["window_s"] = c.window_s;
  j["step_s"] = c.step_s;
  j["anchor_s"] = c.anchor_s;
  j["min_nn_per_segment"] = c.min_nn_per_segment;
  j["min_segments_per_rhythm"] = c.min_segments_per_rhythm;
  return j;
}

ordered_json features_to_json(const FeatureConfig& c) {
  ordered_json j;
  j["lf_lo_hz"] = c.bands.lf_lo;
  j["lf_hi_hz"] = c.bands.lf_hi;
  j["hf_hi_hz"] = c.bands.hf_hi;
  j["vhf_hi_hz"] = c.bands.vhf_hi;
  j["resample_hz"] = c.resample_hz;
  j["welch_window_s"] = c.welch_window_s;
  j["welch_overlap"] = c.welch_overlap;
  j["apen_m"] = c.apen_m;
  j["apen_r_factor"] = c.apen_r_factor;
  j["hist_bin_ms"] = c.hist_bin_ms;
  return j;
}

ordered_json model_to_json_section(const RunConfig::ModelSection& c) {
  ordered_json j;
  j["ridge"] = c.ridge;
  j["k_neighbours"] = c.k_neighbours;
  j["strict_printed_forms"] = c.strict_printed_forms;
  return j;
}

ordered_json validate_to_json_section(const RunConfig::ValidateSection& c) {
  ordered_json j;
  j["folds"] = c.folds;
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["pass_p_threshold"] = c.pass_p_threshold;
  return j;
}

ordered_json config_to_ordered_json(const RunConfig& cfg) {
  ordered_json j;
  j[kSectionIngest] = ingest_to_json(cfg.ingest);
  j[kSectionSegment] = segment_to_json(cfg.segment);
  j[kSectionFeatures] = features_to_json(cfg.features);
  j[kSectionModel] = model_to_json_section(cfg.model);
  j[kSectionValidate] = validate_to_json_section(cfg.validate);
  return j;
}

// Applies the keys present in `src` to the typed fields, rejecting unknowns.
template <typename Apply>
void overlay_section(const ordered_json& src, const char* section, Apply&& apply) {
  if (!src.is_object()) {
    throw ConfigError(std::string("config section '") + section + "' must be an object");
  }
  for (const auto& [key, value] : src.items()) {
    if (!apply(key, value)) {
      throw ConfigError(std::string("unknown key '") + key + "' in config section '" +
                        section + "'");
    }
  }
}

}  // namespace

ValidateConfig RunConfig::validate_config() const {
  ValidateConfig v;
  v.folds = validate.folds;
  v.seed = validate.seed;
  v.alpha = validate.alpha;
  v.pass_p_threshold = validate.pass_p_threshold;
  v.ridge = model.ridge;
  v.k_neighbours = model.k_neighbours;
  v.strict_printed_forms = model.strict_printed_forms;
  return v;
}

std::string config_to_json(const RunConfig& cfg) {
  return config_to_ordered_json(cfg).dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, const RunConfig& base) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config json: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config json: top level must be an object");

  RunConfig cfg = base;
  try {
    for (const auto& [section, body] : j.items()) {
      if (section == kSectionIngest) {
        overlay_section(body, kSectionIngest, [&](const std::string& k, const ordered_json& v) {
          if (k == "nn_min_ms") cfg.ingest.nn_min_ms = v.get<double>();
          else if (k == "nn_max_ms") cfg.ingest.nn_max_ms = v.get<double>();
          else return false;
          return true;
        });
      } else if (section == kSectionSegment) {
        overlay_section(body, kSectionSegment, [&](const std::string& k, const ordered_json& v) {
          if (k == "window_s") cfg.segment.window_s = v.get<double>();
          else if (k == "step_s") cfg.segment.step_s = v.get<double>();
          else if (k == "anchor_s") cfg.segment.anchor_s = v.get<double>();
          else if (k == "min_nn_per_segment") cfg.segment.min_nn_per_segment = v.get<int>();
          else if (k == "min_segments_per_rhythm") {
            cfg.segment.min_segments_per_rhythm = v.get<int>();
          } else return false;
          return true;
        });
      } else if (section == kSectionFeatures) {
        overlay_section(body, kSectionFeatures, [&](const std::string& k, const ordered_json& v) {
          if (k == "lf_lo_hz") cfg.features.bands.lf_lo = v.get<double>();
          else if (k == "lf_hi_hz") cfg.features.bands.lf_hi = v.get<double>();
          else if (k == "hf_hi_hz") cfg.features.bands.hf_hi = v.get<double>();
          else if (k == "vhf_hi_hz") cfg.features.bands.vhf_hi = v.get<double>();
          else if (k == "resample_hz") cfg.features.resample_hz = v.get<double>();
          else if (k == "welch_window_s") cfg.features.welch_window_s = v.get<double>();
          else if (k == "welch_overlap") cfg.features.welch_overlap = v.get<double>();
          else if (k == "apen_m") cfg.features.apen_m = v.get<int>();
          else if (k == "apen_r_factor") cfg.features.apen_r_factor = v.get<double>();
          else if (k == "hist_bin_ms") cfg.features.hist_bin_ms = v.get<double>();
          else return false;
          return true;
        });
      } else if (section == kSectionModel) {
        overlay_section(body, kSectionModel, [&](const std::string& k, const ordered_json& v) {
          if (k == "ridge") cfg.model.ridge = v.get<double>();
          else if (k == "k_neighbours") cfg.model.k_neighbours = v.get<int>();
          else if (k == "strict_printed_forms") {
            cfg.model.strict_printed_forms = v.get<bool>();
          } else return false;
          return true;
        });
      } else if (section == kSectionValidate) {
        overlay_section(body, kSectionValidate, [&](const std::string& k, const ordered_json& v) {
          if (k == "folds") cfg.validate.folds = v.get<int>();
          else if (k == "seed") cfg.validate.seed = v.get<std::uint64_t>();
          else if (k == "alpha") cfg.validate.alpha = v.get<double>();
          else if (k == "pass_p_threshold") cfg.validate.pass_p_threshold = v.get<double>();
          else return false;
          return true;
        });
      } else {
        throw ConfigError("unknown config section '" + section + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config json: ") + e.what());
  }
  return cfg;
}

RunConfig config_from_file(const std::filesystem::path& path, const RunConfig& base) {
  return config_from_json(read_text_file(path), base);
}

std::string config_fingerprint(const RunConfig& cfg) {
  return fnv1a64_hex(config_to_ordered_json(cfg).dump());
}

std::string section_hash(const RunConfig& cfg, const std::string& section) {
  const ordered_json j = config_to_ordered_json(cfg);
  if (!j.contains(section)) throw ConfigError("unknown config section '" + section + "'");
  return fnv1a64_hex(j.at(section).dump());
}

std::filesystem::path meta_path(const std::filesystem::path& artifact) {
  std::filesystem::path p = artifact;
  p += ".meta.json";
  return p;
}

void write_meta(const std::filesystem::path& artifact, const ArtifactMeta& meta) {
  ordered_json j;
  j["schema"] = "hrvtx.meta.v1";
  j["tool_version"] = kVersion;
  j["command"] = meta.command;
  j["config_fingerprint"] = meta.config_fingerprint;
  ordered_json lineage = ordered_json::object();
  for (const auto& [k, v] : meta.lineage) lineage[k] = v;
  j["lineage"] = std::move(lineage);
  ordered_json inputs = ordered_json::array();
  for (const auto& in : meta.inputs) {
    ordered_json ji;
    ji["path"] = in.path;
    ji["digest"] = in.digest;
    inputs.push_back(std::move(ji));
  }
  j["inputs"] = std::move(inputs);
  j["config"] = ordered_json::parse(config_to_json(meta.config));
  write_text_file(meta_path(artifact), j.dump(2) + "\n");
}

std::optional<ArtifactMeta> read_meta(const std::filesystem::path& artifact) {
  const auto path = meta_path(artifact);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;

  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (j.value("schema", "") != "hrvtx.meta.v1") {
    throw ParseError(path.string() + ": missing or unknown schema marker");
  }
  ArtifactMeta meta;
  try {
    meta.command = j.at("command").get<std::string>();
    meta.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    for (const auto& [k, v] : j.at("lineage").items()) {
      meta.lineage[k] = v.get<std::string>();
    }
    for (const auto& in : j.at("inputs")) {
      meta.inputs.push_back({in.at("path").get<std::string>(),
                             in.at("digest").get<std::string>()});
    }
    meta.config = config_from_json(j.at("config").dump());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return meta;
}

bool check_input_lineage(const std::filesystem::path& artifact, const RunConfig& cfg,
                         const std::vector<std::string>& relevant) {
  const auto meta = read_meta(artifact);
  if (!meta) return false;
  for (const auto& section : relevant) {
    const auto it = meta->lineage.find(section);
    if (it == meta->lineage.end()) continue;
    const std::string current = section_hash(cfg, section);
    if (current != it->second) {
      throw DataError(artifact.string() + " was produced under a different '" +
                      section + "' configuration; rerun the earlier stage or align "
                      "the flags (sidecar " + it->second + ", current " + current + ")");
    }
  }
  return true;
}

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  return fnv1a64_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                      bytes.size()));
}

}  // namespace hrvtx
