#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hrvtx/features.hpp"
#include "hrvtx/segment.hpp"
#include "hrvtx/validate.hpp"
#include "hrvtx/wfdb.hpp"

namespace hrvtx {

// Everything the pipeline can be told, grouped by the stage it influences.
struct RunConfig {
  wfdb::IngestConfig ingest;
  SegmentConfig segment;
  FeatureConfig features;
  struct ModelSection {
    double ridge = 1e-3;
    int k_neighbours = 0;  // 0 blends every training patient
    bool strict_printed_forms = false;
  } model;
  struct ValidateSection {
    int folds = 5;
    std::uint64_t seed = 20240101;
    double alpha = 0.05;
    double pass_p_threshold = 0.05;
  } validate;

  ValidateConfig validate_config() const;
};

// Stage names, in pipeline order. Lineage hashes are keyed by these.
inline constexpr const char* kSectionIngest = "ingest";
inline constexpr const char* kSectionSegment = "segment";
inline constexpr const char* kSectionFeatures = "features";
inline constexpr const char* kSectionModel = "model";
inline constexpr const char* kSectionValidate = "validate";

std::string config_to_json(const RunConfig& cfg);
// Overlays the keys present in `text` onto `base`; unknown keys are
// ConfigErrors so typos cannot silently fall back to defaults.
RunConfig config_from_json(const std::string& text, const RunConfig& base = {});
RunConfig config_from_file(const std::filesystem::path& path,
                           const RunConfig& base = {});

// Hash of the full canonical config JSON.
std::string config_fingerprint(const RunConfig& cfg);
// Hash of one section's canonical JSON.
std::string section_hash(const RunConfig& cfg, const std::string& section);

// Sidecar written next to every artifact ("<artifact>.meta.json"). The
// lineage map records the section hashes that shaped the artifact, so a
// downstream stage can detect stale inputs without caring about knobs that
// only matter later in the pipeline. No timestamps: artifacts from equal
// configs and inputs are byte-identical.
struct ArtifactMeta {
  std::string command;
  std::string config_fingerprint;
  std::map<std::string, std::string> lineage;
  struct Input {
    std::string path;    // as given on the command line
    std::string digest;  // fnv1a64 of the raw bytes
  };
  std::vector<Input> inputs;
  RunConfig config;
};

std::filesystem::path meta_path(const std::filesystem::path& artifact);
void write_meta(const std::filesystem::path& artifact, const ArtifactMeta& meta);
std::optional<ArtifactMeta> read_meta(const std::filesystem::path& artifact);

// Compares the sidecar's lineage (when a sidecar exists) against the current
// config for every section named in `relevant`; any disagreement is a
// DataError telling the user which stage to rerun. Sections absent from the
// sidecar are not checked. Returns false when no sidecar was found.
bool check_input_lineage(const std::filesystem::path& artifact, const RunConfig& cfg,
                         const std::vector<std::string>& relevant);

std::string file_digest(const std::filesystem::path& path);

}  // namespace hrvtx
