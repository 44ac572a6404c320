#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voxseg/ndarray.hpp"
#include "voxseg/pathguard.hpp"

namespace voxseg {

struct IntensityStats {
    double mean = 0.0;
    double stddev = 0.0;
    double p00_5 = 0.0;
    double p50 = 0.0;
    double p99_5 = 0.0;
};

// Statistical summary of a task's training partition.
struct Fingerprint {
    int64_t case_count = 0;
    std::vector<std::string> case_ids;
    std::vector<Shape> shapes;                    // per case, canonical spatial
    std::vector<std::vector<double>> spacings;    // per case, mm
    int64_t channel_count = 0;
    std::vector<int32_t> label_set;               // union over cases, sorted
    std::vector<IntensityStats> channel_stats;    // pooled over sampled voxels
    std::string content_hash;                     // over per-file payload hashes
    uint64_t sample_seed = 0;
    int64_t samples_per_case = 100000;

    std::vector<double> median_spacing() const;
    Shape max_shape() const;

    nlohmann::json to_json() const;
    static Fingerprint from_json(const nlohmann::json& j);
};

struct FingerprintConfig {
    uint64_t sample_seed = 0;
    int64_t samples_per_case = 100000;
};

// Analyzes the training partition only (guard enforced), deterministically
// for a fixed dataset and seed.
Fingerprint fingerprint_dataset(const std::filesystem::path& task_dir, const PathGuard& guard,
                                const FingerprintConfig& cfg = {});

enum class Normalization { Zscore, ZscoreNonzero, ClipPercentilesThenZscore, None };

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

// Preprocessing recipe. Exactly one of target_spacing/target_shape is set.
struct Plan {
    std::string planner_name;
    std::optional<std::vector<double>> target_spacing;
    std::optional<Shape> target_shape;
    std::vector<int> transpose;                  // spatial permutation
    bool crop_to_nonzero = true;
    std::vector<Normalization> normalization;    // per channel
    Fingerprint fingerprint;
    int format_version = 1;

    void validate() const;
};

// Dynamic-spacing plan: per-axis median spacing target, crop enabled,
// clip-percentiles-then-zscore normalization.
Plan make_plan_default(const Fingerprint& fp);

// Static-shape plan: element-wise maximum of training shapes, crop disabled.
Plan make_plan_maxsize(const Fingerprint& fp);

std::string serialize_plan(const Plan& p);
Plan parse_plan(const std::string& bytes);

// Hash of the serialized plan; recorded in preprocessed cases and checked at
// prediction time.
std::string plan_hash(const Plan& p);

void write_plan(const Plan& p, const std::filesystem::path& path);
Plan read_plan(const std::filesystem::path& path);

}  // namespace voxseg
