#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voxseg/pathguard.hpp"

namespace voxseg {

// Source description for one case: one image file per modality, optionally a
// segmentation (or a plain-text class label for classification datasets).
struct SourceCase {
    std::string id;
    std::vector<std::filesystem::path> images;
    std::optional<std::filesystem::path> label;
};

struct SourceSpec {
    std::vector<SourceCase> cases;
    std::string description;

    // Parses the JSON source description used by the CLI `convert` command.
    static SourceSpec from_json_file(const std::filesystem::path& path);
};

struct ManifestEntry {
    std::string relative_path;
    std::string sha256;          // of the decompressed payload
    uint64_t byte_size = 0;      // on-disk size
    std::string case_id;
    std::string partition;       // "train" | "test"
};

struct Manifest {
    std::string task_name;
    uint64_t seed = 0;
    double test_fraction = 0.0;
    std::string source_description;
    std::vector<ManifestEntry> entries;  // sorted by relative_path

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

// Restructures raw cases into the task layout under dest_root/task_name:
// imagesTr/labelsTr/imagesTs/labelsTs with case_<id>_<modality:04d>.nii.gz
// naming. The test partition is the first ceil(N*test_fraction) ids of the
// seeded shuffle of sorted case ids. Re-running with identical inputs is a
// no-op returning an identical manifest.
Manifest convert_task(const SourceSpec& source, const std::filesystem::path& dest_root,
                      const std::string& task_name, double test_fraction, uint64_t seed);

struct Finding {
    std::string severity;  // "error" | "warning"
    std::string where;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const {
        for (const auto& f : findings)
            if (f.severity == "error") return false;
        return true;
    }
};

// Integrity checks: naming convention, image/label geometry and spacing
// agreement (1e-4 mm), integer labels, manifest hash agreement.
ValidationReport validate_task(const std::filesystem::path& task_dir);

// Guard factory for pipeline stages (see PathGuard).
PathGuard guard_paths(Stage stage, const std::filesystem::path& task_dir);

// Sorted training / test case ids present in a task layout.
std::vector<std::string> list_case_ids(const std::filesystem::path& task_dir, const std::string& images_subdir);

// Image paths of one case in modality order, and its label path.
std::vector<std::filesystem::path> case_image_paths(const std::filesystem::path& task_dir,
                                                    const std::string& images_subdir, const std::string& case_id);
std::filesystem::path case_label_path(const std::filesystem::path& task_dir, const std::string& labels_subdir,
                                      const std::string& case_id);

// The deterministic partition rule, exposed for tests and reuse:
// seeded shuffle of sorted ids, first ceil(N*fraction) to test.
std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(std::vector<std::string> ids,
                                                                               double test_fraction, uint64_t seed);

}  // namespace voxseg
