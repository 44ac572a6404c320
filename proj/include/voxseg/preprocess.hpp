#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voxseg/imageops.hpp"
#include "voxseg/planner.hpp"
#include "voxseg/volume.hpp"

namespace voxseg {

// Everything required to map a prediction on the preprocessed grid back onto
// the original one. Grids chain as:
//   original -> transpose -> crop -> resample (-> pad at inference time)
struct InversionMeta {
    Shape original_shape;                 // canonical, pre-transpose
    std::vector<double> original_spacing;
    std::vector<int> transpose;
    BBox crop_bbox;                       // in the post-transpose grid
    Shape resampled_shape;                // grid the model sees (pre-pad)
    PadSpec pad;                          // empty/zero when nothing was padded
    std::string plan_hash;

    nlohmann::json to_json() const;
    static InversionMeta from_json(const nlohmann::json& j);
};

struct CaseRecord {
    std::string case_id;
    ArrayF image;                         // [channel, spatial...]
    std::optional<ArrayI> seg;
    InversionMeta meta;
    std::vector<int64_t> fg_indices;      // sampled foreground voxels (flat)
    std::optional<int> class_label;       // classification variant
};

// Executes a plan on one case: transpose -> crop -> resample -> normalize,
// recording inversion metadata and a seeded foreground-voxel sample.
CaseRecord preprocess_case(const Volume& image, const LabelMap* seg, const Plan& plan,
                           uint64_t fg_sample_seed = 0, int64_t max_fg_samples = 10000);

// Image pathway only; bitwise-equal to preprocess_case on the same input.
std::pair<ArrayF, InversionMeta> preprocess_case_for_inference(const Volume& image, const Plan& plan);

// Reverses pad, resampling (linear), crop and transpose on a class-probability
// array [classes, spatial...]. Outside the crop box the background channel
// receives probability 1.
ArrayF invert_preprocessing(const ArrayF& pred, const InversionMeta& meta);

// Same chain for hard labels (nearest resampling, background 0 outside).
ArrayI invert_preprocessing(const ArrayI& pred, const InversionMeta& meta);

// Classification variant: the scalar class ends up in case metadata.
CaseRecord preprocess_classification_case(const Volume& image, int class_label, const Plan& plan);

// Parses the single-integer .txt class files of classification datasets.
int parse_class_label_file(const std::filesystem::path& path);

struct PreprocessSummary {
    int64_t case_count = 0;
    uint64_t total_bytes = 0;
    std::vector<std::string> case_ids;
    bool up_to_date = false;  // nothing had to be rewritten
};

// Preprocesses every training case into out_dir ('case_<id>.bin' +
// 'case_<id>.meta.json' (+ 'case_<id>_seg.bin')), with plan.json alongside.
PreprocessSummary preprocess_dataset(const std::filesystem::path& task_dir, const Plan& plan,
                                     const std::filesystem::path& out_dir, const PathGuard& guard);

// Loads one preprocessed case back from disk.
CaseRecord load_case_record(const std::filesystem::path& out_dir, const std::string& case_id);

std::vector<std::string> list_preprocessed_cases(const std::filesystem::path& out_dir);

}  // namespace voxseg
