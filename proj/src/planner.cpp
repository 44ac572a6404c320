#include "voxseg/planner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "voxseg/fileio.hpp"
#include "voxseg/nifti.hpp"
#include "voxseg/rng.hpp"
#include "voxseg/taskconv.hpp"

namespace voxseg {

namespace {

constexpr int kPlanVersion = 1;

double percentile(const std::vector<float>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(rank));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = rank - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<double> Fingerprint::median_spacing() const {
    const size_t rank = spacings.front().size();
    std::vector<double> out(rank);
    for (size_t a = 0; a < rank; ++a) {
        std::vector<double> axis;
        for (const auto& sp : spacings) axis.push_back(sp[a]);
        out[a] = median_of(std::move(axis));
    }
    return out;
}

Shape Fingerprint::max_shape() const {
    Shape out = shapes.front();
    for (const auto& s : shapes)
        for (size_t a = 0; a < out.size(); ++a) out[a] = std::max(out[a], s[a]);
    return out;
}

nlohmann::json Fingerprint::to_json() const {
    nlohmann::json j;
    j["case_count"] = case_count;
    j["case_ids"] = case_ids;
    j["shapes"] = shapes;
    j["spacings"] = spacings;
    j["channel_count"] = channel_count;
    j["label_set"] = label_set;
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& s : channel_stats)
        stats.push_back({{"mean", s.mean}, {"std", s.stddev}, {"p00_5", s.p00_5}, {"p50", s.p50}, {"p99_5", s.p99_5}});
    j["channel_stats"] = stats;
    j["content_hash"] = content_hash;
    j["sample_seed"] = sample_seed;
    j["samples_per_case"] = samples_per_case;
    return j;
}

Fingerprint Fingerprint::from_json(const nlohmann::json& j) {
    Fingerprint fp;
    fp.case_count = j.at("case_count").get<int64_t>();
    fp.case_ids = j.at("case_ids").get<std::vector<std::string>>();
    fp.shapes = j.at("shapes").get<std::vector<Shape>>();
    fp.spacings = j.at("spacings").get<std::vector<std::vector<double>>>();
    fp.channel_count = j.at("channel_count").get<int64_t>();
    fp.label_set = j.at("label_set").get<std::vector<int32_t>>();
    for (const auto& s : j.at("channel_stats")) {
        IntensityStats st;
        st.mean = s.at("mean").get<double>();
        st.stddev = s.at("std").get<double>();
        st.p00_5 = s.at("p00_5").get<double>();
        st.p50 = s.at("p50").get<double>();
        st.p99_5 = s.at("p99_5").get<double>();
        fp.channel_stats.push_back(st);
    }
    fp.content_hash = j.at("content_hash").get<std::string>();
    fp.sample_seed = j.at("sample_seed").get<uint64_t>();
    fp.samples_per_case = j.at("samples_per_case").get<int64_t>();
    return fp;
}

Fingerprint fingerprint_dataset(const std::filesystem::path& task_dir, const PathGuard& guard,
                                const FingerprintConfig& cfg) {
    const std::vector<std::string> ids = list_case_ids(task_dir, "imagesTr");
    if (ids.empty()) throw EmptyDataset("task has no training cases: " + task_dir.string());

    Fingerprint fp;
    fp.case_count = static_cast<int64_t>(ids.size());
    fp.case_ids = ids;
    fp.sample_seed = cfg.sample_seed;
    fp.samples_per_case = cfg.samples_per_case;

    std::set<int32_t> labels;
    std::vector<std::vector<float>> pooled;  // per channel
    std::string hash_input;

    for (size_t ci = 0; ci < ids.size(); ++ci) {
        const std::string& id = ids[ci];
        const auto image_paths = case_image_paths(task_dir, "imagesTr", id);
        if (image_paths.empty()) throw InconsistentDataset("case '" + id + "' has no image files");
        if (fp.channel_count == 0) {
            fp.channel_count = static_cast<int64_t>(image_paths.size());
            pooled.resize(image_paths.size());
        } else if (fp.channel_count != static_cast<int64_t>(image_paths.size())) {
            throw InconsistentDataset("case '" + id + "' has " + std::to_string(image_paths.size()) +
                                      " modalities, expected " + std::to_string(fp.channel_count));
        }

        Shape shape;
        std::vector<double> spacing;
        for (size_t m = 0; m < image_paths.size(); ++m) {
            guard.check(image_paths[m]);
            const Volume v = read_volume(image_paths[m]);
            if (m == 0) {
                shape = v.spatial_shape();
                spacing = v.spacing;
            } else if (v.spatial_shape() != shape) {
                throw InconsistentDataset("case '" + id + "': modality shapes differ");
            }
            hash_input += image_paths[m].filename().string() + ":" + io::hash_file_decompressed(image_paths[m]) + "\n";

            // Seeded voxel subsample keeps memory bounded on large cases.
            const int64_t nvox = shape_numel(v.spatial_shape());
            const int64_t want = std::min<int64_t>(cfg.samples_per_case, nvox);
            rng::Stream stream({cfg.sample_seed, 0x66696e6765727072ULL, static_cast<uint64_t>(ci), static_cast<uint64_t>(m)});
            auto& pool = pooled[m];
            if (want == nvox) {
                for (int64_t i = 0; i < nvox; ++i) pool.push_back(v.data[i]);
            } else {
                for (int64_t i = 0; i < want; ++i)
                    pool.push_back(v.data[static_cast<int64_t>(stream.next_below(static_cast<uint64_t>(nvox)))]);
            }
        }
        fp.shapes.push_back(shape);
        fp.spacings.push_back(spacing);

        const auto label_path = case_label_path(task_dir, "labelsTr", id);
        if (std::filesystem::exists(label_path)) {
            guard.check(label_path);
            const LabelMap seg = read_labelmap(label_path);
            for (int64_t i = 0; i < seg.data.numel(); ++i) labels.insert(seg.data[i]);
            hash_input += label_path.filename().string() + ":" + io::hash_file_decompressed(label_path) + "\n";
        }
    }
    labels.insert(0);
    fp.label_set.assign(labels.begin(), labels.end());

    for (auto& pool : pooled) {
        IntensityStats st;
        double sum = 0.0, sumsq = 0.0;
        for (float v : pool) {
            sum += v;
            sumsq += static_cast<double>(v) * v;
        }
        const double n = static_cast<double>(pool.size());
        st.mean = sum / n;
        st.stddev = std::sqrt(std::max(0.0, sumsq / n - st.mean * st.mean));
        std::sort(pool.begin(), pool.end());
        st.p00_5 = percentile(pool, 0.5);
        st.p50 = percentile(pool, 50.0);
        st.p99_5 = percentile(pool, 99.5);
        if (!(st.p00_5 <= st.p50 && st.p50 <= st.p99_5))
            throw InconsistentDataset("percentiles not monotone (non-finite data?)");
        fp.channel_stats.push_back(st);
    }
    fp.content_hash = io::sha256_hex(hash_input);
    return fp;
}

std::string to_string(Normalization n) {
    switch (n) {
        case Normalization::Zscore: return "zscore";
        case Normalization::ZscoreNonzero: return "zscore_nonzero";
        case Normalization::ClipPercentilesThenZscore: return "clip_percentiles_then_zscore";
        case Normalization::None: return "none";
    }
    return "none";
}

Normalization normalization_from_string(const std::string& s) {
    if (s == "zscore") return Normalization::Zscore;
    if (s == "zscore_nonzero") return Normalization::ZscoreNonzero;
    if (s == "clip_percentiles_then_zscore") return Normalization::ClipPercentilesThenZscore;
    if (s == "none") return Normalization::None;
    throw PlanFormatError("unknown normalization scheme: " + s);
}

void Plan::validate() const {
    if (target_spacing.has_value() == target_shape.has_value())
        throw PlanFormatError("exactly one of target_spacing/target_shape must be set");
    if (target_spacing)
        for (double s : *target_spacing)
            if (!(s > 0.0) || !std::isfinite(s)) throw PlanFormatError("target_spacing must be positive");
    if (target_shape)
        for (int64_t d : *target_shape)
            if (d < 1) throw PlanFormatError("target_shape must be >= 1");
    std::vector<int> check = transpose;
    std::sort(check.begin(), check.end());
    for (size_t i = 0; i < check.size(); ++i)
        if (check[i] != static_cast<int>(i)) throw PlanFormatError("transpose is not a permutation");
    if (static_cast<int64_t>(normalization.size()) != fingerprint.channel_count)
        throw PlanFormatError("normalization entries must match channel count");
    if (format_version != kPlanVersion)
        throw VersionError("unsupported plan format_version " + std::to_string(format_version));
}

namespace {

Plan plan_common(const Fingerprint& fp, const std::string& name) {
    Plan p;
    p.planner_name = name;
    p.transpose.resize(fp.spacings.front().size());
    for (size_t i = 0; i < p.transpose.size(); ++i) p.transpose[i] = static_cast<int>(i);
    p.normalization.assign(static_cast<size_t>(fp.channel_count), Normalization::ClipPercentilesThenZscore);
    p.fingerprint = fp;
    p.format_version = kPlanVersion;
    return p;
}

}  // namespace

Plan make_plan_default(const Fingerprint& fp) {
    Plan p = plan_common(fp, "default");
    p.target_spacing = fp.median_spacing();
    p.crop_to_nonzero = true;
    p.validate();
    return p;
}

Plan make_plan_maxsize(const Fingerprint& fp) {
    Plan p = plan_common(fp, "maxsize");
    p.target_shape = fp.max_shape();
    p.crop_to_nonzero = false;
    p.validate();
    return p;
}

std::string serialize_plan(const Plan& p) {
    p.validate();
    nlohmann::json j;
    j["planner_name"] = p.planner_name;
    if (p.target_spacing) j["target_spacing"] = *p.target_spacing;
    if (p.target_shape) j["target_shape"] = *p.target_shape;
    j["transpose"] = p.transpose;
    j["crop_to_nonzero"] = p.crop_to_nonzero;
    nlohmann::json norms = nlohmann::json::array();
    for (auto n : p.normalization) norms.push_back(to_string(n));
    j["normalization"] = norms;
    j["fingerprint"] = p.fingerprint.to_json();
    j["format_version"] = p.format_version;
    return io::canonical_json(j);
}

Plan parse_plan(const std::string& bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw PlanFormatError("plan is not a JSON object");
    const int version = j.value("format_version", -1);
    if (version != kPlanVersion) throw VersionError("unsupported plan format_version " + std::to_string(version));
    Plan p;
    try {
        p.planner_name = j.at("planner_name").get<std::string>();
        if (j.contains("target_spacing")) p.target_spacing = j["target_spacing"].get<std::vector<double>>();
        if (j.contains("target_shape")) p.target_shape = j["target_shape"].get<Shape>();
        p.transpose = j.at("transpose").get<std::vector<int>>();
        p.crop_to_nonzero = j.at("crop_to_nonzero").get<bool>();
        for (const auto& n : j.at("normalization")) p.normalization.push_back(normalization_from_string(n.get<std::string>()));
        p.fingerprint = Fingerprint::from_json(j.at("fingerprint"));
        p.format_version = version;
    } catch (const nlohmann::json::exception& e) {
        throw PlanFormatError(std::string("plan schema violation: ") + e.what());
    }
    p.validate();
    return p;
}

std::string plan_hash(const Plan& p) { return io::sha256_hex(serialize_plan(p)); }

void write_plan(const Plan& p, const std::filesystem::path& path) { io::write_text_file(path, serialize_plan(p)); }

Plan read_plan(const std::filesystem::path& path) { return parse_plan(io::read_text_file(path)); }

}  // namespace voxseg
