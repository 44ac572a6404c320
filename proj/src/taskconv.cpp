#include "voxseg/taskconv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "voxseg/fileio.hpp"
#include "voxseg/nifti.hpp"
#include "voxseg/rng.hpp"

namespace voxseg {

namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

std::string modality_suffix(int m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_%04d", m);
    return buf;
}

// case_<id>_<modality:04d>(.nii|.nii.gz); id may itself contain underscores,
// the modality is the last component.
bool parse_image_name(const std::string& name, std::string& case_id, int& modality) {
    std::string stem = name;
    if (stem.ends_with(".nii.gz"))
        stem = stem.substr(0, stem.size() - 7);
    else if (stem.ends_with(".nii"))
        stem = stem.substr(0, stem.size() - 4);
    else
        return false;
    if (!stem.starts_with("case_")) return false;
    const size_t us = stem.rfind('_');
    if (us == std::string::npos || us < 5 || stem.size() - us - 1 != 4) return false;
    const std::string mod = stem.substr(us + 1);
    for (char c : mod)
        if (!isdigit(static_cast<unsigned char>(c))) return false;
    case_id = stem.substr(5, us - 5);
    modality = std::stoi(mod);
    return !case_id.empty();
}

bool parse_label_name(const std::string& name, std::string& case_id) {
    std::string stem = name;
    if (stem.ends_with(".nii.gz"))
        stem = stem.substr(0, stem.size() - 7);
    else if (stem.ends_with(".nii"))
        stem = stem.substr(0, stem.size() - 4);
    else
        return false;
    if (!stem.starts_with("case_")) return false;
    case_id = stem.substr(5);
    return !case_id.empty();
}

bool spacing_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-4) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

// Writes `write` to a temp file; if dest already holds the same payload the
// temp is dropped and dest left untouched.
template <class WriteFn>
void write_if_changed(const fs::path& dest, WriteFn&& write) {
    const fs::path tmp = dest.parent_path() / (dest.filename().string() + ".tmp");
    write(tmp);
    if (fs::exists(dest)) {
        const std::string old_hash = io::hash_file_decompressed(dest);
        const std::string new_hash = io::hash_file_decompressed(tmp);
        if (old_hash == new_hash) {
            fs::remove(tmp);
            return;
        }
    }
    fs::rename(tmp, dest);
}

}  // namespace

SourceSpec SourceSpec::from_json_file(const fs::path& path) {
    const nlohmann::json j = io::read_json(path);
    if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array())
        throw ParseError("source spec must be an object with a 'cases' array: " + path.string());
    SourceSpec spec;
    spec.description = j.value("description", std::string{});
    const fs::path base = path.parent_path();
    for (const auto& c : j["cases"]) {
        SourceCase sc;
        sc.id = c.value("id", std::string{});
        if (sc.id.empty()) throw ParseError("source case without id: " + path.string());
        if (!c.contains("images") || !c["images"].is_array() || c["images"].empty())
            throw ParseError("source case '" + sc.id + "' must list at least one image");
        for (const auto& p : c["images"]) {
            fs::path img = p.get<std::string>();
            sc.images.push_back(img.is_absolute() ? img : base / img);
        }
        if (c.contains("label")) {
            fs::path lab = c["label"].get<std::string>();
            sc.label = lab.is_absolute() ? lab : base / lab;
        }
        spec.cases.push_back(std::move(sc));
    }
    return spec;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(std::vector<std::string> ids,
                                                                               double test_fraction, uint64_t seed) {
    if (!(test_fraction >= 0.0) || test_fraction >= 1.0)
        throw DomainError("test_fraction must lie in [0, 1)");
    std::sort(ids.begin(), ids.end());
    rng::Stream stream({seed, 0x7461736b73706c74ULL});  // "tasksplt"
    stream.shuffle(ids);
    const size_t n_test = static_cast<size_t>(std::ceil(static_cast<double>(ids.size()) * test_fraction));
    std::vector<std::string> test(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::string> train(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {train, test};
}

nlohmann::json Manifest::to_json() const {
    nlohmann::json j;
    j["format_version"] = kManifestVersion;
    j["task"] = task_name;
    j["seed"] = seed;
    j["test_fraction"] = test_fraction;
    j["source_description"] = source_description;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"path", e.relative_path},
                       {"sha256", e.sha256},
                       {"bytes", e.byte_size},
                       {"case", e.case_id},
                       {"partition", e.partition}});
    }
    j["files"] = arr;
    return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format_version", -1) != kManifestVersion)
        throw ParseError("unsupported manifest format");
    Manifest m;
    m.task_name = j.value("task", std::string{});
    m.seed = j.value("seed", 0ULL);
    m.test_fraction = j.value("test_fraction", 0.0);
    m.source_description = j.value("source_description", std::string{});
    for (const auto& e : j.value("files", nlohmann::json::array())) {
        ManifestEntry me;
        me.relative_path = e.value("path", std::string{});
        me.sha256 = e.value("sha256", std::string{});
        me.byte_size = e.value("bytes", 0ULL);
        me.case_id = e.value("case", std::string{});
        me.partition = e.value("partition", std::string{});
        m.entries.push_back(std::move(me));
    }
    return m;
}

Manifest convert_task(const SourceSpec& source, const fs::path& dest_root, const std::string& task_name,
                      double test_fraction, uint64_t seed) {
    if (source.cases.empty()) throw EmptyDataset("source spec lists no cases");
    {
        std::set<std::string> seen;
        for (const auto& c : source.cases)
            if (!seen.insert(c.id).second) throw DuplicateCase("duplicate case id: " + c.id);
    }
    std::vector<std::string> ids;
    for (const auto& c : source.cases) ids.push_back(c.id);
    auto [train_ids, test_ids] = split_train_test(ids, test_fraction, seed);
    const std::set<std::string> test_set(test_ids.begin(), test_ids.end());

    std::map<std::string, const SourceCase*> by_id;
    for (const auto& c : source.cases) by_id[c.id] = &c;

    const fs::path task_dir = dest_root / task_name;
    for (const char* sub : {"imagesTr", "labelsTr", "imagesTs", "labelsTs"})
        fs::create_directories(task_dir / sub);

    Manifest manifest;
    manifest.task_name = task_name;
    manifest.seed = seed;
    manifest.test_fraction = test_fraction;
    manifest.source_description = source.description;

    std::vector<std::string> ordered_ids = ids;
    std::sort(ordered_ids.begin(), ordered_ids.end());
    for (const std::string& id : ordered_ids) {
        const SourceCase& c = *by_id.at(id);
        const bool is_test = test_set.count(id) > 0;
        if (!is_test && !c.label)
            throw MissingLabel("training case '" + id + "' has no label");

        Volume first = read_volume(c.images[0]);
        const Shape ref_shape = first.spatial_shape();
        const std::vector<double> ref_spacing = first.spacing;
        std::optional<LabelMap> seg;
        if (c.label) {
            seg = read_labelmap(*c.label);
            if (seg->data.shape() != ref_shape)
                throw GeometryError("case '" + id + "': image and label shapes differ");
            if (!spacing_close(seg->spacing, ref_spacing))
                throw GeometryError("case '" + id + "': image and label spacings differ");
        }

        const std::string img_dir = is_test ? "imagesTs" : "imagesTr";
        const std::string lab_dir = is_test ? "labelsTs" : "labelsTr";
        for (size_t m = 0; m < c.images.size(); ++m) {
            Volume v = (m == 0) ? std::move(first) : read_volume(c.images[m]);
            if (m > 0) {
                if (v.spatial_shape() != ref_shape)
                    throw GeometryError("case '" + id + "': modality " + std::to_string(m) + " shape differs");
                if (!spacing_close(v.spacing, ref_spacing))
                    throw GeometryError("case '" + id + "': modality " + std::to_string(m) + " spacing differs");
            }
            const std::string name = "case_" + id + modality_suffix(static_cast<int>(m)) + ".nii.gz";
            const fs::path dest = task_dir / img_dir / name;
            write_if_changed(dest, [&](const fs::path& tmp) { write_volume(v, tmp, NiftiDtype::Float32); });
            ManifestEntry e;
            e.relative_path = img_dir + "/" + name;
            e.sha256 = io::hash_file_decompressed(dest);
            e.byte_size = fs::file_size(dest);
            e.case_id = id;
            e.partition = is_test ? "test" : "train";
            manifest.entries.push_back(std::move(e));
        }
        if (seg) {
            const std::string name = "case_" + id + ".nii.gz";
            const fs::path dest = task_dir / lab_dir / name;
            int32_t max_label = 0;
            for (int64_t i = 0; i < seg->data.numel(); ++i) max_label = std::max(max_label, seg->data[i]);
            const NiftiDtype dt = max_label <= 255 ? NiftiDtype::Uint8 : NiftiDtype::Int16;
            write_if_changed(dest, [&](const fs::path& tmp) { write_labelmap(*seg, tmp, dt); });
            ManifestEntry e;
            e.relative_path = lab_dir + "/" + name;
            e.sha256 = io::hash_file_decompressed(dest);
            e.byte_size = fs::file_size(dest);
            e.case_id = id;
            e.partition = is_test ? "test" : "train";
            manifest.entries.push_back(std::move(e));
        }
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.relative_path < b.relative_path; });
    write_if_changed(task_dir / "manifest.json",
                     [&](const fs::path& tmp) { io::write_canonical_json(tmp, manifest.to_json()); });
    return manifest;
}

ValidationReport validate_task(const fs::path& task_dir) {
    if (!fs::is_directory(task_dir)) throw IoError("not a directory: " + task_dir.string());
    ValidationReport report;
    auto add = [&](const std::string& sev, const std::string& where, const std::string& msg) {
        report.findings.push_back({sev, where, msg});
    };

    for (const std::string part : {std::string("Tr"), std::string("Ts")}) {
        const fs::path images = task_dir / ("images" + part);
        const fs::path labels = task_dir / ("labels" + part);
        if (!fs::is_directory(images)) {
            add("error", "images" + part, "missing directory");
            continue;
        }
        std::map<std::string, std::vector<int>> modalities;
        for (const auto& ent : fs::directory_iterator(images)) {
            const std::string name = ent.path().filename().string();
            std::string id;
            int mod;
            if (!parse_image_name(name, id, mod)) {
                add("error", "images" + part + "/" + name, "file name violates convention");
                continue;
            }
            modalities[id].push_back(mod);
        }
        for (auto& [id, mods] : modalities) {
            std::sort(mods.begin(), mods.end());
            for (size_t i = 0; i < mods.size(); ++i)
                if (mods[i] != static_cast<int>(i)) {
                    add("error", "case " + id, "modality indices not contiguous from 0");
                    break;
                }
        }
        if (fs::is_directory(labels)) {
            for (const auto& ent : fs::directory_iterator(labels)) {
                const std::string name = ent.path().filename().string();
                std::string id;
                if (!parse_label_name(name, id)) {
                    add("error", "labels" + part + "/" + name, "file name violates convention");
                    continue;
                }
                if (!modalities.count(id)) {
                    add("error", "labels" + part + "/" + name, "label without matching image");
                    continue;
                }
                try {
                    const LabelMap seg = read_labelmap(ent.path());
                    const Volume img = read_volume(images / ("case_" + id + "_0000.nii.gz"));
                    if (seg.data.shape() != img.spatial_shape())
                        add("error", "case " + id, "image/label shape mismatch");
                    else if (!spacing_close(seg.spacing, img.spacing))
                        add("error", "case " + id, "image/label spacing disagreement beyond 1e-4 mm");
                } catch (const ParseError& e) {
                    add("error", "labels" + part + "/" + name,
                        std::string(e.what()).find("non-integer") != std::string::npos ? "non-integer label"
                                                                                       : e.what());
                } catch (const Error& e) {
                    add("error", "labels" + part + "/" + name, e.what());
                }
            }
        }
        if (part == "Tr") {
            for (const auto& [id, mods] : modalities) {
                bool found = fs::exists(labels / ("case_" + id + ".nii.gz")) || fs::exists(labels / ("case_" + id + ".nii"));
                if (!found) add("error", "case " + id, "training image without label");
            }
        }
    }

    const fs::path manifest_path = task_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        try {
            const Manifest m = Manifest::from_json(io::read_json(manifest_path));
            for (const auto& e : m.entries) {
                const fs::path p = task_dir / e.relative_path;
                if (!fs::exists(p)) {
                    add("error", e.relative_path, "listed in manifest but missing on disk");
                    continue;
                }
                if (io::hash_file_decompressed(p) != e.sha256) add("error", e.relative_path, "hash mismatch");
            }
        } catch (const Error& e) {
            add("error", "manifest.json", e.what());
        }
    } else {
        add("warning", "manifest.json", "no manifest present");
    }
    return report;
}

PathGuard guard_paths(Stage stage, const fs::path& task_dir) { return PathGuard::for_stage(stage, task_dir); }

std::vector<std::string> list_case_ids(const fs::path& task_dir, const std::string& images_subdir) {
    const fs::path dir = task_dir / images_subdir;
    std::set<std::string> ids;
    if (!fs::is_directory(dir)) return {};
    for (const auto& ent : fs::directory_iterator(dir)) {
        std::string id;
        int mod;
        if (parse_image_name(ent.path().filename().string(), id, mod)) ids.insert(id);
    }
    return {ids.begin(), ids.end()};
}

std::vector<fs::path> case_image_paths(const fs::path& task_dir, const std::string& images_subdir,
                                       const std::string& case_id) {
    const fs::path dir = task_dir / images_subdir;
    std::map<int, fs::path> by_mod;
    for (const auto& ent : fs::directory_iterator(dir)) {
        std::string id;
        int mod;
        if (parse_image_name(ent.path().filename().string(), id, mod) && id == case_id) by_mod[mod] = ent.path();
    }
    std::vector<fs::path> out;
    for (auto& [mod, p] : by_mod) out.push_back(p);
    return out;
}

fs::path case_label_path(const fs::path& task_dir, const std::string& labels_subdir, const std::string& case_id) {
    const fs::path gz = task_dir / labels_subdir / ("case_" + case_id + ".nii.gz");
    if (fs::exists(gz)) return gz;
    return task_dir / labels_subdir / ("case_" + case_id + ".nii");
}

}  // namespace voxseg
