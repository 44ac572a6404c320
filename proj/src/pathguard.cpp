#include "voxseg/pathguard.hpp"

namespace voxseg {

namespace fs = std::filesystem;

namespace {

fs::path normalize(const fs::path& p) { return fs::absolute(p).lexically_normal(); }

bool is_under(const fs::path& p, const fs::path& root) {
    auto rit = root.begin();
    auto pit = p.begin();
    for (; rit != root.end(); ++rit, ++pit) {
        if (pit == p.end() || *pit != *rit) return false;
    }
    return true;
}

}  // namespace

PathGuard PathGuard::for_stage(Stage stage, const fs::path& task_dir) {
    PathGuard g;
    if (stage != Stage::Inference) {
        const fs::path root = normalize(task_dir);
        g.forbidden_.push_back(root / "imagesTs");
        g.forbidden_.push_back(root / "labelsTs");
    }
    return g;
}

PathGuard PathGuard::unrestricted() { return PathGuard{}; }

bool PathGuard::permits(const fs::path& path) const {
    if (forbidden_.empty()) return true;
    const fs::path p = normalize(path);
    for (const auto& f : forbidden_)
        if (is_under(p, f)) return false;
    return true;
}

void PathGuard::check(const fs::path& path) const {
    if (!permits(path))
        throw LeakageError("guarded stage attempted to read test-partition file: " + path.string());
}

}  // namespace voxseg
