#pragma once

#include <filesystem>
#include <vector>

#include "voxseg/errors.hpp"

namespace voxseg {

enum class Stage { Preprocess, Train, Inference };

// Read-context for pipeline stages that must never see the test partition.
// check() is called on every path a guarded stage is about to open; paths
// under a forbidden subtree raise LeakageError. Inference constructs an
// unrestricted guard.
class PathGuard {
public:
    static PathGuard for_stage(Stage stage, const std::filesystem::path& task_dir);
    static PathGuard unrestricted();

    // Throws LeakageError if path lies inside a forbidden subtree.
    void check(const std::filesystem::path& path) const;
    bool permits(const std::filesystem::path& path) const;

    const std::vector<std::filesystem::path>& forbidden() const { return forbidden_; }

private:
    std::vector<std::filesystem::path> forbidden_;  // absolute, lexically normal
};

}  // namespace voxseg
