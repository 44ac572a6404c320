#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "voxseg/ndarray.hpp"

namespace voxseg {

// Axis mapping applied when a file is loaded: data axes are reordered and
// flipped to the closest-to-RAS orientation derivable from the affine.
// write-back applies the inverse so files round-trip bit-exactly.
struct Orientation {
    std::vector<int> perm;        // canonical axis i comes from file axis perm[i]
    std::vector<uint8_t> flip;    // canonical axis i is reversed relative to the file

    static Orientation identity(int rank) {
        Orientation o;
        o.perm.resize(static_cast<size_t>(rank));
        o.flip.assign(static_cast<size_t>(rank), 0);
        for (int i = 0; i < rank; ++i) o.perm[static_cast<size_t>(i)] = i;
        return o;
    }
    bool is_identity() const {
        for (size_t i = 0; i < perm.size(); ++i)
            if (perm[i] != static_cast<int>(i) || flip[i]) return false;
        return true;
    }
};

// Floating-point image: data indexed [channel, x, y(, z)] in canonical
// orientation, voxel spacing in mm per spatial axis, and the verbatim
// voxel-to-world affine of the source file.
struct Volume {
    ArrayF data;                            // rank = 1 + spatial rank
    std::vector<double> spacing;            // per spatial axis, mm
    std::array<std::array<double, 4>, 4> origin_affine{};  // source-file voxel-to-world
    Orientation orientation;                // file axes -> canonical axes
    std::vector<uint8_t> source_header;     // original NIfTI header blob, empty if synthetic

    int spatial_rank() const { return data.rank() - 1; }
    int64_t channels() const { return data.dim(0); }
    Shape spatial_shape() const { return Shape(data.shape().begin() + 1, data.shape().end()); }
};

// Integer segmentation sharing the spatial grid of a companion Volume.
struct LabelMap {
    ArrayI data;                            // rank = spatial rank
    std::vector<double> spacing;
    std::array<std::array<double, 4>, 4> origin_affine{};
    Orientation orientation;
    std::vector<uint8_t> source_header;
};

// Inclusive-start, per-axis voxel box.
struct BBox {
    Shape start;
    Shape size;

    bool operator==(const BBox&) const = default;
    static BBox full(const Shape& shape) {
        BBox b;
        b.start.assign(shape.size(), 0);
        b.size = shape;
        return b;
    }
};

inline std::array<std::array<double, 4>, 4> identity_affine(const std::vector<double>& spacing) {
    std::array<std::array<double, 4>, 4> a{};
    for (int i = 0; i < 4; ++i) a[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
    for (size_t i = 0; i < spacing.size() && i < 3; ++i) a[i][i] = spacing[i];
    return a;
}

// Convenience constructor for volumes synthesized in memory (tests, synthetic
// datasets): identity orientation, affine = diag(spacing).
Volume make_volume(ArrayF data, std::vector<double> spacing);
LabelMap make_labelmap(ArrayI data, std::vector<double> spacing);

}  // namespace voxseg
