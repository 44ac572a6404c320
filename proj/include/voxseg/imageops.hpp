#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "voxseg/ndarray.hpp"
#include "voxseg/volume.hpp"

namespace voxseg {

enum class Interp { Linear, Nearest };

// Per-axis (before, after) padding amounts.
using PadSpec = std::vector<std::pair<int64_t, int64_t>>;

// Resampled extent per axis: round-half-away-from-zero of dim*in/out, min 1.
Shape resampled_shape(const Shape& in_shape, const std::vector<double>& in_spacing,
                      const std::vector<double>& out_spacing);

// Axis-aligned spacing change on a plain spatial array. Voxel centers are
// aligned, edges clamped; identical spacings return the input bit-exactly.
ArrayF resample(const ArrayF& data, const std::vector<double>& in_spacing,
                const std::vector<double>& out_spacing, Interp mode);
ArrayI resample(const ArrayI& data, const std::vector<double>& in_spacing,
                const std::vector<double>& out_spacing, Interp mode);

// Resample to an exact target spatial shape.
ArrayF resample_to_shape(const ArrayF& data, const Shape& target, Interp mode);
ArrayI resample_to_shape(const ArrayI& data, const Shape& target, Interp mode);

struct ZscoreResult {
    ArrayF data;
    double mean;
    double stddev;
};

// (data - mean) / max(std, 1e-8), statistics over the mask (or everything).
ZscoreResult zscore_normalize(const ArrayF& data, const NDArray<uint8_t>* mask = nullptr);

struct CropResult {
    ArrayF data;                    // [channel, spatial...]
    std::optional<ArrayI> seg;
    BBox bbox;                      // in spatial coordinates
};

// Tight bounding box of |value| > 0 across channels; all-zero input is
// returned unchanged with the full-extent box.
CropResult crop_to_nonzero(const ArrayF& data, const ArrayI* seg = nullptr);

// Symmetric-as-possible constant padding up to target_shape; floor(extra/2)
// goes before. un_pad strips a recorded PadSpec bit-exactly.
template <class T>
std::pair<NDArray<T>, PadSpec> pad_to(const NDArray<T>& data, const Shape& target_shape, T value);
template <class T>
NDArray<T> un_pad(const NDArray<T>& data, const PadSpec& spec);

// Spatial axis permutation (rank of `order` equals spatial rank; arrays with
// a leading channel axis keep it in place).
template <class T>
NDArray<T> transpose_spatial(const NDArray<T>& data, const std::vector<int>& order, bool has_channel_axis);
std::vector<int> invert_order(const std::vector<int>& order);

// Separable Gaussian bump over a patch, sigma = sigma_scale * extent per
// axis, renormalized to max 1. Strictly positive everywhere.
ArrayF gaussian_weight_map(const Shape& patch_shape, double sigma_scale = 0.125);

// Channel c = indicator of label c; requires all labels < num_classes.
ArrayF one_hot(const ArrayI& seg, int num_classes);

// Gaussian smoothing with reflected borders, used by augmentation.
ArrayF gaussian_smooth(const ArrayF& data, double sigma);

}  // namespace voxseg
