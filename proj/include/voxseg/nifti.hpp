#pragma once

#include <filesystem>

#include "voxseg/volume.hpp"

namespace voxseg {

enum class NiftiDtype { Float32, Uint8, Int16 };

// Reads a little-endian NIfTI-1 file (.nii or .nii.gz). Data is cast to
// float32, scl_slope/scl_inter applied, axes canonicalized to closest-to-RAS.
// Supported on-disk datatypes: uint8, int16, float32.
Volume read_volume(const std::filesystem::path& path);

// Same file, integer payload. Values must be integral (within 1e-3 of an
// integer after scaling); used for segmentations.
LabelMap read_labelmap(const std::filesystem::path& path);

// Writes v to a NIfTI-1 file. Canonicalization is undone first and the
// original header's geometry fields are carried over verbatim, so a
// read/write cycle preserves data, spacing, and affine bit-exactly.
// A ".gz" suffix selects gzip output.
void write_volume(const Volume& v, const std::filesystem::path& path,
                  NiftiDtype dtype = NiftiDtype::Float32);
void write_labelmap(const LabelMap& seg, const std::filesystem::path& path,
                    NiftiDtype dtype = NiftiDtype::Uint8);

// Raw 348-byte header of a file on disk (after gzip), for bit-exactness checks.
std::vector<uint8_t> read_nifti_header_bytes(const std::filesystem::path& path);

}  // namespace voxseg
