#include "voxseg/nifti.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "voxseg/errors.hpp"
#include "voxseg/fileio.hpp"

namespace voxseg {

namespace {

// NIfTI-1 header, 348 bytes, naturally aligned.
struct Nifti1Header {
    int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    int32_t extents;
    int16_t session_error;
    char regular;
    char dim_info;
    int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    int16_t intent_code;
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    int32_t glmax;
    int32_t glmin;
    char descrip[80];
    char aux_file[24];
    int16_t qform_code;
    int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr int16_t kDtUint8 = 2;
constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtFloat32 = 16;

int16_t dtype_code(NiftiDtype d) {
    switch (d) {
        case NiftiDtype::Uint8: return kDtUint8;
        case NiftiDtype::Int16: return kDtInt16;
        case NiftiDtype::Float32: return kDtFloat32;
    }
    return kDtFloat32;
}

int bitpix_for(int16_t code) {
    switch (code) {
        case kDtUint8: return 8;
        case kDtInt16: return 16;
        case kDtFloat32: return 32;
        default: return 0;
    }
}

std::array<std::array<double, 4>, 4> affine_from_header(const Nifti1Header& h) {
    std::array<std::array<double, 4>, 4> a{};
    a[3][3] = 1.0;
    if (h.sform_code > 0) {
        for (int j = 0; j < 4; ++j) {
            a[0][static_cast<size_t>(j)] = h.srow_x[j];
            a[1][static_cast<size_t>(j)] = h.srow_y[j];
            a[2][static_cast<size_t>(j)] = h.srow_z[j];
        }
        return a;
    }
    if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        double a0sq = 1.0 - (b * b + c * c + d * d);
        const double a0 = a0sq > 0 ? std::sqrt(a0sq) : 0.0;
        const double qfac = (h.pixdim[0] < 0.0f) ? -1.0 : 1.0;
        double r[3][3] = {
            {a0 * a0 + b * b - c * c - d * d, 2 * (b * c - a0 * d), 2 * (b * d + a0 * c)},
            {2 * (b * c + a0 * d), a0 * a0 + c * c - b * b - d * d, 2 * (c * d - a0 * b)},
            {2 * (b * d - a0 * c), 2 * (c * d + a0 * b), a0 * a0 + d * d - b * b - c * c}};
        const double sp[3] = {h.pixdim[1], h.pixdim[2], std::abs(h.pixdim[3]) * qfac};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a[static_cast<size_t>(i)][static_cast<size_t>(j)] = r[i][j] * sp[j];
        a[0][3] = h.qoffset_x;
        a[1][3] = h.qoffset_y;
        a[2][3] = h.qoffset_z;
        return a;
    }
    for (int i = 0; i < 3; ++i) a[static_cast<size_t>(i)][static_cast<size_t>(i)] = std::abs(h.pixdim[i + 1]);
    return a;
}

// Closest-to-RAS axis assignment: greedily match each voxel axis to its
// dominant world axis (largest normalized |direction| first), recording a
// flip where the direction is negative.
Orientation orientation_from_affine(const std::array<std::array<double, 4>, 4>& affine, int rank) {
    std::vector<std::vector<double>> m(static_cast<size_t>(rank), std::vector<double>(static_cast<size_t>(rank), 0.0));
    for (int i = 0; i < rank; ++i) {
        for (int j = 0; j < rank; ++j) m[static_cast<size_t>(i)][static_cast<size_t>(j)] = affine[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    for (int j = 0; j < rank; ++j) {  // normalize columns
        double norm = 0;
        for (int i = 0; i < rank; ++i) norm += m[static_cast<size_t>(i)][static_cast<size_t>(j)] * m[static_cast<size_t>(i)][static_cast<size_t>(j)];
        norm = std::sqrt(norm);
        if (norm <= 0) return Orientation::identity(rank);  // degenerate affine: leave axes alone
        for (int i = 0; i < rank; ++i) m[static_cast<size_t>(i)][static_cast<size_t>(j)] /= norm;
    }
    std::vector<int> world_of_voxel(static_cast<size_t>(rank), -1);
    std::vector<int> sign_of_voxel(static_cast<size_t>(rank), 1);
    std::vector<bool> row_used(static_cast<size_t>(rank), false), col_used(static_cast<size_t>(rank), false);
    for (int pick = 0; pick < rank; ++pick) {
        double best = -1;
        int bi = -1, bj = -1;
        for (int i = 0; i < rank; ++i) {
            if (row_used[static_cast<size_t>(i)]) continue;
            for (int j = 0; j < rank; ++j) {
                if (col_used[static_cast<size_t>(j)]) continue;
                double v = std::abs(m[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                if (v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        row_used[static_cast<size_t>(bi)] = true;
        col_used[static_cast<size_t>(bj)] = true;
        world_of_voxel[static_cast<size_t>(bj)] = bi;
        sign_of_voxel[static_cast<size_t>(bj)] = m[static_cast<size_t>(bi)][static_cast<size_t>(bj)] < 0 ? -1 : 1;
    }
    Orientation o;
    o.perm.assign(static_cast<size_t>(rank), 0);
    o.flip.assign(static_cast<size_t>(rank), 0);
    for (int j = 0; j < rank; ++j) {
        int i = world_of_voxel[static_cast<size_t>(j)];
        o.perm[static_cast<size_t>(i)] = j;
        o.flip[static_cast<size_t>(i)] = sign_of_voxel[static_cast<size_t>(j)] < 0 ? 1 : 0;
    }
    return o;
}

// Reorder spatial axes of a [channel, spatial...] array: output axis i takes
// input axis perm[i], reversed where flip[i] is set.
template <class T>
NDArray<T> apply_axis_map(const NDArray<T>& in, const std::vector<int>& perm, const std::vector<uint8_t>& flip) {
    const int srank = in.rank() - 1;
    const Shape& is = in.shape();
    Shape os(is.size());
    os[0] = is[0];
    for (int i = 0; i < srank; ++i) os[static_cast<size_t>(i) + 1] = is[static_cast<size_t>(perm[static_cast<size_t>(i)]) + 1];
    NDArray<T> out(os);
    const Shape ist = row_major_strides(is);
    const int64_t c = is[0];
    Shape oidx(os.size(), 0);
    const int64_t total = out.numel() / c;
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t lin = 0; lin < total; ++lin) {
            int64_t rem = lin;
            for (int i = srank - 1; i >= 0; --i) {
                oidx[static_cast<size_t>(i) + 1] = rem % os[static_cast<size_t>(i) + 1];
                rem /= os[static_cast<size_t>(i) + 1];
            }
            int64_t off = ch * ist[0];
            for (int i = 0; i < srank; ++i) {
                int src_axis = perm[static_cast<size_t>(i)];
                int64_t v = oidx[static_cast<size_t>(i) + 1];
                if (flip[static_cast<size_t>(i)]) v = os[static_cast<size_t>(i) + 1] - 1 - v;
                off += v * ist[static_cast<size_t>(src_axis) + 1];
            }
            out[ch * (out.numel() / c) + lin] = in[off];
        }
    }
    return out;
}

template <class T>
NDArray<T> invert_axis_map(const NDArray<T>& in, const std::vector<int>& perm, const std::vector<uint8_t>& flip) {
    const int srank = in.rank() - 1;
    std::vector<int> iperm(static_cast<size_t>(srank));
    std::vector<uint8_t> iflip(static_cast<size_t>(srank));
    for (int i = 0; i < srank; ++i) {
        iperm[static_cast<size_t>(perm[static_cast<size_t>(i)])] = i;
        iflip[static_cast<size_t>(perm[static_cast<size_t>(i)])] = flip[static_cast<size_t>(i)];
    }
    return apply_axis_map(in, iperm, iflip);
}

struct ParsedFile {
    Nifti1Header header;
    ArrayF data;  // [channel, spatial...] in file axis order
    int spatial_rank;
};

ParsedFile parse_nifti(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    const std::vector<uint8_t> bytes = io::read_file_bytes_decompressed(path);
    if (bytes.size() < sizeof(Nifti1Header)) throw ParseError("file too small for a NIfTI-1 header: " + path.string());
    Nifti1Header h{};
    std::memcpy(&h, bytes.data(), sizeof(h));
    if (h.sizeof_hdr != 348) {
        int32_t swapped;
        uint32_t raw;
        std::memcpy(&raw, &h.sizeof_hdr, 4);
        raw = __builtin_bswap32(raw);
        std::memcpy(&swapped, &raw, 4);
        if (swapped == 348) throw UnsupportedFormat("big-endian NIfTI-1 not supported: " + path.string());
        throw ParseError("bad sizeof_hdr, not a NIfTI-1 file: " + path.string());
    }
    if (std::memcmp(h.magic, "n+1", 4) != 0) {
        if (std::memcmp(h.magic, "ni1", 4) == 0)
            throw UnsupportedFormat("two-file NIfTI (.hdr/.img) not supported: " + path.string());
        throw ParseError("bad magic, not a NIfTI-1 file: " + path.string());
    }
    if (bitpix_for(h.datatype) == 0)
        throw UnsupportedFormat("unsupported NIfTI datatype code " + std::to_string(h.datatype) + ": " + path.string());
    if (h.bitpix != bitpix_for(h.datatype)) throw ParseError("bitpix disagrees with datatype: " + path.string());

    int ndim = h.dim[0];
    if (ndim < 2 || ndim > 7) throw UnsupportedFormat("unsupported dimensionality " + std::to_string(ndim) + ": " + path.string());
    while (ndim > 3 && h.dim[ndim] <= 1) --ndim;  // squeeze trailing singleton dims
    if (ndim > 4) throw UnsupportedFormat("more than 4 non-singleton dims: " + path.string());
    const int spatial_rank = std::min(ndim, 3);
    int64_t channels = (ndim == 4) ? h.dim[4] : 1;
    Shape file_shape;
    for (int i = 1; i <= spatial_rank; ++i) {
        if (h.dim[i] < 1) throw ParseError("non-positive dimension in header: " + path.string());
        file_shape.push_back(h.dim[i]);
    }

    const int64_t nvox = shape_numel(file_shape) * channels;
    const size_t offset = static_cast<size_t>(std::max(352.0f, h.vox_offset));
    const size_t bytes_per = static_cast<size_t>(h.bitpix / 8);
    if (bytes.size() < offset + static_cast<size_t>(nvox) * bytes_per)
        throw ParseError("truncated NIfTI data: " + path.string());
    const uint8_t* payload = bytes.data() + offset;

    // Disk order is x-fastest; memory order is [channel][x][y][z] row-major.
    Shape mem_shape;
    mem_shape.push_back(channels);
    for (int64_t d : file_shape) mem_shape.push_back(d);
    ArrayF data(mem_shape);
    const double slope = (h.scl_slope == 0.0f) ? 1.0 : h.scl_slope;
    const double inter = (h.scl_slope == 0.0f) ? 0.0 : h.scl_inter;
    const bool rescale = !(slope == 1.0 && inter == 0.0);

    const int64_t X = file_shape[0];
    const int64_t Y = spatial_rank >= 2 ? file_shape[1] : 1;
    const int64_t Z = spatial_rank >= 3 ? file_shape[2] : 1;
    auto read_at = [&](int64_t disk_idx) -> double {
        switch (h.datatype) {
            case kDtUint8: return payload[disk_idx];
            case kDtInt16: {
                int16_t v;
                std::memcpy(&v, payload + disk_idx * 2, 2);
                return v;
            }
            default: {
                float v;
                std::memcpy(&v, payload + disk_idx * 4, 4);
                return v;
            }
        }
    };
    float* dst = data.data();
    for (int64_t c = 0; c < channels; ++c) {
        for (int64_t z = 0; z < Z; ++z)
            for (int64_t y = 0; y < Y; ++y)
                for (int64_t x = 0; x < X; ++x) {
                    const int64_t disk = x + X * (y + Y * (z + Z * c));
                    double v = read_at(disk);
                    if (rescale) v = v * slope + inter;
                    int64_t mem;
                    if (spatial_rank == 3)
                        mem = ((c * X + x) * Y + y) * Z + z;
                    else
                        mem = (c * X + x) * Y + y;
                    dst[mem] = static_cast<float>(v);
                }
    }
    for (int64_t i = 0; i < data.numel(); ++i)
        if (!std::isfinite(dst[i])) throw ParseError("non-finite voxel values: " + path.string());

    ParsedFile out;
    out.header = h;
    out.data = std::move(data);
    out.spatial_rank = spatial_rank;
    return out;
}

ArrayF canonicalize(const ArrayF& file_data, const Orientation& o) {
    if (o.is_identity()) return file_data;
    return apply_axis_map(file_data, o.perm, o.flip);
}

Nifti1Header make_default_header(const Shape& spatial, int64_t channels, const std::vector<double>& spacing) {
    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    const int srank = static_cast<int>(spatial.size());
    h.dim[0] = static_cast<int16_t>(channels > 1 ? 4 : srank);
    for (int i = 0; i < srank; ++i) h.dim[i + 1] = static_cast<int16_t>(spatial[static_cast<size_t>(i)]);
    for (int i = srank; i < 7; ++i) h.dim[i + 1] = 1;
    if (channels > 1) h.dim[4] = static_cast<int16_t>(channels);
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < srank; ++i) h.pixdim[i + 1] = static_cast<float>(spacing[static_cast<size_t>(i)]);
    for (int i = srank; i < 7; ++i) h.pixdim[i + 1] = 1.0f;
    h.sform_code = 1;
    h.qform_code = 0;
    h.srow_x[0] = static_cast<float>(spacing.size() > 0 ? spacing[0] : 1.0);
    h.srow_y[1] = static_cast<float>(spacing.size() > 1 ? spacing[1] : 1.0);
    h.srow_z[2] = static_cast<float>(spacing.size() > 2 ? spacing[2] : 1.0);
    h.xyzt_units = 2;  // millimetres
    std::memcpy(h.magic, "n+1", 4);
    return h;
}

void write_nifti(const ArrayF& canonical, const Orientation& orient, const std::vector<double>& spacing,
                 const std::vector<uint8_t>& source_header, const std::filesystem::path& path, NiftiDtype dtype) {
    const int srank = canonical.rank() - 1;
    const int64_t channels = canonical.dim(0);

    // Restore the file's own axis order before serializing.
    ArrayF file_data = orient.is_identity() ? canonical : invert_axis_map(canonical, orient.perm, orient.flip);

    Nifti1Header h{};
    if (source_header.size() == sizeof(Nifti1Header)) {
        std::memcpy(&h, source_header.data(), sizeof(h));
    } else {
        std::vector<double> file_spacing(static_cast<size_t>(srank), 1.0);
        for (int i = 0; i < srank; ++i) file_spacing[static_cast<size_t>(orient.perm[static_cast<size_t>(i)])] = spacing[static_cast<size_t>(i)];
        Shape fs(file_data.shape().begin() + 1, file_data.shape().end());
        h = make_default_header(fs, channels, file_spacing);
    }
    h.dim[0] = static_cast<int16_t>(channels > 1 ? 4 : srank);
    for (int i = 0; i < srank; ++i) h.dim[i + 1] = static_cast<int16_t>(file_data.dim(i + 1));
    for (int i = srank; i < 7; ++i) h.dim[i + 1] = 1;
    if (channels > 1) h.dim[4] = static_cast<int16_t>(channels);
    h.datatype = dtype_code(dtype);
    h.bitpix = static_cast<int16_t>(bitpix_for(h.datatype));
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    std::memcpy(h.magic, "n+1", 4);

    const int64_t X = file_data.dim(1);
    const int64_t Y = srank >= 2 ? file_data.dim(2) : 1;
    const int64_t Z = srank >= 3 ? file_data.dim(3) : 1;
    const int64_t nvox = channels * X * Y * Z;
    const size_t bytes_per = static_cast<size_t>(h.bitpix / 8);
    std::vector<uint8_t> payload(static_cast<size_t>(nvox) * bytes_per);
    const float* src = file_data.data();
    for (int64_t c = 0; c < channels; ++c)
        for (int64_t z = 0; z < Z; ++z)
            for (int64_t y = 0; y < Y; ++y)
                for (int64_t x = 0; x < X; ++x) {
                    int64_t mem;
                    if (srank == 3)
                        mem = ((c * X + x) * Y + y) * Z + z;
                    else
                        mem = (c * X + x) * Y + y;
                    const int64_t disk = x + X * (y + Y * (z + Z * c));
                    const float v = src[mem];
                    switch (h.datatype) {
                        case kDtUint8: {
                            const long long r = std::llround(static_cast<double>(v));
                            if (!std::isfinite(v) || r < 0 || r > 255)
                                throw RangeError("value " + std::to_string(v) + " does not fit uint8");
                            payload[static_cast<size_t>(disk)] = static_cast<uint8_t>(r);
                            break;
                        }
                        case kDtInt16: {
                            const long long r = std::llround(static_cast<double>(v));
                            if (!std::isfinite(v) || r < std::numeric_limits<int16_t>::min() || r > std::numeric_limits<int16_t>::max())
                                throw RangeError("value " + std::to_string(v) + " does not fit int16");
                            int16_t s = static_cast<int16_t>(r);
                            std::memcpy(payload.data() + disk * 2, &s, 2);
                            break;
                        }
                        default:
                            std::memcpy(payload.data() + disk * 4, &v, 4);
                    }
                }

    std::vector<uint8_t> blob(352 + payload.size(), 0);
    std::memcpy(blob.data(), &h, sizeof(h));
    std::memcpy(blob.data() + 352, payload.data(), payload.size());

    if (path.extension() == ".gz")
        io::write_file_bytes_gzip(path, blob.data(), blob.size());
    else
        io::write_file_bytes(path, blob.data(), blob.size());
}

}  // namespace

Volume make_volume(ArrayF data, std::vector<double> spacing) {
    Volume v;
    v.orientation = Orientation::identity(data.rank() - 1);
    v.origin_affine = identity_affine(spacing);
    v.data = std::move(data);
    v.spacing = std::move(spacing);
    return v;
}

LabelMap make_labelmap(ArrayI data, std::vector<double> spacing) {
    LabelMap s;
    s.orientation = Orientation::identity(data.rank());
    s.origin_affine = identity_affine(spacing);
    s.data = std::move(data);
    s.spacing = std::move(spacing);
    return s;
}

Volume read_volume(const std::filesystem::path& path) {
    ParsedFile pf = parse_nifti(path);
    Volume v;
    v.origin_affine = affine_from_header(pf.header);
    v.orientation = orientation_from_affine(v.origin_affine, pf.spatial_rank);
    v.data = canonicalize(pf.data, v.orientation);
    v.spacing.resize(static_cast<size_t>(pf.spatial_rank));
    for (int i = 0; i < pf.spatial_rank; ++i) {
        const float px = pf.header.pixdim[v.orientation.perm[static_cast<size_t>(i)] + 1];
        double s = std::abs(static_cast<double>(px));
        if (!(s > 0.0) || !std::isfinite(s)) throw ParseError("non-positive voxel spacing: " + path.string());
        v.spacing[static_cast<size_t>(i)] = s;
    }
    v.source_header.resize(sizeof(Nifti1Header));
    std::memcpy(v.source_header.data(), &pf.header, sizeof(Nifti1Header));
    return v;
}

LabelMap read_labelmap(const std::filesystem::path& path) {
    Volume v = read_volume(path);
    if (v.channels() != 1) throw ParseError("label map must be single channel: " + path.string());
    LabelMap seg;
    Shape sshape = v.spatial_shape();
    ArrayI labels(sshape);
    for (int64_t i = 0; i < labels.numel(); ++i) {
        const float f = v.data[i];
        const long long r = std::llround(static_cast<double>(f));
        if (std::abs(static_cast<double>(f) - static_cast<double>(r)) > 1e-3)
            throw ParseError("non-integer label value " + std::to_string(f) + ": " + path.string());
        if (r < 0) throw ParseError("negative label value: " + path.string());
        labels[i] = static_cast<int32_t>(r);
    }
    seg.data = std::move(labels);
    seg.spacing = v.spacing;
    seg.origin_affine = v.origin_affine;
    seg.orientation = v.orientation;
    seg.source_header = std::move(v.source_header);
    return seg;
}

void write_volume(const Volume& v, const std::filesystem::path& path, NiftiDtype dtype) {
    write_nifti(v.data, v.orientation, v.spacing, v.source_header, path, dtype);
}

void write_labelmap(const LabelMap& seg, const std::filesystem::path& path, NiftiDtype dtype) {
    Shape shape;
    shape.push_back(1);
    for (int64_t d : seg.data.shape()) shape.push_back(d);
    ArrayF data(shape);
    for (int64_t i = 0; i < seg.data.numel(); ++i) data[i] = static_cast<float>(seg.data[i]);
    write_nifti(data, seg.orientation, seg.spacing, seg.source_header, path, dtype);
}

std::vector<uint8_t> read_nifti_header_bytes(const std::filesystem::path& path) {
    auto bytes = io::read_file_bytes_decompressed(path);
    if (bytes.size() < sizeof(Nifti1Header)) throw ParseError("file too small: " + path.string());
    bytes.resize(sizeof(Nifti1Header));
    return bytes;
}

}  // namespace voxseg
