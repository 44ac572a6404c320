#include "voxseg/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace voxseg {

namespace {

void check_spacing(const std::vector<double>& sp) {
    for (double s : sp)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("voxel spacing must be strictly positive");
}

struct AxisTable {
    std::vector<int64_t> lo;
    std::vector<int64_t> hi;
    std::vector<double> w;       // weight of hi
    std::vector<int64_t> near;   // nearest index
};

// Center-aligned coordinate map: src = (i + 0.5) * scale - 0.5, clamped.
AxisTable make_axis_table(int64_t out_dim, int64_t in_dim, double scale) {
    AxisTable t;
    t.lo.resize(static_cast<size_t>(out_dim));
    t.hi.resize(static_cast<size_t>(out_dim));
    t.w.resize(static_cast<size_t>(out_dim));
    t.near.resize(static_cast<size_t>(out_dim));
    for (int64_t i = 0; i < out_dim; ++i) {
        double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
        double lo = std::floor(src);
        double w = src - lo;
        int64_t l = static_cast<int64_t>(lo);
        int64_t h = l + 1;
        l = std::clamp<int64_t>(l, 0, in_dim - 1);
        h = std::clamp<int64_t>(h, 0, in_dim - 1);
        t.lo[static_cast<size_t>(i)] = l;
        t.hi[static_cast<size_t>(i)] = h;
        t.w[static_cast<size_t>(i)] = w;
        t.near[static_cast<size_t>(i)] = std::clamp<int64_t>(std::llround(src), 0, in_dim - 1);
    }
    return t;
}

template <class T>
NDArray<T> resample_with_tables(const NDArray<T>& in, const Shape& out_shape, const std::vector<AxisTable>& tables,
                                Interp mode) {
    const int rank = in.rank();
    NDArray<T> out(out_shape);
    const Shape ist = row_major_strides(in.shape());
    if (mode == Interp::Nearest) {
        if (rank == 2) {
            for (int64_t x = 0; x < out_shape[0]; ++x) {
                const int64_t sx = tables[0].near[static_cast<size_t>(x)] * ist[0];
                for (int64_t y = 0; y < out_shape[1]; ++y)
                    out[x * out_shape[1] + y] = in[sx + tables[1].near[static_cast<size_t>(y)]];
            }
        } else {
            for (int64_t x = 0; x < out_shape[0]; ++x)
                for (int64_t y = 0; y < out_shape[1]; ++y) {
                    const int64_t base = tables[0].near[static_cast<size_t>(x)] * ist[0] +
                                         tables[1].near[static_cast<size_t>(y)] * ist[1];
                    T* dst = out.data() + (x * out_shape[1] + y) * out_shape[2];
                    for (int64_t z = 0; z < out_shape[2]; ++z) dst[z] = in[base + tables[2].near[static_cast<size_t>(z)]];
                }
        }
        return out;
    }
    if (rank == 2) {
        for (int64_t x = 0; x < out_shape[0]; ++x) {
            const auto& tx = tables[0];
            const double wx = tx.w[static_cast<size_t>(x)];
            const int64_t x0 = tx.lo[static_cast<size_t>(x)] * ist[0], x1 = tx.hi[static_cast<size_t>(x)] * ist[0];
            for (int64_t y = 0; y < out_shape[1]; ++y) {
                const auto& ty = tables[1];
                const double wy = ty.w[static_cast<size_t>(y)];
                const int64_t y0 = ty.lo[static_cast<size_t>(y)], y1 = ty.hi[static_cast<size_t>(y)];
                const double v00 = in[x0 + y0], v01 = in[x0 + y1], v10 = in[x1 + y0], v11 = in[x1 + y1];
                const double v0 = v00 + (v01 - v00) * wy;
                const double v1 = v10 + (v11 - v10) * wy;
                out[x * out_shape[1] + y] = static_cast<T>(v0 + (v1 - v0) * wx);
            }
        }
    } else {
        for (int64_t x = 0; x < out_shape[0]; ++x) {
            const double wx = tables[0].w[static_cast<size_t>(x)];
            const int64_t x0 = tables[0].lo[static_cast<size_t>(x)] * ist[0], x1 = tables[0].hi[static_cast<size_t>(x)] * ist[0];
            for (int64_t y = 0; y < out_shape[1]; ++y) {
                const double wy = tables[1].w[static_cast<size_t>(y)];
                const int64_t y0 = tables[1].lo[static_cast<size_t>(y)] * ist[1], y1 = tables[1].hi[static_cast<size_t>(y)] * ist[1];
                T* dst = out.data() + (x * out_shape[1] + y) * out_shape[2];
                for (int64_t z = 0; z < out_shape[2]; ++z) {
                    const double wz = tables[2].w[static_cast<size_t>(z)];
                    const int64_t z0 = tables[2].lo[static_cast<size_t>(z)], z1 = tables[2].hi[static_cast<size_t>(z)];
                    const double c00 = in[x0 + y0 + z0] + (in[x0 + y0 + z1] - in[x0 + y0 + z0]) * wz;
                    const double c01 = in[x0 + y1 + z0] + (in[x0 + y1 + z1] - in[x0 + y1 + z0]) * wz;
                    const double c10 = in[x1 + y0 + z0] + (in[x1 + y0 + z1] - in[x1 + y0 + z0]) * wz;
                    const double c11 = in[x1 + y1 + z0] + (in[x1 + y1 + z1] - in[x1 + y1 + z0]) * wz;
                    const double c0 = c00 + (c01 - c00) * wy;
                    const double c1 = c10 + (c11 - c10) * wy;
                    dst[z] = static_cast<T>(c0 + (c1 - c0) * wx);
                }
            }
        }
    }
    return out;
}

template <class T>
NDArray<T> resample_impl(const NDArray<T>& data, const std::vector<double>& in_spacing,
                         const std::vector<double>& out_spacing, Interp mode) {
    check_spacing(in_spacing);
    check_spacing(out_spacing);
    if (data.rank() != static_cast<int>(in_spacing.size()) || in_spacing.size() != out_spacing.size())
        throw DomainError("resample: rank/spacing mismatch");
    if (data.rank() < 2 || data.rank() > 3) throw DomainError("resample: spatial rank must be 2 or 3");
    if (in_spacing == out_spacing) return data;
    const Shape out_shape = resampled_shape(data.shape(), in_spacing, out_spacing);
    std::vector<AxisTable> tables;
    for (int a = 0; a < data.rank(); ++a) {
        const double scale = out_spacing[static_cast<size_t>(a)] / in_spacing[static_cast<size_t>(a)];
        tables.push_back(make_axis_table(out_shape[static_cast<size_t>(a)], data.dim(a), scale));
    }
    return resample_with_tables(data, out_shape, tables, mode);
}

template <class T>
NDArray<T> resample_to_shape_impl(const NDArray<T>& data, const Shape& target, Interp mode) {
    if (static_cast<int>(target.size()) != data.rank()) throw DomainError("resample_to_shape: rank mismatch");
    for (int64_t d : target)
        if (d < 1) throw DomainError("resample_to_shape: target components must be >= 1");
    if (data.rank() < 2 || data.rank() > 3) throw DomainError("resample_to_shape: spatial rank must be 2 or 3");
    std::vector<AxisTable> tables;
    for (int a = 0; a < data.rank(); ++a) {
        const double scale = static_cast<double>(data.dim(a)) / static_cast<double>(target[static_cast<size_t>(a)]);
        tables.push_back(make_axis_table(target[static_cast<size_t>(a)], data.dim(a), scale));
    }
    return resample_with_tables(data, target, tables, mode);
}

}  // namespace

Shape resampled_shape(const Shape& in_shape, const std::vector<double>& in_spacing,
                      const std::vector<double>& out_spacing) {
    check_spacing(in_spacing);
    check_spacing(out_spacing);
    Shape out(in_shape.size());
    for (size_t i = 0; i < in_shape.size(); ++i) {
        const double exact = static_cast<double>(in_shape[i]) * in_spacing[i] / out_spacing[i];
        out[i] = std::max<int64_t>(1, std::llround(exact));
    }
    return out;
}

ArrayF resample(const ArrayF& data, const std::vector<double>& in_spacing, const std::vector<double>& out_spacing,
                Interp mode) {
    return resample_impl(data, in_spacing, out_spacing, mode);
}
ArrayI resample(const ArrayI& data, const std::vector<double>& in_spacing, const std::vector<double>& out_spacing,
                Interp mode) {
    return resample_impl(data, in_spacing, out_spacing, mode);
}
ArrayF resample_to_shape(const ArrayF& data, const Shape& target, Interp mode) {
    return resample_to_shape_impl(data, target, mode);
}
ArrayI resample_to_shape(const ArrayI& data, const Shape& target, Interp mode) {
    return resample_to_shape_impl(data, target, mode);
}

ZscoreResult zscore_normalize(const ArrayF& data, const NDArray<uint8_t>* mask) {
    if (mask && mask->shape() != data.shape()) throw DomainError("zscore_normalize: mask shape mismatch");
    double sum = 0.0, sumsq = 0.0;
    int64_t n = 0;
    for (int64_t i = 0; i < data.numel(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const double v = data[i];
        sum += v;
        sumsq += v * v;
        ++n;
    }
    if (n == 0) throw DomainError("zscore_normalize: empty mask");
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    const double stddev = std::sqrt(var);
    const double denom = std::max(stddev, 1e-8);
    ZscoreResult r{ArrayF(data.shape()), mean, stddev};
    for (int64_t i = 0; i < data.numel(); ++i)
        r.data[i] = static_cast<float>((static_cast<double>(data[i]) - mean) / denom);
    return r;
}

CropResult crop_to_nonzero(const ArrayF& data, const ArrayI* seg) {
    const int srank = data.rank() - 1;
    Shape sshape(data.shape().begin() + 1, data.shape().end());
    if (seg && seg->shape() != sshape) throw DomainError("crop_to_nonzero: seg shape mismatch");
    const int64_t channels = data.dim(0);
    const int64_t nspatial = shape_numel(sshape);
    Shape lo(sshape.size()), hi(sshape.size());  // hi is inclusive
    for (size_t i = 0; i < sshape.size(); ++i) {
        lo[i] = sshape[i];
        hi[i] = -1;
    }
    Shape idx(sshape.size(), 0);
    for (int64_t lin = 0; lin < nspatial; ++lin) {
        bool nz = false;
        for (int64_t c = 0; c < channels && !nz; ++c) nz = std::abs(data[c * nspatial + lin]) > 0.0f;
        if (nz) {
            int64_t rem = lin;
            for (int i = srank - 1; i >= 0; --i) {
                idx[static_cast<size_t>(i)] = rem % sshape[static_cast<size_t>(i)];
                rem /= sshape[static_cast<size_t>(i)];
            }
            for (int i = 0; i < srank; ++i) {
                lo[static_cast<size_t>(i)] = std::min(lo[static_cast<size_t>(i)], idx[static_cast<size_t>(i)]);
                hi[static_cast<size_t>(i)] = std::max(hi[static_cast<size_t>(i)], idx[static_cast<size_t>(i)]);
            }
        }
    }
    CropResult out;
    if (hi[0] < 0) {  // all zero: keep everything
        out.data = data;
        if (seg) out.seg = *seg;
        out.bbox = BBox::full(sshape);
        return out;
    }
    BBox box;
    box.start = lo;
    box.size.resize(sshape.size());
    bool tight = true;
    for (size_t i = 0; i < sshape.size(); ++i) {
        box.size[i] = hi[i] - lo[i] + 1;
        tight = tight && lo[i] == 0 && box.size[i] == sshape[i];
    }
    out.bbox = box;
    if (tight) {
        out.data = data;
        if (seg) out.seg = *seg;
        return out;
    }
    Shape oshape;
    oshape.push_back(channels);
    for (int64_t d : box.size) oshape.push_back(d);
    ArrayF cropped(oshape);
    const Shape ist = row_major_strides(sshape);
    const int64_t ospatial = shape_numel(box.size);
    for (int64_t c = 0; c < channels; ++c) {
        for (int64_t lin = 0; lin < ospatial; ++lin) {
            int64_t rem = lin, src = 0;
            for (int i = srank - 1; i >= 0; --i) {
                const int64_t v = rem % box.size[static_cast<size_t>(i)];
                rem /= box.size[static_cast<size_t>(i)];
                src += (v + box.start[static_cast<size_t>(i)]) * ist[static_cast<size_t>(i)];
            }
            cropped[c * ospatial + lin] = data[c * nspatial + src];
        }
    }
    out.data = std::move(cropped);
    if (seg) {
        ArrayI scrop(box.size);
        for (int64_t lin = 0; lin < ospatial; ++lin) {
            int64_t rem = lin, src = 0;
            for (int i = srank - 1; i >= 0; --i) {
                const int64_t v = rem % box.size[static_cast<size_t>(i)];
                rem /= box.size[static_cast<size_t>(i)];
                src += (v + box.start[static_cast<size_t>(i)]) * ist[static_cast<size_t>(i)];
            }
            scrop[lin] = (*seg)[src];
        }
        out.seg = std::move(scrop);
    }
    return out;
}

template <class T>
std::pair<NDArray<T>, PadSpec> pad_to(const NDArray<T>& data, const Shape& target_shape, T value) {
    if (static_cast<int>(target_shape.size()) != data.rank()) throw DomainError("pad_to: rank mismatch");
    PadSpec spec(target_shape.size());
    bool noop = true;
    for (size_t i = 0; i < target_shape.size(); ++i) {
        const int64_t extra = target_shape[i] - data.dim(static_cast<int>(i));
        if (extra < 0) throw DomainError("pad_to: target smaller than input");
        spec[i] = {extra / 2, extra - extra / 2};
        noop = noop && extra == 0;
    }
    if (noop) return {data, spec};
    NDArray<T> out(target_shape, value);
    const Shape ost = row_major_strides(target_shape);
    const int rank = data.rank();
    const int64_t n = data.numel();
    for (int64_t lin = 0; lin < n; ++lin) {
        int64_t rem = lin, off = 0;
        for (int i = rank - 1; i >= 0; --i) {
            const int64_t v = rem % data.dim(i);
            rem /= data.dim(i);
            off += (v + spec[static_cast<size_t>(i)].first) * ost[static_cast<size_t>(i)];
        }
        out[off] = data[lin];
    }
    return {std::move(out), spec};
}

template <class T>
NDArray<T> un_pad(const NDArray<T>& data, const PadSpec& spec) {
    if (spec.size() != static_cast<size_t>(data.rank())) throw DomainError("un_pad: rank mismatch");
    Shape inner(spec.size());
    bool noop = true;
    for (size_t i = 0; i < spec.size(); ++i) {
        inner[i] = data.dim(static_cast<int>(i)) - spec[i].first - spec[i].second;
        if (inner[i] < 1) throw DomainError("un_pad: pad spec larger than array");
        noop = noop && spec[i].first == 0 && spec[i].second == 0;
    }
    if (noop) return data;
    NDArray<T> out(inner);
    const Shape ist = row_major_strides(data.shape());
    const int rank = data.rank();
    for (int64_t lin = 0; lin < out.numel(); ++lin) {
        int64_t rem = lin, off = 0;
        for (int i = rank - 1; i >= 0; --i) {
            const int64_t v = rem % inner[static_cast<size_t>(i)];
            rem /= inner[static_cast<size_t>(i)];
            off += (v + spec[static_cast<size_t>(i)].first) * ist[static_cast<size_t>(i)];
        }
        out[lin] = data[off];
    }
    return out;
}

template std::pair<NDArray<float>, PadSpec> pad_to(const NDArray<float>&, const Shape&, float);
template std::pair<NDArray<int32_t>, PadSpec> pad_to(const NDArray<int32_t>&, const Shape&, int32_t);
template std::pair<NDArray<double>, PadSpec> pad_to(const NDArray<double>&, const Shape&, double);
template NDArray<float> un_pad(const NDArray<float>&, const PadSpec&);
template NDArray<int32_t> un_pad(const NDArray<int32_t>&, const PadSpec&);
template NDArray<double> un_pad(const NDArray<double>&, const PadSpec&);

std::vector<int> invert_order(const std::vector<int>& order) {
    std::vector<int> inv(order.size(), -1);
    for (size_t i = 0; i < order.size(); ++i) {
        const int v = order[i];
        if (v < 0 || v >= static_cast<int>(order.size()) || inv[static_cast<size_t>(v)] != -1)
            throw DomainError("invert_order: not a permutation");
        inv[static_cast<size_t>(v)] = static_cast<int>(i);
    }
    return inv;
}

template <class T>
NDArray<T> transpose_spatial(const NDArray<T>& data, const std::vector<int>& order, bool has_channel_axis) {
    const int srank = data.rank() - (has_channel_axis ? 1 : 0);
    if (static_cast<int>(order.size()) != srank) throw DomainError("transpose_spatial: order rank mismatch");
    invert_order(order);  // validates permutation
    bool ident = true;
    for (size_t i = 0; i < order.size(); ++i) ident = ident && order[i] == static_cast<int>(i);
    if (ident) return data;
    const int off = has_channel_axis ? 1 : 0;
    Shape os(data.shape().size());
    if (has_channel_axis) os[0] = data.dim(0);
    for (int i = 0; i < srank; ++i) os[static_cast<size_t>(i + off)] = data.dim(order[static_cast<size_t>(i)] + off);
    NDArray<T> out(os);
    const Shape ist = row_major_strides(data.shape());
    const int64_t channels = has_channel_axis ? data.dim(0) : 1;
    const int64_t nspatial = out.numel() / channels;
    for (int64_t c = 0; c < channels; ++c) {
        for (int64_t lin = 0; lin < nspatial; ++lin) {
            int64_t rem = lin, src = has_channel_axis ? c * ist[0] : 0;
            for (int i = srank - 1; i >= 0; --i) {
                const int64_t v = rem % os[static_cast<size_t>(i + off)];
                rem /= os[static_cast<size_t>(i + off)];
                src += v * ist[static_cast<size_t>(order[static_cast<size_t>(i)] + off)];
            }
            out[c * nspatial + lin] = data[src];
        }
    }
    return out;
}

template NDArray<float> transpose_spatial(const NDArray<float>&, const std::vector<int>&, bool);
template NDArray<int32_t> transpose_spatial(const NDArray<int32_t>&, const std::vector<int>&, bool);
template NDArray<double> transpose_spatial(const NDArray<double>&, const std::vector<int>&, bool);

ArrayF gaussian_weight_map(const Shape& patch_shape, double sigma_scale) {
    if (!(sigma_scale > 0.0)) throw DomainError("gaussian_weight_map: sigma_scale must be positive");
    for (int64_t d : patch_shape)
        if (d < 1) throw DomainError("gaussian_weight_map: patch dims must be >= 1");
    std::vector<std::vector<double>> axes;
    for (int64_t d : patch_shape) {
        std::vector<double> ax(static_cast<size_t>(d));
        const double center = (static_cast<double>(d) - 1.0) / 2.0;
        const double sigma = sigma_scale * static_cast<double>(d);
        for (int64_t i = 0; i < d; ++i) {
            const double t = (static_cast<double>(i) - center) / sigma;
            ax[static_cast<size_t>(i)] = std::exp(-0.5 * t * t);
        }
        axes.push_back(std::move(ax));
    }
    ArrayF out(patch_shape);
    double maxv = 0.0;
    const int rank = static_cast<int>(patch_shape.size());
    for (int64_t lin = 0; lin < out.numel(); ++lin) {
        int64_t rem = lin;
        double v = 1.0;
        for (int i = rank - 1; i >= 0; --i) {
            const int64_t ix = rem % patch_shape[static_cast<size_t>(i)];
            rem /= patch_shape[static_cast<size_t>(i)];
            v *= axes[static_cast<size_t>(i)][static_cast<size_t>(ix)];
        }
        out[lin] = static_cast<float>(v);
        maxv = std::max(maxv, v);
    }
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<float>(out[i] / maxv);
    return out;
}

ArrayF one_hot(const ArrayI& seg, int num_classes) {
    if (num_classes < 1) throw DomainError("one_hot: num_classes must be >= 1");
    Shape os;
    os.push_back(num_classes);
    for (int64_t d : seg.shape()) os.push_back(d);
    ArrayF out(os, 0.0f);
    const int64_t n = seg.numel();
    for (int64_t i = 0; i < n; ++i) {
        const int32_t v = seg[i];
        if (v < 0 || v >= num_classes) throw DomainError("one_hot: label " + std::to_string(v) + " out of range");
        out[static_cast<int64_t>(v) * n + i] = 1.0f;
    }
    return out;
}

ArrayF gaussian_smooth(const ArrayF& data, double sigma) {
    if (!(sigma > 0.0)) return data;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        kernel[static_cast<size_t>(i + radius)] = v;
        ksum += v;
    }
    for (double& k : kernel) k /= ksum;

    ArrayF cur = data;
    const int rank = cur.rank();
    for (int axis = 0; axis < rank; ++axis) {
        ArrayF next(cur.shape());
        const Shape st = row_major_strides(cur.shape());
        const int64_t dim = cur.dim(axis);
        const int64_t stride = st[static_cast<size_t>(axis)];
        const int64_t outer = cur.numel() / dim;
        // iterate lines along `axis`
        for (int64_t line = 0; line < outer; ++line) {
            // decompose line index into the non-axis coordinates
            int64_t rem = line, base = 0;
            for (int i = rank - 1; i >= 0; --i) {
                if (i == axis) continue;
                const int64_t v = rem % cur.dim(i);
                rem /= cur.dim(i);
                base += v * st[static_cast<size_t>(i)];
            }
            for (int64_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    int64_t j = i + k;
                    if (j < 0) j = -j - 1;  // reflect
                    if (j >= dim) j = 2 * dim - j - 1;
                    j = std::clamp<int64_t>(j, 0, dim - 1);
                    acc += kernel[static_cast<size_t>(k + radius)] * cur[base + j * stride];
                }
                next[base + i * stride] = static_cast<float>(acc);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace voxseg
