/*
 * Copyright 2026 The lowfield-iqt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "iqt/nn_ops.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "iqt/error.hpp"

namespace iqt::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

// Geometry of the zero-padded grid used by the flat-shift convolution: output
// voxel v lives at padded offset q(v); tap t reads padded offset q(v) + shift[t].
struct PaddedGeometry {
    int rx, ry, rz;
    int px, py, pz;
    std::size_t volume;
    std::size_t first, span;   // [first, first + span) covers every interior q
    std::vector<std::ptrdiff_t> shift;

    PaddedGeometry(const Shape5& in, const Shape5& k) {
        rx = k.x / 2, ry = k.y / 2, rz = k.z / 2;
        px = in.x + 2 * rx, py = in.y + 2 * ry, pz = in.z + 2 * rz;
        volume = std::size_t(px) * std::size_t(py) * std::size_t(pz);
        first = offset(rx, ry, rz);
        span = offset(in.x - 1 + rx, in.y - 1 + ry, in.z - 1 + rz) - first + 1;
        for (int dz = -rz; dz <= rz; ++dz)
            for (int dy = -ry; dy <= ry; ++dy)
                for (int dx = -rx; dx <= rx; ++dx)
                    shift.push_back(std::ptrdiff_t(dz) * px * py + std::ptrdiff_t(dy) * px + dx);
    }
    std::size_t offset(int x, int y, int z) const {
        return (std::size_t(z) * std::size_t(py) + std::size_t(y)) * std::size_t(px) + std::size_t(x);
    }
};

void check_conv_shapes(const Tensor5& input, const Tensor5& kernel, const Tensor5& bias) {
    const Shape5& k = kernel.shape();
    if (k.x % 2 == 0 || k.y % 2 == 0 || k.z % 2 == 0) throw DataError("conv3d kernel dims must be odd for same padding");
    if (k.c != input.shape().c) throw DataError("conv3d: input has " + std::to_string(input.shape().c) + " channels, kernel expects " + std::to_string(k.c));
    if (bias.shape().c != k.n || bias.size() != std::size_t(k.n)) throw DataError("conv3d: bias length mismatch");
}

// kernel (c_out, c_in, taps) -> per-tap (c_out x c_in) matrices.
std::vector<RowMat> conv_tap_matrices(const Tensor5& kernel) {
    const Shape5& k = kernel.shape();
    const std::size_t taps = k.spatial();
    std::vector<RowMat> w(taps, RowMat(k.n, k.c));
    const double* src = kernel.data().data();
    for (int o = 0; o < k.n; ++o)
        for (int i = 0; i < k.c; ++i)
            for (std::size_t t = 0; t < taps; ++t) w[t](o, i) = src[(std::size_t(o) * k.c + i) * taps + t];
    return w;
}

void pad_into(const Tensor5& input, int b, const PaddedGeometry& g, RowMat& padded) {
    const Shape5& s = input.shape();
    padded.setZero(s.c, Eigen::Index(g.volume));
    for (int c = 0; c < s.c; ++c) {
        const double* src = input.channel(b, c);
        double* dst = padded.row(c).data();
        for (int z = 0; z < s.z; ++z)
            for (int y = 0; y < s.y; ++y) {
                const double* row = src + (std::size_t(z) * s.y + y) * s.x;
                std::copy(row, row + s.x, dst + g.offset(g.rx, y + g.ry, z + g.rz));
            }
    }
}

}  // namespace

Tensor5 conv3d_forward(const Tensor5& input, const Tensor5& kernel, const Tensor5& bias) {
    check_conv_shapes(input, kernel, bias);
    const Shape5& s = input.shape();
    const Shape5& k = kernel.shape();
    Tensor5 out(Shape5{s.n, k.n, s.x, s.y, s.z});
    const std::size_t vox = s.spatial();

    if (k.spatial() == 1) {
        ConstRowMap w(kernel.data().data(), k.n, k.c);
        for (int b = 0; b < s.n; ++b) {
            ConstRowMap in(input.channel(b, 0), s.c, Eigen::Index(vox));
            RowMap o(out.channel(b, 0), k.n, Eigen::Index(vox));
            o.noalias() = w * in;
            for (int c = 0; c < k.n; ++c) o.row(c).array() += bias.data()[std::size_t(c)];
        }
        return out;
    }

    const PaddedGeometry g(s, k);
    const auto w = conv_tap_matrices(kernel);
    RowMat padded, acc;
    for (int b = 0; b < s.n; ++b) {
        pad_into(input, b, g, padded);
        acc.setZero(k.n, Eigen::Index(g.span));
        for (std::size_t t = 0; t < w.size(); ++t)
            acc.noalias() += w[t] * padded.middleCols(Eigen::Index(std::ptrdiff_t(g.first) + g.shift[t]), Eigen::Index(g.span));
        for (int c = 0; c < k.n; ++c) {
            double* dst = out.channel(b, c);
            const double bc = bias.data()[std::size_t(c)];
            for (int z = 0; z < s.z; ++z)
                for (int y = 0; y < s.y; ++y) {
                    const double* row = acc.row(c).data() + (g.offset(g.rx, y + g.ry, z + g.rz) - g.first);
                    double* o = dst + (std::size_t(z) * s.y + y) * s.x;
                    for (int x = 0; x < s.x; ++x) o[x] = row[x] + bc;
                }
        }
    }
    return out;
}

void conv3d_backward(const Tensor5& input, const Tensor5& kernel, const Tensor5& grad_out, Tensor5* grad_input,
                     Tensor5* grad_kernel, Tensor5* grad_bias) {
    const Shape5& s = input.shape();
    const Shape5& k = kernel.shape();
    const std::size_t vox = s.spatial();
    const std::size_t taps = k.spatial();
    if (!(grad_out.shape() == Shape5{s.n, k.n, s.x, s.y, s.z})) throw DataError("conv3d_backward: gradient shape mismatch");

    if (grad_bias) {
        for (int b = 0; b < s.n; ++b)
            for (int c = 0; c < k.n; ++c) {
                const double* g = grad_out.channel(b, c);
                double sum = 0;
                for (std::size_t i = 0; i < vox; ++i) sum += g[i];
                grad_bias->data()[std::size_t(c)] += sum;
            }
    }

    if (taps == 1) {
        ConstRowMap w(kernel.data().data(), k.n, k.c);
        for (int b = 0; b < s.n; ++b) {
            ConstRowMap in(input.channel(b, 0), s.c, Eigen::Index(vox));
            ConstRowMap go(grad_out.channel(b, 0), k.n, Eigen::Index(vox));
            if (grad_kernel) {
                RowMap gw(grad_kernel->data().data(), k.n, k.c);
                gw.noalias() += go * in.transpose();
            }
            if (grad_input) {
                RowMap gi(grad_input->channel(b, 0), s.c, Eigen::Index(vox));
                gi.noalias() += w.transpose() * go;
            }
        }
        return;
    }

    const PaddedGeometry g(s, k);
    const auto w = conv_tap_matrices(kernel);
    std::vector<RowMat> gw;
    if (grad_kernel) gw.assign(taps, RowMat::Zero(k.n, k.c));
    RowMat padded, gpad, gout;
    for (int b = 0; b < s.n; ++b) {
        // Gradient laid out on the padded span; non-interior columns stay zero.
        gout.setZero(k.n, Eigen::Index(g.span));
        for (int c = 0; c < k.n; ++c) {
            const double* src = grad_out.channel(b, c);
            for (int z = 0; z < s.z; ++z)
                for (int y = 0; y < s.y; ++y) {
                    double* row = gout.row(c).data() + (g.offset(g.rx, y + g.ry, z + g.rz) - g.first);
                    std::copy(src + (std::size_t(z) * s.y + y) * s.x, src + (std::size_t(z) * s.y + y + 1) * s.x, row);
                }
        }
        if (grad_kernel) {
            pad_into(input, b, g, padded);
            for (std::size_t t = 0; t < taps; ++t)
                gw[t].noalias() +=
                    gout * padded.middleCols(Eigen::Index(std::ptrdiff_t(g.first) + g.shift[t]), Eigen::Index(g.span)).transpose();
        }
        if (grad_input) {
            gpad.setZero(s.c, Eigen::Index(g.volume));
            for (std::size_t t = 0; t < taps; ++t)
                gpad.middleCols(Eigen::Index(std::ptrdiff_t(g.first) + g.shift[t]), Eigen::Index(g.span)).noalias() +=
                    w[t].transpose() * gout;
            for (int c = 0; c < s.c; ++c) {
                double* dst = grad_input->channel(b, c);
                const double* src = gpad.row(c).data();
                for (int z = 0; z < s.z; ++z)
                    for (int y = 0; y < s.y; ++y) {
                        const double* row = src + g.offset(g.rx, y + g.ry, z + g.rz);
                        double* o = dst + (std::size_t(z) * s.y + y) * s.x;
                        for (int x = 0; x < s.x; ++x) o[x] += row[x];
                    }
            }
        }
    }
    if (grad_kernel) {
        double* dst = grad_kernel->data().data();
        for (int o = 0; o < k.n; ++o)
            for (int i = 0; i < k.c; ++i)
                for (std::size_t t = 0; t < taps; ++t) dst[(std::size_t(o) * k.c + i) * taps + t] += gw[t](o, i);
    }
}

namespace {

void check_deconv(const Tensor5& input, const Tensor5& kernel) {
    if (kernel.shape().n != input.shape().c)
        throw DataError("deconv3d: input has " + std::to_string(input.shape().c) + " channels, kernel expects " +
                        std::to_string(kernel.shape().n));
}

// deconv kernel (c_in, c_out, taps) -> per-tap (c_in x c_out) matrices.
std::vector<RowMat> deconv_tap_matrices(const Tensor5& kernel) {
    const Shape5& k = kernel.shape();
    const std::size_t taps = k.spatial();
    std::vector<RowMat> w(taps, RowMat(k.n, k.c));
    const double* src = kernel.data().data();
    for (int i = 0; i < k.n; ++i)
        for (int o = 0; o < k.c; ++o)
            for (std::size_t t = 0; t < taps; ++t) w[t](i, o) = src[(std::size_t(i) * k.c + o) * taps + t];
    return w;
}

}  // namespace

Tensor5 deconv3d_forward(const Tensor5& input, const Tensor5& kernel, const Tensor5& bias) {
    check_deconv(input, kernel);
    const Shape5& s = input.shape();
    const Shape5& k = kernel.shape();
    if (bias.size() != std::size_t(k.c)) throw DataError("deconv3d: bias length mismatch");
    const Shape5 os{s.n, k.c, s.x * k.x, s.y * k.y, s.z * k.z};
    Tensor5 out(os);
    const auto w = deconv_tap_matrices(kernel);
    const std::size_t vox = s.spatial();
    RowMat tap_out;
    for (int b = 0; b < s.n; ++b) {
        ConstRowMap in(input.channel(b, 0), s.c, Eigen::Index(vox));
        for (int tz = 0; tz < k.z; ++tz)
            for (int ty = 0; ty < k.y; ++ty)
                for (int tx = 0; tx < k.x; ++tx) {
                    const std::size_t t = (std::size_t(tz) * k.y + ty) * k.x + tx;
                    tap_out.noalias() = w[t].transpose() * in;
                    for (int o = 0; o < k.c; ++o) {
                        const double* src = tap_out.row(o).data();
                        const double bo = bias.data()[std::size_t(o)];
                        std::size_t v = 0;
                        for (int z = 0; z < s.z; ++z)
                            for (int y = 0; y < s.y; ++y)
                                for (int x = 0; x < s.x; ++x, ++v)
                                    out.at(b, o, x * k.x + tx, y * k.y + ty, z * k.z + tz) = src[v] + bo;
                    }
                }
    }
    return out;
}

void deconv3d_backward(const Tensor5& input, const Tensor5& kernel, const Tensor5& grad_out, Tensor5* grad_input,
                       Tensor5* grad_kernel, Tensor5* grad_bias) {
    const Shape5& s = input.shape();
    const Shape5& k = kernel.shape();
    const Shape5 os{s.n, k.c, s.x * k.x, s.y * k.y, s.z * k.z};
    if (!(grad_out.shape() == os)) throw DataError("deconv3d_backward: gradient shape mismatch");
    const auto w = deconv_tap_matrices(kernel);
    const std::size_t vox = s.spatial();
    const std::size_t taps = k.spatial();
    std::vector<RowMat> gw;
    if (grad_kernel) gw.assign(taps, RowMat::Zero(k.n, k.c));
    RowMat gt(k.c, Eigen::Index(vox));
    for (int b = 0; b < s.n; ++b) {
        ConstRowMap in(input.channel(b, 0), s.c, Eigen::Index(vox));
        for (int tz = 0; tz < k.z; ++tz)
            for (int ty = 0; ty < k.y; ++ty)
                for (int tx = 0; tx < k.x; ++tx) {
                    const std::size_t t = (std::size_t(tz) * k.y + ty) * k.x + tx;
                    for (int o = 0; o < k.c; ++o) {
                        double* dst = gt.row(o).data();
                        std::size_t v = 0;
                        for (int z = 0; z < s.z; ++z)
                            for (int y = 0; y < s.y; ++y)
                                for (int x = 0; x < s.x; ++x, ++v)
                                    dst[v] = grad_out.at(b, o, x * k.x + tx, y * k.y + ty, z * k.z + tz);
                    }
                    if (grad_kernel) gw[t].noalias() += in * gt.transpose();
                    if (grad_input) {
                        RowMap gi(grad_input->channel(b, 0), s.c, Eigen::Index(vox));
                        gi.noalias() += w[t] * gt;
                    }
                }
        if (grad_bias) {
            for (int o = 0; o < k.c; ++o) {
                const double* g = grad_out.channel(b, o);
                double sum = 0;
                for (std::size_t i = 0; i < os.spatial(); ++i) sum += g[i];
                grad_bias->data()[std::size_t(o)] += sum;
            }
        }
    }
    if (grad_kernel) {
        double* dst = grad_kernel->data().data();
        for (int i = 0; i < k.n; ++i)
            for (int o = 0; o < k.c; ++o)
                for (std::size_t t = 0; t < taps; ++t) dst[(std::size_t(i) * k.c + o) * taps + t] += gw[t](i, o);
    }
}

Tensor5 strided_conv3d(const Tensor5& input, const Tensor5& kernel) {
    const Shape5& s = input.shape();
    const Shape5& k = kernel.shape();
    if (s.c != k.c) throw DataError("strided_conv3d: channel mismatch");
    if (s.x % k.x || s.y % k.y || s.z % k.z) throw DataError("strided_conv3d: dims not divisible by stride");
    Tensor5 out(Shape5{s.n, k.n, s.x / k.x, s.y / k.y, s.z / k.z});
    const Shape5& os = out.shape();
    for (int b = 0; b < s.n; ++b)
        for (int i = 0; i < k.n; ++i)
            for (int z = 0; z < os.z; ++z)
                for (int y = 0; y < os.y; ++y)
                    for (int x = 0; x < os.x; ++x) {
                        double acc = 0;
                        for (int o = 0; o < k.c; ++o)
                            for (int tz = 0; tz < k.z; ++tz)
                                for (int ty = 0; ty < k.y; ++ty)
                                    for (int tx = 0; tx < k.x; ++tx)
                                        acc += kernel.at(i, o, tx, ty, tz) *
                                               input.at(b, o, x * k.x + tx, y * k.y + ty, z * k.z + tz);
                        out.at(b, i, x, y, z) = acc;
                    }
    return out;
}

Tensor5 maxpool3d_forward(const Tensor5& input, const Dims3& w, PoolCache* cache) {
    const Shape5& s = input.shape();
    if (w[0] < 1 || w[1] < 1 || w[2] < 1 || s.x % w[0] || s.y % w[1] || s.z % w[2])
        throw DataError("maxpool3d: spatial dims " + s.str() + " not divisible by window");
    Tensor5 out(Shape5{s.n, s.c, s.x / w[0], s.y / w[1], s.z / w[2]});
    const Shape5& os = out.shape();
    if (cache) cache->argmax.assign(out.size(), 0);
    std::size_t oi = 0;
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c) {
            const double* src = input.channel(b, c);
            for (int z = 0; z < os.z; ++z)
                for (int y = 0; y < os.y; ++y)
                    for (int x = 0; x < os.x; ++x, ++oi) {
                        double best = -std::numeric_limits<double>::infinity();
                        std::uint32_t arg = 0;
                        for (int dz = 0; dz < w[2]; ++dz)
                            for (int dy = 0; dy < w[1]; ++dy)
                                for (int dx = 0; dx < w[0]; ++dx) {
                                    const std::size_t idx =
                                        (std::size_t(z * w[2] + dz) * s.y + std::size_t(y * w[1] + dy)) * s.x + std::size_t(x * w[0] + dx);
                                    if (src[idx] > best) {
                                        best = src[idx];
                                        arg = std::uint32_t(idx);
                                    }
                                }
                        out.data()[oi] = best;
                        if (cache) cache->argmax[oi] = arg;
                    }
        }
    return out;
}

Tensor5 maxpool3d_backward(const Shape5& s, const Dims3& w, const PoolCache& cache, const Tensor5& grad_out) {
    Tensor5 grad(s);
    const Shape5& os = grad_out.shape();
    if (os.x * w[0] != s.x || os.y * w[1] != s.y || os.z * w[2] != s.z || cache.argmax.size() != grad_out.size())
        throw DataError("maxpool3d_backward: shape mismatch");
    const std::size_t per = os.spatial();
    for (int b = 0; b < s.n; ++b)
        for (int c = 0; c < s.c; ++c) {
            double* dst = grad.channel(b, c);
            const std::size_t base = (std::size_t(b) * s.c + c) * per;
            for (std::size_t i = 0; i < per; ++i) dst[cache.argmax[base + i]] += grad_out.data()[base + i];
        }
    return grad;
}

Tensor5 relu_forward(const Tensor5& input) {
    Tensor5 out = input;
    for (double& v : out.data()) v = v > 0 ? v : 0.0;
    return out;
}

Tensor5 relu_backward(const Tensor5& output, const Tensor5& grad_out) {
    Tensor5 g = grad_out;
    const auto o = output.data();
    auto d = g.data();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(o[i] > 0)) d[i] = 0.0;
    return g;
}

Tensor5 batchnorm_forward(const Tensor5& input, const Tensor5& gamma, const Tensor5& beta, Tensor5& running_mean,
                          Tensor5& running_var, bool train, const BatchNormState& state, BatchNormCache* cache) {
    const Shape5& s = input.shape();
    const std::size_t C = std::size_t(s.c);
    if (gamma.size() != C || beta.size() != C || running_mean.size() != C || running_var.size() != C)
        throw DataError("batchnorm: parameter length mismatch");
    const std::size_t vox = s.spatial();
    const double count = double(s.n) * double(vox);
    if (train && count < 2) throw DataError("batchnorm: train mode needs at least two values per channel");

    std::vector<double> mean(C), var(C);
    if (train) {
        for (int c = 0; c < s.c; ++c) {
            double sum = 0;
            for (int b = 0; b < s.n; ++b) {
                const double* p = input.channel(b, c);
                for (std::size_t i = 0; i < vox; ++i) sum += p[i];
            }
            const double m = sum / count;
            double ss = 0;
            for (int b = 0; b < s.n; ++b) {
                const double* p = input.channel(b, c);
                for (std::size_t i = 0; i < vox; ++i) ss += (p[i] - m) * (p[i] - m);
            }
            mean[std::size_t(c)] = m;
            var[std::size_t(c)] = ss / count;
            auto& rm = running_mean.data()[std::size_t(c)];
            auto& rv = running_var.data()[std::size_t(c)];
            rm = round_to_f32(state.momentum * rm + (1 - state.momentum) * m);
            rv = round_to_f32(state.momentum * rv + (1 - state.momentum) * var[std::size_t(c)]);
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = running_mean.data()[c];
            var[c] = running_var.data()[c];
        }
    }

    Tensor5 out(s);
    BatchNormCache local;
    BatchNormCache& bc = cache ? *cache : local;
    bc.train = train;
    bc.inv_std.assign(C, 0);
    bc.normalized = Tensor5(s);
    for (int c = 0; c < s.c; ++c) {
        const double inv = 1.0 / std::sqrt(var[std::size_t(c)] + state.epsilon);
        bc.inv_std[std::size_t(c)] = inv;
        const double g = gamma.data()[std::size_t(c)], be = beta.data()[std::size_t(c)], m = mean[std::size_t(c)];
        for (int b = 0; b < s.n; ++b) {
            const double* p = input.channel(b, c);
            double* xh = bc.normalized.channel(b, c);
            double* o = out.channel(b, c);
            for (std::size_t i = 0; i < vox; ++i) {
                xh[i] = (p[i] - m) * inv;
                o[i] = g * xh[i] + be;
            }
        }
    }
    return out;
}

void batchnorm_backward(const Tensor5& gamma, const BatchNormCache& cache, const Tensor5& grad_out, Tensor5* grad_input,
                        Tensor5* grad_gamma, Tensor5* grad_beta) {
    const Shape5& s = grad_out.shape();
    const std::size_t vox = s.spatial();
    const double count = double(s.n) * double(vox);
    for (int c = 0; c < s.c; ++c) {
        double sum_dy = 0, sum_dy_xh = 0;
        for (int b = 0; b < s.n; ++b) {
            const double* dy = grad_out.channel(b, c);
            const double* xh = cache.normalized.channel(b, c);
            for (std::size_t i = 0; i < vox; ++i) {
                sum_dy += dy[i];
                sum_dy_xh += dy[i] * xh[i];
            }
        }
        if (grad_gamma) grad_gamma->data()[std::size_t(c)] += sum_dy_xh;
        if (grad_beta) grad_beta->data()[std::size_t(c)] += sum_dy;
        if (!grad_input) continue;
        const double g = gamma.data()[std::size_t(c)];
        const double inv = cache.inv_std[std::size_t(c)];
        for (int b = 0; b < s.n; ++b) {
            const double* dy = grad_out.channel(b, c);
            const double* xh = cache.normalized.channel(b, c);
            double* dx = grad_input->channel(b, c);
            if (cache.train) {
                const double scale = g * inv / count;
                for (std::size_t i = 0; i < vox; ++i) dx[i] += scale * (count * dy[i] - sum_dy - xh[i] * sum_dy_xh);
            } else {
                for (std::size_t i = 0; i < vox; ++i) dx[i] += g * inv * dy[i];
            }
        }
    }
}

Tensor5 concat_channels(const Tensor5& a, const Tensor5& b) {
    const Shape5& sa = a.shape();
    const Shape5& sb = b.shape();
    if (sa.n != sb.n || sa.x != sb.x || sa.y != sb.y || sa.z != sb.z)
        throw DataError("concat: incompatible shapes " + sa.str() + " and " + sb.str());
    Tensor5 out(Shape5{sa.n, sa.c + sb.c, sa.x, sa.y, sa.z});
    const std::size_t vox = sa.spatial();
    for (int n = 0; n < sa.n; ++n) {
        std::copy(a.channel(n, 0), a.channel(n, 0) + vox * std::size_t(sa.c), out.channel(n, 0));
        std::copy(b.channel(n, 0), b.channel(n, 0) + vox * std::size_t(sb.c), out.channel(n, sa.c));
    }
    return out;
}

void split_channels(const Tensor5& grad, int channels_a, Tensor5& grad_a, Tensor5& grad_b) {
    const Shape5& s = grad.shape();
    const std::size_t vox = s.spatial();
    for (int n = 0; n < s.n; ++n) {
        const double* src = grad.channel(n, 0);
        double* da = grad_a.channel(n, 0);
        for (std::size_t i = 0; i < vox * std::size_t(channels_a); ++i) da[i] += src[i];
        const double* srcb = grad.channel(n, channels_a);
        double* db = grad_b.channel(n, 0);
        for (std::size_t i = 0; i < vox * std::size_t(s.c - channels_a); ++i) db[i] += srcb[i];
    }
}

Loss mse_loss(const Tensor5& pred, const Tensor5& target) {
    if (!(pred.shape() == target.shape())) throw DataError("mse_loss: shape " + pred.shape().str() + " vs " + target.shape().str());
    Loss l;
    l.grad = Tensor5(pred.shape());
    const double n = double(pred.size());
    double sum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        sum += d * d;
        l.grad.data()[i] = 2.0 * d / n;
    }
    l.value = sum / n;
    return l;
}

}  // namespace iqt::nn
