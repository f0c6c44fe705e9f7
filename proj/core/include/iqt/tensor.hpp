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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace iqt::nn {

/// Rounds to the nearest float. Stored state goes through this so that f32
/// checkpoints reproduce it exactly. The volatile store stops GCC 11 from
/// folding a vectorised double->float->double pair into a copy.
inline double round_to_f32(double v) noexcept {
    volatile float f = static_cast<float>(v);
    return f;
}

/// (batch, channels, x, y, z). Spatial data is x-fastest within a channel.
struct Shape5 {
    int n = 0, c = 0, x = 0, y = 0, z = 0;

    std::size_t spatial() const noexcept { return std::size_t(x) * std::size_t(y) * std::size_t(z); }
    std::size_t size() const noexcept { return std::size_t(n) * std::size_t(c) * spatial(); }
    std::array<int, 3> xyz() const noexcept { return {x, y, z}; }
    bool operator==(const Shape5&) const = default;
    std::string str() const;
};

/// Dense 5D tensor of doubles.
class Tensor5 {
public:
    Tensor5() = default;
    explicit Tensor5(const Shape5& s, double fill = 0.0) : shape_(s), data_(s.size(), fill) {}
    Tensor5(const Shape5& s, std::vector<double> data);

    const Shape5& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(int n, int c, int x, int y, int z) const noexcept {
        return (((std::size_t(n) * std::size_t(shape_.c) + std::size_t(c)) * std::size_t(shape_.z) + std::size_t(z)) *
                    std::size_t(shape_.y) +
                std::size_t(y)) *
                   std::size_t(shape_.x) +
               std::size_t(x);
    }
    double& at(int n, int c, int x, int y, int z) noexcept { return data_[index(n, c, x, y, z)]; }
    double at(int n, int c, int x, int y, int z) const noexcept { return data_[index(n, c, x, y, z)]; }

    double* channel(int n, int c) noexcept { return data_.data() + (std::size_t(n) * std::size_t(shape_.c) + std::size_t(c)) * shape_.spatial(); }
    const double* channel(int n, int c) const noexcept {
        return data_.data() + (std::size_t(n) * std::size_t(shape_.c) + std::size_t(c)) * shape_.spatial();
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& raw() noexcept { return data_; }

    void fill(double v);
    /// Elementwise += of a same-shaped tensor.
    void add(const Tensor5& o);
    double dot(const Tensor5& o) const;

    bool operator==(const Tensor5&) const = default;

private:
    Shape5 shape_;
    std::vector<double> data_;
};

}  // namespace iqt::nn
