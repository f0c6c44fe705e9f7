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

#include "iqt/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "iqt/error.hpp"

namespace iqt::nn {

std::string Shape5::str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << x << "," << y << "," << z << ")";
    return os.str();
}

Tensor5::Tensor5(const Shape5& s, std::vector<double> data) : shape_(s), data_(std::move(data)) {
    if (data_.size() != s.size()) throw DataError("tensor data length does not match shape " + s.str());
}

void Tensor5::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor5::add(const Tensor5& o) {
    if (!(o.shape_ == shape_)) throw DataError("tensor add: shape " + o.shape_.str() + " vs " + shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

double Tensor5::dot(const Tensor5& o) const {
    if (!(o.shape_ == shape_)) throw DataError("tensor dot: shape mismatch");
    double s = 0;
    for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * o.data_[i];
    return s;
}

}  // namespace iqt::nn
