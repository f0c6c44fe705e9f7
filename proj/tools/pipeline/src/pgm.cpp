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

#include "iqt/pipeline/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "iqt/error.hpp"

namespace iqt::pipeline {

void write_mid_slice_pgm(const Volume3D& v, SlicePlane plane, double lo, double hi, const std::filesystem::path& path) {
    if (!(hi > lo)) hi = lo + 1;
    const auto level = [&](float x) {
        const double t = std::clamp((double(x) - lo) / (hi - lo), 0.0, 1.0);
        return static_cast<unsigned char>(std::lround(255.0 * t));
    };
    int width = v.nx(), height = 0;
    std::vector<unsigned char> pixels;
    if (plane == SlicePlane::Axial) {
        height = v.ny();
        const int z = v.nz() / 2;
        for (int y = height - 1; y >= 0; --y)
            for (int x = 0; x < width; ++x) pixels.push_back(level(v.at(x, y, z)));
    } else {
        const int y = v.ny() / 2;
        const int repeat = std::max(1, int(std::lround(v.grid().sz / v.grid().sx)));
        height = v.nz() * repeat;
        for (int z = v.nz() - 1; z >= 0; --z)
            for (int r = 0; r < repeat; ++r)
                for (int x = 0; x < width; ++x) pixels.push_back(level(v.at(x, y, z)));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "cannot write " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "write failed for " + path.string());
}

}  // namespace iqt::pipeline
