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

#include <filesystem>

#include "iqt/volume.hpp"

namespace iqt::pipeline {

enum class SlicePlane { Axial, Coronal };

/// Writes the middle slice of `v` as an 8-bit binary PGM, mapping [lo, hi]
/// linearly to [0, 255] with clamping. Coronal slices (x-z) are resampled to
/// square pixels by repeating rows according to the spacing ratio.
void write_mid_slice_pgm(const Volume3D& v, SlicePlane plane, double lo, double hi, const std::filesystem::path& path);

}  // namespace iqt::pipeline
