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

#include <stdexcept>
#include <string>

namespace iqt {

// Three failure families, each mapped to its own CLI exit code.

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad, missing or inconsistent data: file formats, shapes, coverage (exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric failures: non-finite values, non-PSD covariance, empty tissue (exit code 4).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// IQTV file errors carry a machine-readable kind so callers can tell them apart.
class FormatError : public DataError {
public:
    enum class Kind { BadMagic, BadVersion, Truncated, BadDims, BadChannels, NonFinite, Unreadable, Unwritable };

    FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace iqt
