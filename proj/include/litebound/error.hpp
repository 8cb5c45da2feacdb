// Copyright 2026 The litebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LITEBOUND_ERROR_HPP
#define LITEBOUND_ERROR_HPP

#include <stdexcept>
#include <string>

namespace litebound {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, missing directories, bad arguments.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Tensor shape contract violated.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Cache entry written by a different teacher bank or projection.
class StaleCacheError : public Error {
public:
  using Error::Error;
};

/// A numeric value left the finite range.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A teacher failed to produce features.
class TeacherError : public Error {
public:
  TeacherError(std::string teacher_id, const std::string& what)
      : Error("teacher '" + teacher_id + "': " + what), teacher_id_(std::move(teacher_id)) {}
  const std::string& teacher_id() const noexcept { return teacher_id_; }

private:
  std::string teacher_id_;
};

/// A prerequisite artifact of an earlier pipeline stage is missing.
class PrerequisiteError : public Error {
public:
  using Error::Error;
};

}  // namespace litebound

#endif  // LITEBOUND_ERROR_HPP
