/*
 * Copyright 2026 The L3A Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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

namespace l3a {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter is outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Matrix shapes do not conform.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Non-finite values, or a factorization that should succeed did not.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The requested direct solve is too large to attempt.
class InfeasibleScale : public Error {
 public:
  using Error::Error;
};

enum class FormatErrc {
  io,
  bad_magic,
  wrong_file_kind,
  version_mismatch,
  truncated_payload,
  dimension_mismatch,
  malformed_record,
};

inline const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::io: return "i/o error";
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::wrong_file_kind: return "wrong file kind";
    case FormatErrc::version_mismatch: return "version mismatch";
    case FormatErrc::truncated_payload: return "truncated payload";
    case FormatErrc::dimension_mismatch: return "dimension mismatch";
    case FormatErrc::malformed_record: return "malformed record";
  }
  return "unknown format error";
}

// Errors reading or writing one of the on-disk formats. The message always
// starts with the code's name so callers matching on text still work.
class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& detail)
      : Error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace l3a
