// Copyright 2026 The detgeom Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace detgeom {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometric preconditions: malformed boxes, undefined ratios.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class InvalidBox : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// IoU of two zero-area boxes.
class UndefinedRatio : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Aspect ratio requested for a box with zero width or height.
class DegenerateAspect : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// A caller-supplied parameter is outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data parsed but violates a referential or geometric invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DanglingIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidBoxError : public ValidationError {
 public:
  InvalidBoxError(std::string message, std::vector<std::string> offenders)
      : ValidationError(std::move(message)), offenders_(std::move(offenders)) {}

  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

class EmptyEvaluation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed input text (JSON syntax, wrong field types, bad CSV rows).
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace detgeom
