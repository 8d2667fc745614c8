// Copyright 2026 The vinr Authors.
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

#ifndef VINR_ERRORS_H_
#define VINR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace vinr {

// Base class for every error raised by the codec.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched vector lengths or invalid distribution parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Truncated, tampered or otherwise undecodable byte stream.
class CorruptStream : public Error {
 public:
  using Error::Error;
};

// The compressed object was produced against a different prior.
class WrongPrior : public Error {
 public:
  using Error::Error;
};

// Optimization produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A block needs more A* proposals than the configured cap allows.
class SampleCapExceeded : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vinr

#endif  // VINR_ERRORS_H_
