/*
   Copyright 2026 apdgain authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace apdgain {

/// Base error carrying a short machine-readable code ("invalid-parameter",
/// "truncation-failure", ...) in addition to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Rejected inputs: bad parameters, bad config, violated preconditions.
/// Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failures discovered while computing: non-convergence, cap overflows,
/// malformed data encountered mid-stream. Maps to CLI exit code 1.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace apdgain
