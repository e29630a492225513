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

#include <vector>
#include <string>

namespace apdgain {

/// Entry point of the batch command surface. Returns the process exit
/// code: 0 success, 1 runtime failure, 2 validation failure. Validation
/// failures print a single line `error code=<code> message="..."` to
/// stderr. Every successful run writes its artifacts plus a manifest.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace apdgain
