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

#include <string_view>

namespace apdgain {

// Elementary charge, CODATA 2018 exact value [C].
inline constexpr double kElementaryCharge = 1.602176634e-19;

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace apdgain
