// Copyright 2026 The sqzchip Authors.
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

#pragma once

#include "sqz/config.hpp"

namespace sqz::testing {

// Reference device used across the test suites: the built-in configuration,
// so every suite and the shipped file describe the same chip.  The arm
// lengths in it were produced by solve_arm_length_for_efficiency for
// end-to-end detection efficiencies of 0.52 (arm 1) and 0.54 (arm 2); the
// solver itself is covered in the chip tests.
inline ChipNetlist reference_chip() { return reference_config().chip; }

}  // namespace sqz::testing
