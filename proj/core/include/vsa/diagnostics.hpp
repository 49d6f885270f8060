/*
 * Copyright (c) 2026 The VSA Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vsa {

enum class CheckLevel { ops, blocks, model };
std::string_view to_string(CheckLevel level);
CheckLevel parse_check_level(std::string_view text);

inline constexpr double kOpsTolerance = 1e-5;
inline constexpr double kBlocksTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;

struct CheckItem {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t entries = 0;

  bool passed() const { return max_rel_error < tolerance; }
};

struct CheckReport {
  CheckLevel level = CheckLevel::ops;
  std::vector<CheckItem> items;

  bool passed() const;
};

/// Op names accepted by run_gradcheck's fault injection.
std::vector<std::string> differentiable_op_names();

/// Finite-difference suite at fp64. Ops: every differentiable primitive.
/// Blocks: attention, transformer blocks, patch and pose plumbing. Model:
/// full tiny view-synthesis models (plain, masked, multi-source, ray poses).
/// A non-empty `inject_fault` scales that op's backward rule by 1.5 for the
/// duration of the run, which must make the report fail.
CheckReport run_gradcheck(CheckLevel level, std::uint64_t seed = 0, const std::string& inject_fault = {});

}  // namespace vsa
