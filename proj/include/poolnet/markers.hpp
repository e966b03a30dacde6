// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace poolnet {

// Reserved character indices, identical in every vocabulary and checkpoint.
inline constexpr int kBosIndex = 0;
inline constexpr int kEosIndex = 1;
inline constexpr int kUnkIndex = 2;
inline constexpr int kReservedIndices = 3;

}  // namespace poolnet
