// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "poolnet/training.hpp"

namespace poolnet {

inline constexpr int kCheckpointVersion = 1;

/// Serializes a trained model as one JSON document: format version,
/// hyper-parameters, vocabulary (marker indices plus code points in index
/// order), class labels, and every parameter array with its shape and
/// row-major values. Doubles are written in shortest round-trip form, so
/// load_checkpoint(save_checkpoint(m)) reproduces every parameter bit for bit.
std::string save_checkpoint(const TrainedModel& model);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);

/// Throws LoadError when the document is malformed or internally inconsistent.
TrainedModel load_checkpoint(const std::string& text);
TrainedModel load_checkpoint_file(const std::filesystem::path& path);

}  // namespace poolnet
