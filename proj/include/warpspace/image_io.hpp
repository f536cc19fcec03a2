// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <string>

#include "warpspace/types.hpp"

namespace warpspace {

/// Renders an image with values in [0, 1] as plain-text PGM (P2, maxval 255).
/// Each value is scaled by 255, rounded to nearest, and clamped to [0, 255].
std::string to_pgm(const RowMat& image);

/// Writes to_pgm(image) to a file; throws std::runtime_error on I/O failure.
void write_pgm(const RowMat& image, const std::string& path);

}  // namespace warpspace
