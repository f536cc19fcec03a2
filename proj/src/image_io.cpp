// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace warpspace {

std::string to_pgm(const RowMat& image) {
  std::ostringstream out;
  out << "P2\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < image.rows(); ++y) {
    for (Eigen::Index x = 0; x < image.cols(); ++x) {
      const long level = std::lround(image(y, x) * 255.0);
      out << std::clamp(level, 0l, 255l);
      out << (x + 1 == image.cols() ? '\n' : ' ');
    }
  }
  return out.str();
}

void write_pgm(const RowMat& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::string text = to_pgm(image);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed to write '" + path + "'");
}

}  // namespace warpspace
