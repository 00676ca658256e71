#pragma once

#include <string>

#include "hgs/core_types.hpp"

namespace hgs {

// 8-bit PNG decoded to float RGB (3 channels) in [0,1]. Gray and palette
// files are expanded; 16-bit is reduced.
RasterGrid read_png(const std::string& path);

// 8-bit gray PNG read as raw integer values (label maps), 1 channel.
RasterGrid read_png_labels(const std::string& path);

// Writes a 1- or 3-channel grid as an 8-bit PNG, scaling [0,1] to [0,255].
void write_png(const std::string& path, const RasterGrid& img);

// Writes a 1-channel grid of integer ids as raw 8-bit gray pixel values.
void write_png_labels(const std::string& path, const RasterGrid& labels);

// PFM (float32 little-endian, rows bottom-to-top). Gray "Pf" for 1 channel,
// color "PF" for 3.
RasterGrid read_pfm(const std::string& path);
void write_pfm(const std::string& path, const RasterGrid& img);

// Maps a single-channel grid through min-max normalization and a blue-red
// color ramp; for debugging dumps.
RasterGrid heatmap(const RasterGrid& map);

}  // namespace hgs
