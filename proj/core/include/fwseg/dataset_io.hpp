#pragma once

#include <filesystem>
#include <vector>

#include "fwseg/episodic.hpp"
#include "fwseg/weak_labels.hpp"

namespace fwseg {

namespace fs = std::filesystem;

/// 8-bit grayscale PNG to [0,1] intensities. Colour inputs are converted.
Image read_image_png(const fs::path& path);
void write_image_png(const fs::path& path, const Image& image);

/// Dense masks are stored as {0,255}; any other byte value is a DataError.
DenseMask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const DenseMask& mask);

/// Weak masks are stored as 0 (negative), 255 (positive), 128 (unknown).
WeakMask read_weak_png(const fs::path& path);
void write_weak_png(const fs::path& path, const WeakMask& weak);

/// Reads `<root>/<dataset_id>/<class_tag>/imgNNN.png` + `imgNNN_mask.png`.
/// Tasks and samples are sorted by name. An empty root yields no tasks and a warning.
std::vector<SegTask> load_dataset_dir(const fs::path& root);

/// Inverse of load_dataset_dir.
void write_dataset_dir(const fs::path& root, const std::vector<SegTask>& tasks);

}  // namespace fwseg
