#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwseg/episodic.hpp"

namespace fwseg {

/// Procedural stand-in for a multi-task meta-dataset. Every (family, regime)
/// pair becomes one task with dataset_id = family and target_class = regime.
struct SynthSpec {
    std::vector<std::string> families{"ellipses", "rectangles", "blobs", "rings"};
    std::vector<std::string> regimes{"contrast", "grain", "stripes"};
    std::string holdout = "rings";
    int samples_per_task = 30;
    int image_size = 64;
    double min_area = 0.05;  // positive area as a fraction of the image
    double max_area = 0.40;
    double noise = 0.04;
    std::uint64_t seed = 1;
};

/// Known shape families and texture regimes.
const std::vector<std::string>& synth_families();
const std::vector<std::string>& synth_regimes();

/// Throws ConfigError for unknown names, fewer than two families, a holdout
/// outside the family list or an infeasible area range.
void validate(const SynthSpec& spec);

/// Renders one sample; `seed` fully determines the output.
Sample synth_sample(const std::string& family, const std::string& regime, int size, double min_area,
                    double max_area, double noise, std::uint64_t seed);

MetaDataset synth_meta_dataset(const SynthSpec& spec);

}  // namespace fwseg
