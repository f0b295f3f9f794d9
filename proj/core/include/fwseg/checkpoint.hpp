#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "fwseg/param_set.hpp"

namespace fwseg {

/// Text header of key/value pairs followed by raw little-endian float32 tensors.
struct Checkpoint {
    std::map<std::string, std::string> header;
    ParamSet tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fwseg
