#include "fwseg/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fwseg/errors.hpp"

namespace fwseg {

namespace {
constexpr const char* kMagic = "FWSEGCKPT 1";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint " + path.string());
        out << kMagic << '\n';
        for (const auto& [k, v] : ckpt.header) {
            if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
                throw ConfigError("checkpoint header entries must be single tokens: " + k);
            }
            out << k << ' ' << v << '\n';
        }
        out << "tensors " << ckpt.tensors.size() << '\n';
        for (const auto& [name, t] : ckpt.tensors) {
            auto c = t.detach().to(torch::kFloat32).contiguous();
            out << name << ' ' << c.dim();
            for (auto d : c.sizes()) out << ' ' << d;
            out << '\n';
            out.write(reinterpret_cast<const char*>(c.data_ptr<float>()),
                      static_cast<std::streamsize>(c.numel() * sizeof(float)));
            out << '\n';
        }
        if (!out) throw DataError("failed while writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw DataError("not a checkpoint file: " + path.string());
    Checkpoint ckpt;
    long count = -1;
    while (std::getline(in, line)) {
        const auto sp = line.find(' ');
        if (sp == std::string::npos) throw DataError("malformed checkpoint header line: " + line);
        const std::string key = line.substr(0, sp);
        const std::string value = line.substr(sp + 1);
        if (key == "tensors") {
            count = std::stol(value);
            break;
        }
        ckpt.header[key] = value;
    }
    if (count < 0) throw DataError("checkpoint " + path.string() + " has no tensor table");
    for (long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw DataError("truncated checkpoint " + path.string());
        std::istringstream ls(line);
        std::string name;
        long dim = 0;
        ls >> name >> dim;
        std::vector<int64_t> sizes(static_cast<std::size_t>(dim));
        for (auto& s : sizes) ls >> s;
        if (!ls) throw DataError("malformed tensor entry in " + path.string());
        auto t = torch::empty(sizes, torch::kFloat32);
        in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
        in.get();
        if (!in) throw DataError("truncated tensor data in " + path.string());
        ckpt.tensors.set(name, t);
    }
    return ckpt;
}

}  // namespace fwseg
