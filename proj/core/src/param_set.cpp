#include "fwseg/param_set.hpp"

#include <cmath>
#include <cstring>

#include "fwseg/errors.hpp"

namespace fwseg {

torch::Tensor& ParamSet::at(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

const torch::Tensor& ParamSet::at(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

std::vector<std::string> ParamSet::names(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : map_) {
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
}

std::int64_t ParamSet::numel() const {
    std::int64_t n = 0;
    for (const auto& [k, v] : map_) n += v.numel();
    return n;
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (const auto& [k, v] : map_) out.map_[k] = v.detach().clone();
    return out;
}

ParamSet ParamSet::leaves() const {
    ParamSet out;
    for (const auto& [k, v] : map_) out.map_[k] = v.detach().clone().requires_grad_(true);
    return out;
}

ParamSet ParamSet::subset(const std::string& prefix) const {
    ParamSet out;
    for (const auto& [k, v] : map_) {
        if (k.rfind(prefix, 0) == 0) out.map_[k] = v;
    }
    return out;
}

void ParamSet::merge(const ParamSet& other) {
    for (const auto& [k, v] : other.map_) map_[k] = v;
}

ParamSet ParamSet::prefixed(const std::string& prefix) const {
    ParamSet out;
    for (const auto& [k, v] : map_) out.map_[prefix + k] = v;
    return out;
}

ParamSet ParamSet::stripped(const std::string& prefix) const {
    ParamSet out;
    for (const auto& [k, v] : map_) {
        if (k.rfind(prefix, 0) == 0) out.map_[k.substr(prefix.size())] = v;
    }
    return out;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& [k, v] : map_) out.map_[k] = torch::zeros_like(v.detach());
    return out;
}

bool bitwise_equal(const ParamSet& a, const ParamSet& b, const std::string& prefix) {
    const auto na = a.names(prefix);
    if (na != b.names(prefix)) return false;
    for (const auto& n : na) {
        auto x = a.at(n).detach().contiguous();
        auto y = b.at(n).detach().contiguous();
        if (x.sizes() != y.sizes() || x.scalar_type() != y.scalar_type()) return false;
        if (std::memcmp(x.data_ptr(), y.data_ptr(), x.numel() * x.element_size()) != 0) return false;
    }
    return true;
}

double max_abs_diff(const ParamSet& a, const ParamSet& b) {
    double m = 0.0;
    for (const auto& [k, v] : a) {
        if (!b.contains(k)) continue;
        m = std::max(m, (v.detach() - b.at(k).detach()).abs().max().item<double>());
    }
    return m;
}

double global_norm(const ParamSet& p) {
    double s = 0.0;
    for (const auto& [k, v] : p) {
        if (v.defined()) s += v.detach().to(torch::kFloat64).pow(2).sum().item<double>();
    }
    return std::sqrt(s);
}

}  // namespace fwseg
