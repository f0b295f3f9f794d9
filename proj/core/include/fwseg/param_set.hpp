#pragma once

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace fwseg {

/// Named parameter tensors. Names carry a group prefix: "phi." (feature
/// extractor), "head." (segmentation head) or "mask." (mask encoder).
/// Iteration order is lexicographic, which keeps every reduction deterministic.
class ParamSet {
public:
    using Map = std::map<std::string, torch::Tensor>;

    ParamSet() = default;
    explicit ParamSet(Map m) : map_(std::move(m)) {}

    bool contains(const std::string& name) const { return map_.count(name) > 0; }
    torch::Tensor& at(const std::string& name);
    const torch::Tensor& at(const std::string& name) const;
    void set(const std::string& name, torch::Tensor t) { map_[name] = std::move(t); }
    void erase(const std::string& name) { map_.erase(name); }

    std::size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }
    Map::iterator begin() { return map_.begin(); }
    Map::iterator end() { return map_.end(); }
    Map::const_iterator begin() const { return map_.begin(); }
    Map::const_iterator end() const { return map_.end(); }

    std::vector<std::string> names(const std::string& prefix = "") const;
    std::int64_t numel() const;

    /// Deep copy with no autograd history.
    ParamSet clone() const;
    /// Deep copy whose tensors are fresh autograd leaves.
    ParamSet leaves() const;
    /// Entries whose name starts with `prefix` (tensors shared, not copied).
    ParamSet subset(const std::string& prefix) const;
    /// Copies every entry of `other` into this set, overwriting.
    void merge(const ParamSet& other);
    /// Renames every entry by prepending `prefix`.
    ParamSet prefixed(const std::string& prefix) const;
    /// Removes `prefix` from the names that have it; other entries are dropped.
    ParamSet stripped(const std::string& prefix) const;

    ParamSet zeros_like() const;

private:
    Map map_;
};

/// Same names, shapes, dtypes and bit patterns (optionally restricted to a prefix).
bool bitwise_equal(const ParamSet& a, const ParamSet& b, const std::string& prefix = "");

/// Largest absolute elementwise difference over shared names.
double max_abs_diff(const ParamSet& a, const ParamSet& b);

/// Square root of the summed squared entries.
double global_norm(const ParamSet& p);

}  // namespace fwseg
