#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cloudseg {

struct WeightEntry {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> values;

    std::int64_t numel() const;
};

// Ordered collection of named float arrays. On disk: a directory holding
// manifest.json (array of {name, shape, offset}, offsets in bytes, packed
// contiguously) and weights.bin (raw little-endian float32 in manifest order).
class WeightStore {
public:
    void add(std::string name, std::vector<std::int64_t> shape, std::vector<float> values);
    bool contains(const std::string& name) const { return index_.contains(name); }
    const WeightEntry& get(const std::string& name) const;
    const std::vector<WeightEntry>& entries() const { return entries_; }
    std::int64_t total_floats() const;

private:
    std::vector<WeightEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

WeightStore load_weight_store(const std::filesystem::path& dir);
void save_weight_store(const std::filesystem::path& dir, const WeightStore& store);

} // namespace cloudseg
