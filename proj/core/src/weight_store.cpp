#include "cloudseg/weight_store.hpp"

#include "cloudseg/errors.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace cloudseg {

std::int64_t WeightEntry::numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

void WeightStore::add(std::string name, std::vector<std::int64_t> shape, std::vector<float> values) {
    if (name.empty()) {
        throw std::invalid_argument("weight store: empty entry name");
    }
    if (index_.contains(name)) {
        throw std::invalid_argument("weight store: duplicate entry '" + name + "'");
    }
    WeightEntry entry{std::move(name), std::move(shape), std::move(values)};
    for (const std::int64_t d : entry.shape) {
        if (d < 1) {
            throw std::invalid_argument("weight store: entry '" + entry.name + "' has non-positive dim");
        }
    }
    if (entry.numel() != static_cast<std::int64_t>(entry.values.size())) {
        throw std::invalid_argument("weight store: entry '" + entry.name + "' has " +
                                    std::to_string(entry.values.size()) + " values but shape wants " +
                                    std::to_string(entry.numel()));
    }
    index_.emplace(entry.name, entries_.size());
    entries_.push_back(std::move(entry));
}

const WeightEntry& WeightStore::get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw std::invalid_argument("weight store: missing entry '" + name + "'");
    }
    return entries_[it->second];
}

std::int64_t WeightStore::total_floats() const {
    std::int64_t total = 0;
    for (const auto& e : entries_) {
        total += e.numel();
    }
    return total;
}

WeightStore load_weight_store(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) {
        throw io_error("cannot open " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("bad manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.is_array()) {
        throw io_error("bad manifest " + manifest_path.string() + ": top level must be an array");
    }

    const auto bin_path = dir / "weights.bin";
    std::ifstream bf(bin_path, std::ios::binary);
    if (!bf) {
        throw io_error("cannot open " + bin_path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

    WeightStore store;
    std::int64_t expect_offset = 0;
    for (const auto& item : manifest) {
        if (!item.contains("name") || !item.contains("shape") || !item.contains("offset")) {
            throw io_error("manifest entry missing name/shape/offset in " + manifest_path.string());
        }
        const auto name = item["name"].get<std::string>();
        const auto shape = item["shape"].get<std::vector<std::int64_t>>();
        const auto offset = item["offset"].get<std::int64_t>();
        if (offset != expect_offset) {
            throw io_error("manifest entry '" + name + "' at offset " + std::to_string(offset) +
                           ", expected contiguous " + std::to_string(expect_offset));
        }
        const std::int64_t count =
            std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
        const auto bytes = count * static_cast<std::int64_t>(sizeof(float));
        if (offset + bytes > static_cast<std::int64_t>(raw.size())) {
            throw io_error("weights.bin too short for entry '" + name + "' in " + bin_path.string());
        }
        std::vector<float> values(static_cast<std::size_t>(count));
        std::memcpy(values.data(), raw.data() + offset, static_cast<std::size_t>(bytes));
        store.add(name, shape, std::move(values));
        expect_offset = offset + bytes;
    }
    if (expect_offset != static_cast<std::int64_t>(raw.size())) {
        throw io_error("weights.bin has " + std::to_string(raw.size()) + " bytes, manifest covers " +
                       std::to_string(expect_offset));
    }
    return store;
}

void save_weight_store(const std::filesystem::path& dir, const WeightStore& store) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& e : store.entries()) {
        manifest.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", offset}});
        offset += e.numel() * static_cast<std::int64_t>(sizeof(float));
    }

    const auto manifest_path = dir / "manifest.json";
    std::ofstream mf(manifest_path);
    if (!mf) {
        throw io_error("cannot write " + manifest_path.string());
    }
    mf << manifest.dump(2) << "\n";
    if (!mf) {
        throw io_error("failed writing " + manifest_path.string());
    }

    const auto bin_path = dir / "weights.bin";
    std::ofstream bf(bin_path, std::ios::binary);
    if (!bf) {
        throw io_error("cannot write " + bin_path.string());
    }
    for (const auto& e : store.entries()) {
        bf.write(reinterpret_cast<const char*>(e.values.data()),
                 static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    }
    if (!bf) {
        throw io_error("failed writing " + bin_path.string());
    }
}

} // namespace cloudseg
