#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "kpa/corpus.hpp"

namespace kpa_test {

inline const std::filesystem::path kSourceDir = KPA_SOURCE_DIR;
inline const std::filesystem::path kSynthetic = kSourceDir / "data" / "synthetic";

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(std::string_view name) {
    auto dir = std::filesystem::temp_directory_path() / ("kpa_test_" + std::string(name));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void put(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline kpa::LabeledPair pair(std::string arg, std::string kp, kpa::GoldLabel label,
                             std::string topic = "t", kpa::Stance stance = kpa::Stance::Pro) {
    kpa::LabeledPair p;
    p.argument_id = std::move(arg);
    p.keypoint_id = std::move(kp);
    p.topic = std::move(topic);
    p.stance = stance;
    p.label = label;
    return p;
}

}  // namespace kpa_test
