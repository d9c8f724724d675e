#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "drugrec/random.hpp"
#include "drugrec/recommender.hpp"
#include "drugrec/synthetic.hpp"

namespace testing {

// Desk-scale planted benchmark: 500 users, 50 drugs, 3 user clusters. Also
// shipped as configs/synthetic_benchmark.json for the command-line tool.
inline drugrec::rec::PipelineConfig benchmark_pipeline(std::uint64_t seed) {
    drugrec::rec::PipelineConfig c;
    c.seed = seed;
    c.training.learning_rate = 0.3;
    c.training.epochs = 2000;
    return c;
}

inline drugrec::synthetic::SyntheticConfig benchmark_data() { return {}; }

inline drugrec::synthetic::SyntheticData benchmark_bundle(std::uint64_t seed) {
    return drugrec::synthetic::generate_synthetic_with_truth(
        benchmark_data(), drugrec::derive_seed(seed, "synthetic"));
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("drugrec_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
