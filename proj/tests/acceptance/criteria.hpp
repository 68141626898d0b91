#pragma once

#include <filesystem>
#include <string>

namespace mvbu::acceptance {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::string warning; // printed on its own line; never affects pass
};

Outcome check_autodiff();
Outcome check_probability();
Outcome check_integrator();
Outcome check_hysteresis();
Outcome check_samplers();
Outcome check_features();
Outcome check_sdof_recovery(const std::filesystem::path& work);
Outcome check_frame_recovery(const std::filesystem::path& work);
Outcome check_speedup(const std::filesystem::path& work);
Outcome check_lumped_pattern(const std::filesystem::path& work);

} // namespace mvbu::acceptance
