#pragma once

// Experiment configuration: JSON descriptors for packets, kernels, surfaces,
// masks and group elements. Unknown keys are rejected (config error).

#include "achronal/causal_logic.hpp"
#include "achronal/localization.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace achronal {

using json = nlohmann::ordered_json;

inline constexpr const char* artifact_version = "0.1.0";

struct GridConfig {
    int N = 48;
    double P = 4.0;
};

struct PacketConfig {
    PacketParams params;
    std::string file;   // ACHR packet instead of params when non-empty
    bool zero = false;
};

struct GroupConfig {
    FourVector translation;
    Vec3 boost_axis = Vec3::UnitZ();
    double rapidity = 0.0;
    Vec3 rotation_axis = Vec3::UnitZ();
    double angle = 0.0;

    /// translation ∘ boost ∘ rotation
    PoincareElement element() const;
    bool translation_only() const { return rapidity == 0.0 && angle == 0.0; }
};

struct Tolerances {
    double normalize = 1e-2;
    double invariance = 2e-2;
    double covariance = 3e-2;
    double translation = 1e-3;
    double kernel_pd = 1e-10;
    double logic = 2e-2;
    double oracle = 1e-6;

    Tolerances scaled(double s) const;
};

struct LogicConfig {
    double t0 = 0.0;
    Vec3 center = Vec3::Zero();
    double radius = 2.0;
    std::size_t samples = 10000;
    std::size_t rcl_samples = 2000;
    std::vector<double> cone_gammas{0.5};
};

struct ExperimentConfig {
    double mass = 1.0;
    GridConfig grid;
    std::optional<GridConfig> refine_grid;  // normalization refinement run
    PacketConfig packet;
    std::string kernel = "basic:r=1.5";
    std::vector<json> surfaces;  // descriptors, resolved on demand
    std::vector<json> regions;   // {"surface": ..., "mask": ...}
    std::vector<GroupConfig> group;
    std::vector<double> gamma_sweep{0.25, 0.5, 0.75, 1.0};
    Tolerances tolerances;
    std::string backend = "fast";
    double fast_tolerance = 1e-8;
    std::uint64_t seed = 1;
    std::string output = "out";
    LocalizationOptions localization;
    int kernel_pd_points = 200;
    double kernel_pd_radius = 3.0;
    LogicConfig logic;
    std::vector<double> dump_times{0.0, 1.0};
    int dump_points = 20;
    std::filesystem::path base_dir;  // relative file paths resolve against it
};

/// Defaults for every missing key; throws config on unknown keys or bad types.
ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration (every field present).
json to_json(const ExperimentConfig& c);

/// FNV-1a 64 over the compact dump of the resolved configuration, output
/// directory excluded.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hex(std::uint64_t v);

AchronalSurface surface_from_json(const json& j, const std::filesystem::path& base_dir = {});
Mask mask_from_json(const json& j);
Region region_from_json(const json& j, const std::filesystem::path& base_dir = {});
GroupConfig group_from_json(const json& j);
json to_json(const GroupConfig& g);

WavePacket build_packet(const ExperimentConfig& c, const GridConfig& grid);
WavePacket build_packet(const ExperimentConfig& c);
KernelSpec build_kernel(const ExperimentConfig& c);

}  // namespace achronal
