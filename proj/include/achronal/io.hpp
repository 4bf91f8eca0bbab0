#pragma once

// "ACHR" binary containers, little-endian throughout.
//
//   packet: "ACHR" u32 version, f64 mass, 3 × (u32 N, f64 P),
//           N³ × (f64 re, f64 im) row-major with axis 1 slowest
//   slice:  "ACHR" u32 version, u32 layout = 1, f64 x₀, 3 × u32 dims,
//           f64 spacing, 3 × f64 origin, nodes × 4 f64 (J₀..J₃ per node)
//   scalar: "ACHR" u32 version, u32 layout = 2, 3 × u32 dims,
//           f64 spacing, 3 × f64 origin, nodes × f64
//
// Loaders check magic, version, layout and the exact file size.

#include "achronal/currents.hpp"
#include "achronal/wavepacket.hpp"

#include <filesystem>
#include <vector>

namespace achronal {

inline constexpr std::uint32_t achr_version = 1;

void save_packet(const std::filesystem::path& path, const WavePacket& phi);
WavePacket load_packet(const std::filesystem::path& path);

void save_slice(const std::filesystem::path& path, const Slice& s);
Slice load_slice(const std::filesystem::path& path);

struct ScalarField {
    SpatialGrid grid;
    std::vector<double> values;
};

void save_scalar(const std::filesystem::path& path, const ScalarField& f);
ScalarField load_scalar(const std::filesystem::path& path);

}  // namespace achronal
