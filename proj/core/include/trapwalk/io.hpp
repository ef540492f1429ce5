#pragma once

#include <filesystem>
#include <iosfwd>

#include "trapwalk/islands.hpp"
#include "trapwalk/lattice.hpp"
#include "trapwalk/survival.hpp"

namespace trapwalk {

// Environment container, magic "TWK1", version 1, little-endian:
//   magic[4]  u16 version  u8 d  i32 half_width[d]  f64 p  u64 seed
//   u8 boundary_rule  mask bytes (row-major site order, LSB first)
// The on-disk origin is implicitly 0; writing a shifted box is refused.
void save_environment(const Environment& env, const std::filesystem::path& file);
Environment load_environment(const std::filesystem::path& file);
void write_environment(const Environment& env, std::ostream& out);
Environment read_environment(std::istream& in);

// Scalar field: raw little-endian f64 payload plus a JSON sidecar
// (<file>.json) carrying d, half widths, level count, log-domain flag and a
// CRC-32 of the payload.
void save_field_level(const ScalarField& field, const std::filesystem::path& file);
ScalarField load_field_level(const std::filesystem::path& file);

// Site set, magic "TWKS", version 1: u8 d, u64 count, i32 coords, CRC-32 of
// everything after the magic.
void save_site_set(const SiteSet& set, const std::filesystem::path& file);
SiteSet load_site_set(const std::filesystem::path& file);

// Island hierarchy as JSON: parameters, quantiles, level sets, the lambda
// values with their evaluated mask, and the selection. Site sets are inline
// coordinate arrays; doubles round-trip exactly.
void save_hierarchy(const IslandHierarchy& hier, const std::filesystem::path& file);
IslandHierarchy load_hierarchy(const std::filesystem::path& file);

std::uint32_t crc32(const void* data, std::size_t size, std::uint32_t seed = 0);

}  // namespace trapwalk
