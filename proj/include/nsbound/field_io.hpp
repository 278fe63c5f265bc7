#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "nsbound/approximants.hpp"
#include "nsbound/spectral_field.hpp"

namespace nsbound {

/// {dim, modes: [{k: [...], re: [...], im: [...]}]}, canonical modes only.
nlohmann::json field_to_json(const SpectralField& v);

/// Parses the layout above. Non-canonical modes are folded onto their
/// canonical partner by conjugation; `dim`, when given, must match the
/// object's "dim" (and is used when the key is absent). Throws ConfigError.
SpectralField field_from_json(const nlohmann::json& j, std::optional<int> dim = {});

void write_field(const std::filesystem::path& path, const SpectralField& v);
SpectralField read_field(const std::filesystem::path& path, std::optional<int> dim = {});

/// trace.json header {d, M, nu, provenance, T_a, samples: [{t, ua, dua}]}
/// plus one field file per sample.
void write_trace(const std::filesystem::path& dir, const ApproximantTrace& trace, double nu);

}  // namespace nsbound
