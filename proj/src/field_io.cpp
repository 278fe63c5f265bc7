#include "nsbound/field_io.hpp"

#include <cstdio>
#include <fstream>

#include "nsbound/errors.hpp"

namespace nsbound {

using json = nlohmann::json;

json field_to_json(const SpectralField& v) {
  json modes = json::array();
  const auto d = static_cast<std::size_t>(v.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    json k = json::array();
    json re = json::array();
    json im = json::array();
    for (std::size_t c = 0; c < d; ++c) {
      k.push_back(v.modes()[i][static_cast<int>(c)]);
      re.push_back(v.coeff(i)[c].real());
      im.push_back(v.coeff(i)[c].imag());
    }
    modes.push_back({{"k", k}, {"re", re}, {"im", im}});
  }
  return {{"dim", v.dim()}, {"modes", modes}};
}

SpectralField field_from_json(const json& j, std::optional<int> dim) {
  try {
    int d = dim.value_or(0);
    if (j.contains("dim")) {
      const int jd = j.at("dim").get<int>();
      if (dim && jd != *dim) throw ConfigError("field dimension " + std::to_string(jd) + " does not match " + std::to_string(*dim));
      d = jd;
    }
    if (d < 2 || d > kMaxDim) throw ConfigError("field dimension missing or out of range");
    std::map<WaveVector, std::vector<Complex>> modes;
    for (const auto& m : j.at("modes")) {
      const auto& ka = m.at("k");
      if (ka.size() != static_cast<std::size_t>(d)) throw ConfigError("mode has the wrong number of components");
      WaveVector k(d);
      for (int i = 0; i < d; ++i) k[i] = ka.at(static_cast<std::size_t>(i)).get<int>();
      if (k.is_zero()) throw ConfigError("the zero mode is not allowed (fields are mean-zero)");
      const auto& re = m.at("re");
      const json im = m.contains("im") ? m.at("im") : json::array();
      if (re.size() != static_cast<std::size_t>(d) || (!im.empty() && im.size() != re.size())) {
        throw ConfigError("mode coefficient has the wrong number of components");
      }
      std::vector<Complex> c(static_cast<std::size_t>(d));
      for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = Complex(re.at(i).get<double>(), im.empty() ? 0.0 : im.at(i).get<double>());
      }
      if (!k.is_canonical()) {
        k = -k;
        for (auto& z : c) z = std::conj(z);
      }
      if (!modes.emplace(k, std::move(c)).second) {
        throw ConfigError("mode " + k.to_string() + " is given twice (directly or via its conjugate)");
      }
    }
    std::vector<WaveVector> ks;
    std::vector<Complex> cs;
    for (auto& [k, c] : modes) {
      ks.push_back(k);
      cs.insert(cs.end(), c.begin(), c.end());
    }
    try {
      return SpectralField::from_canonical(d, std::move(ks), std::move(cs));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid field: ") + e.what());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed field JSON: ") + e.what());
  }
}

void write_field(const std::filesystem::path& path, const SpectralField& v) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << field_to_json(v).dump() << '\n';
}

SpectralField read_field(const std::filesystem::path& path, std::optional<int> dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read field file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed field file " + path.string() + ": " + e.what());
  }
  return field_from_json(j, dim);
}

void write_trace(const std::filesystem::path& dir, const ApproximantTrace& trace, double nu) {
  std::filesystem::create_directories(dir);
  json samples = json::array();
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    char ua[32];
    char dua[32];
    std::snprintf(ua, sizeof ua, "ua_%05zu.json", i);
    std::snprintf(dua, sizeof dua, "dua_%05zu.json", i);
    write_field(dir / ua, trace.ua[i]);
    write_field(dir / dua, trace.dua[i]);
    samples.push_back({{"t", trace.t[i]}, {"ua", ua}, {"dua", dua}});
  }
  const json header = {{"d", trace.dim},          {"M", trace.resolution},
                       {"nu", nu},                {"provenance", to_string(trace.provenance)},
                       {"T_a", trace.T_a},        {"ended_early", trace.ended_early},
                       {"samples", samples}};
  std::ofstream out(dir / "trace.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "trace.json").string());
  out << header.dump(2) << '\n';
}

}  // namespace nsbound
