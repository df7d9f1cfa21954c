#include "nvdyn/rate_model.hpp"
#include "nvdyn/text_io.hpp"

#include <array>
#include <set>

namespace nvdyn {

namespace {

enum class Unit { Lifetime, Plain, MhzPerMw };

struct FieldSpec {
  const char* key;
  double ModelParameters::*field;
  Unit unit;
};

// File order matches the reference parameter listing.
constexpr std::array<FieldSpec, 23> kFields{{
    {"lifetime_2_1_ns", &ModelParameters::gamma_21, Unit::Lifetime},
    {"lifetime_2_7_ns", &ModelParameters::gamma_27, Unit::Lifetime},
    {"lifetime_4_3_ns", &ModelParameters::gamma_43, Unit::Lifetime},
    {"lifetime_4_7_ns", &ModelParameters::gamma_47, Unit::Lifetime},
    {"lifetime_6_5_ns", &ModelParameters::gamma_65, Unit::Lifetime},
    {"lifetime_7_1_ns", &ModelParameters::gamma_71, Unit::Lifetime},
    {"lifetime_7_3_ns", &ModelParameters::gamma_73, Unit::Lifetime},
    {"lifetime_8_ns", &ModelParameters::gamma_8_total, Unit::Lifetime},
    {"sigma_1_2", &ModelParameters::sigma_12, Unit::Plain},
    {"sigma_3_4", &ModelParameters::sigma_34, Unit::Plain},
    {"sigma_2_5", &ModelParameters::sigma_25, Unit::Plain},
    {"sigma_4_5", &ModelParameters::sigma_45, Unit::Plain},
    {"sigma_7_8", &ModelParameters::sigma_78, Unit::Plain},
    {"sigma_5_6", &ModelParameters::sigma_56, Unit::Plain},
    {"sigma_6_7", &ModelParameters::sigma_67, Unit::Plain},
    {"sigma_6_1", &ModelParameters::sigma_61, Unit::Plain},
    {"sigma_6_3", &ModelParameters::sigma_63, Unit::Plain},
    {"ratio_8_4_over_8_2", &ModelParameters::l8_ratio_42, Unit::Plain},
    {"ratio_8_5_over_8_2", &ModelParameters::l8_ratio_52, Unit::Plain},
    {"kappa_readout_mhz_per_mw", &ModelParameters::kappa_readout, Unit::MhzPerMw},
    {"kappa_init_mhz_per_mw", &ModelParameters::kappa_init, Unit::MhzPerMw},
    {"spectral_selectivity_nv0", &ModelParameters::beta, Unit::Plain},
    // Convenience alias: setting both sigma_2_5 and sigma_4_5 at once.
    {"sigma_2_5_and_4_5", &ModelParameters::sigma_25, Unit::Plain},
}};

double to_internal(double file_value, Unit unit) {
  switch (unit) {
  case Unit::Lifetime: return 1.0 / file_value;
  case Unit::MhzPerMw: return file_value * 1e-3;
  case Unit::Plain: return file_value;
  }
  return file_value;
}

double to_file(double internal, Unit unit) {
  switch (unit) {
  case Unit::Lifetime: return 1.0 / internal;
  case Unit::MhzPerMw: return internal * 1e3;
  case Unit::Plain: return internal;
  }
  return internal;
}

const FieldSpec* find_field(std::string_view key) {
  for (const auto& f : kFields)
    if (key == f.key) return &f;
  return nullptr;
}

void assign(ModelParameters& p, const FieldSpec& spec, double v, const std::string& where) {
  if (spec.unit == Unit::Lifetime && !(v > 0.0)) throw ValidationError(where + ": lifetime must be > 0");
  p.*(spec.field) = to_internal(v, spec.unit);
  if (std::string_view(spec.key) == "sigma_2_5_and_4_5") p.sigma_45 = p.sigma_25;
}

} // namespace

void set_parameter(ModelParameters& params, std::string_view key, double file_value) {
  const FieldSpec* spec = find_field(key);
  if (!spec) throw ValidationError("unknown parameter '" + std::string(key) + "'");
  assign(params, *spec, file_value, std::string(key));
  params.validate();
}

ModelParameters parse_parameters(std::string_view text, const std::string& source) {
  ModelParameters p = ModelParameters::reference();
  p.uncertainties.clear();
  std::set<std::string> seen;
  for (const auto& kv : text::parse_key_values(text, source)) {
    const std::string where = source + ":" + std::to_string(kv.line);
    const FieldSpec* spec = find_field(kv.key);
    if (!spec) throw ValidationError(where + ": unknown parameter '" + kv.key + "'");
    if (!seen.insert(kv.key).second) throw ValidationError(where + ": duplicate parameter '" + kv.key + "'");
    assign(p, *spec, text::parse_double(kv.value, where), where);
    if (kv.uncertainty) p.uncertainties[kv.key] = text::parse_double(*kv.uncertainty, where);
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return p;
}

ModelParameters load_parameters(const std::string& path) {
  return parse_parameters(text::read_file(path), path);
}

std::string format_parameters(const ModelParameters& params) {
  std::string out = "# eight-level NV model parameters (lifetimes in ns, kappa in MHz/mW)\n";
  for (const auto& f : kFields) {
    if (std::string_view(f.key) == "sigma_2_5_and_4_5") continue;
    out += f.key;
    out += " = ";
    out += text::format_double(to_file(params.*(f.field), f.unit));
    if (auto it = params.uncertainties.find(f.key); it != params.uncertainties.end()) {
      out += " +- ";
      out += text::format_double(it->second);
    }
    out += '\n';
  }
  return out;
}

} // namespace nvdyn
