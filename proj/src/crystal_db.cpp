#include "ipm/crystal_db.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ipm/angles.hpp"
#include "ipm/errors.hpp"

namespace ipm {
namespace {

using nlohmann::json;

SellmeierCoeffs<double> parse_coeffs(const json& j, const std::string& where) {
  for (const char* key : {"A", "B", "C", "D"})
    if (!j.contains(key))
      throw CrystalDbError(where + ": missing Sellmeier coefficient " + key);
  return {j.at("A").get<double>(), j.at("B").get<double>(),
          j.at("C").get<double>(), j.at("D").get<double>()};
}

void validate(const CrystalDefd& c, const std::string& where) {
  if (!(c.transparency_min_nm < c.transparency_max_nm))
    throw CrystalDbError(where + ": transparency range [" +
                         std::to_string(c.transparency_min_nm) + ", " +
                         std::to_string(c.transparency_max_nm) +
                         "] nm is not increasing");
  // sample the transparency range: indices real, > 1, and negative uniaxial
  constexpr int kGrid = 100;
  for (int i = 0; i < kGrid; ++i) {
    const double lam = c.transparency_min_nm +
                       (c.transparency_max_nm - c.transparency_min_nm) *
                           (i + 0.5) / kGrid;
    const double no2 = c.sellmeier_o.n_squared(lam * 1e-3);
    const double ne2 = c.sellmeier_e.n_squared(lam * 1e-3);
    if (!(no2 > 1.0) || !(ne2 > 1.0) || !std::isfinite(no2) || !std::isfinite(ne2)) {
      std::ostringstream os;
      os << where << ": index not real and > 1 at " << lam << " nm";
      throw CrystalDbError(os.str());
    }
    if (!(no2 > ne2)) {
      std::ostringstream os;
      os << where << ": n_e >= n_o at " << lam
         << " nm (crystal must be negative uniaxial)";
      throw CrystalDbError(os.str());
    }
  }
}

}  // namespace

std::map<std::string, CrystalDefd> parse_crystal_db(const std::string& json_text,
                                                    const std::string& origin) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CrystalDbError(origin + ": " + e.what());
  }
  if (!root.is_array())
    throw CrystalDbError(origin + ": top level must be a list of crystal records");

  std::map<std::string, CrystalDefd> db;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& rec = root[i];
    std::string where = origin + ", record #" + std::to_string(i);
    try {
      CrystalDefd c;
      c.name = rec.at("name").get<std::string>();
      where = origin + ", record \"" + c.name + "\"";
      c.sellmeier_o = parse_coeffs(rec.at("sellmeier_o"), where + " (ordinary)");
      c.sellmeier_e = parse_coeffs(rec.at("sellmeier_e"), where + " (extraordinary)");
      c.cut_angle = deg_to_rad(rec.at("cut_angle_deg").get<double>());
      const auto& tr = rec.at("transparency_nm");
      if (!tr.is_array() || tr.size() != 2)
        throw CrystalDbError(where + ": transparency_nm must be [min, max]");
      c.transparency_min_nm = tr[0].get<double>();
      c.transparency_max_nm = tr[1].get<double>();
      c.source = rec.value("source", std::string{});
      validate(c, where);
      db.emplace(c.name, std::move(c));
    } catch (const json::exception& e) {
      throw CrystalDbError(where + ": " + e.what());
    }
  }
  return db;
}

std::map<std::string, CrystalDefd> load_crystal_db(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CrystalDbError("cannot open crystal database " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_crystal_db(buf.str(), path);
}

}  // namespace ipm
