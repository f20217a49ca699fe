#pragma once

#include <map>
#include <string>

#include "ipm/dispersion.hpp"

namespace ipm {

/// Load a crystal database from a JSON file: a top-level list of records
/// {name, sellmeier_o:{A,B,C,D}, sellmeier_e:{A,B,C,D}, cut_angle_deg,
/// transparency_nm:[min,max], source}. Angles in the file are degrees.
/// Every record is validated (transparency ordering, n_o > n_e > 1 on a
/// 100-point grid); a violation fails the whole load with the offending
/// record named in the CrystalDbError message.
std::map<std::string, CrystalDefd> load_crystal_db(const std::string& path);

/// Same, parsing from an in-memory JSON string (" <file> " used in messages).
std::map<std::string, CrystalDefd> parse_crystal_db(const std::string& json_text,
                                                    const std::string& origin);

}  // namespace ipm
