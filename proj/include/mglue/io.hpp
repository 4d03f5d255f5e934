#pragma once

#include "mglue/gluing.hpp"
#include "mglue/invariant_manifolds.hpp"
#include "mglue/newton_picard.hpp"
#include "mglue/path_space.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mglue {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// 17 significant digits, '.' separator, independent of the locale.
std::string fmt17(double v);

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<std::string>& cells);
  CsvTable& row(const std::vector<double>& values);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// `s,x1,...,xn`, one row per node.
std::string path_csv(const DiscretePath& p);
DiscretePath parse_path_csv(const std::string& text);

nlohmann::json to_json(const NPResult& r);
nlohmann::json to_json(const GlueReport& r);
nlohmann::json to_json(const DecayFit& f);
nlohmann::json trajectory_sidecar(const HalfTrajectory& w, const DecayFit& fit);

std::string sweep_csv(const SweepTable& t);

}  // namespace mglue
