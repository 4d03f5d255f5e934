#include "mglue/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mglue {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt17(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) throw IoError("CSV row width does not match the header");
  rows_.push_back(cells);
  return *this;
}

CsvTable& CsvTable::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(fmt17(v));
  return row(cells);
}

namespace {
std::string quoted(const std::string& c) {
  if (c.find_first_of(",\"\r\n") == std::string::npos) return c;
  std::string out = "\"";
  for (char ch : c) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void join(std::ostringstream& os, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << quoted(cells[i]);
  os << "\r\n";
}
}  // namespace

std::string CsvTable::str() const {
  std::ostringstream os;
  join(os, header_);
  for (const auto& r : rows_) join(os, r);
  return os.str();
}

std::string path_csv(const DiscretePath& p) {
  std::vector<std::string> h{"s"};
  for (int i = 1; i <= p.dim(); ++i) h.push_back("x" + std::to_string(i));
  CsvTable t(h);
  for (int j = 0; j < p.grid().size(); ++j) {
    std::vector<double> r{p.grid().node(j)};
    for (int i = 0; i < p.dim(); ++i) r.push_back(p.samples()(i, j));
    t.row(r);
  }
  return t.str();
}

DiscretePath parse_path_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty path CSV");
  int dim = 0;
  for (char c : line)
    if (c == ',') ++dim;
  std::vector<double> s;
  std::vector<std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      double v;
      auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc()) throw IoError("bad number '" + cell + "' in path CSV");
      vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != dim + 1) throw IoError("ragged path CSV");
    s.push_back(vals[0]);
    cols.emplace_back(vals.begin() + 1, vals.end());
  }
  if (s.size() < 2) throw IoError("path CSV has fewer than two rows");
  Grid g(s.front(), s.back(), static_cast<int>(s.size()));
  Eigen::MatrixXd m(dim, s.size());
  for (size_t j = 0; j < s.size(); ++j)
    for (int i = 0; i < dim; ++i) m(i, j) = cols[j][i];
  return DiscretePath(g, m);
}

namespace {
nlohmann::json vec(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}
}  // namespace

nlohmann::json to_json(const NPResult& r) {
  return {{"iterations", r.iterations},
          {"residual_initial", r.residual_initial},
          {"residual_final", r.residual_final},
          {"correction_norm", r.correction_norm},
          {"bound_2c_f", r.bound_2c_f},
          {"contraction_ratio_max", r.contraction_ratio_max},
          {"in_image_Q_defect", r.in_image_Q_defect},
          {"preconditions_met", r.preconditions_met}};
}

nlohmann::json to_json(const GlueReport& r) {
  return {{"T", r.T},
          {"x0", vec(r.x0_seed)},
          {"y0", vec(r.y0_seed)},
          {"preglue_residual", r.preglue_residual},
          {"preglue_w12", r.preglue_norm},
          {"newton_picard", to_json(r.np)},
          {"ev_error", r.ev_error},
          {"flow_residual_sup", r.flow_residual_sup},
          {"boundary_defect", r.boundary_defect},
          {"bounds",
           {{"correction <= 2c|F(w_T)|", {{"measured", r.np.correction_norm}, {"bound", r.bound_2cF}}},
            {"|F(w_T)| < delta/(4c)", {{"measured", r.preglue_residual}, {"bound", r.bound_residual}}},
            {"|w_T| < delta/8", {{"measured", r.preglue_norm}, {"bound", r.bound_distance}}},
            {"T >= T0", {{"measured", r.T}, {"bound", r.T0}}}}},
          {"preconditions_met", r.preconditions_met},
          {"precondition_note", r.precondition_note}};
}

nlohmann::json to_json(const DecayFit& f) {
  return {{"rate", f.rate}, {"prefactor", f.prefactor}, {"r2", f.r2},
          {"s_lo", f.s_lo}, {"s_hi", f.s_hi}, {"samples", f.samples}};
}

nlohmann::json trajectory_sidecar(const HalfTrajectory& w, const DecayFit& fit) {
  return {{"side", to_string(w.side)}, {"S", w.S},         {"residual", w.residual},
          {"x0_or_y0", vec(w.seed)},   {"decay_rate", fit.rate}, {"r2", fit.r2}};
}

std::string sweep_csv(const SweepTable& t) {
  CsvTable c({"T", "preglue_resid", "np_iters", "corr_norm", "bound_2cF", "ev_error", "ev_bound"});
  for (const auto& r : t.rows)
    c.row(std::vector<double>{r.T, r.preglue_resid, static_cast<double>(r.np_iters), r.corr_norm, r.bound_2cF,
                              r.ev_error, r.ev_bound});
  return c.str();
}

}  // namespace mglue
