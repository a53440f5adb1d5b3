#include "radloc/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "radloc/errors.hpp"

namespace radloc::io {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> SplitFields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    out.emplace_back(Trim(field));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int ParseInt(std::string_view field, const std::string& source, std::size_t line) {
  int v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError(source, line, "expected an integer, got '" + std::string(field) + "'");
  return v;
}

struct Columns {
  const CsvTable& table;
  std::vector<std::size_t> idx;

  Columns(const CsvTable& t, std::initializer_list<std::string_view> names) : table(t) {
    for (auto n : names) idx.push_back(t.column(n));
  }
  double num(const CsvRow& row, std::size_t k) const {
    return parse_double(row.fields[idx[k]], table.source, row.line);
  }
  const std::string& str(const CsvRow& row, std::size_t k) const { return row.fields[idx[k]]; }
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  field = Trim(field);
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError(source, line, "expected a number, got '" + std::string(field) + "'");
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(source, 1, "missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = Trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = SplitFields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError(source, line_no,
                       "expected " + std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    table.rows.push_back({line_no, std::move(fields)});
  }
  if (!have_header) throw ParseError(source, std::max<std::size_t>(line_no, 1), "missing header line");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

EventFileKind detect_event_kind(const CsvTable& table) {
  const auto has = [&](std::string_view n) {
    return std::find(table.header.begin(), table.header.end(), n) != table.header.end();
  };
  if (has("electron_kev") && has("photon_kev")) return EventFileKind::Pairs;
  if (has("toa_ns") && has("energy_kev")) return EventFileKind::Hits;
  throw ParseError(table.source, 1, "unrecognized event header");
}

std::vector<events::PixelHit> hits_from_table(const CsvTable& table) {
  const Columns c(table, {"toa_ns", "col", "row", "energy_kev"});
  std::vector<events::PixelHit> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    events::PixelHit h;
    h.toa_ns = c.num(row, 0);
    h.col = ParseInt(c.str(row, 1), table.source, row.line);
    h.row = ParseInt(c.str(row, 2), table.source, row.line);
    h.energy_kev = c.num(row, 3);
    try {
      events::validate_hit(h);
    } catch (const InvalidInput& e) {
      throw ParseError(table.source, row.line, e.what());
    }
    out.push_back(h);
  }
  return out;
}

std::vector<events::ComptonPair> pairs_from_table(const CsvTable& table) {
  const Columns c(table, {"electron_x_mm", "electron_y_mm", "electron_kev", "electron_toa_ns",
                          "photon_x_mm", "photon_y_mm", "photon_kev", "photon_toa_ns"});
  std::vector<events::ComptonPair> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    events::ComptonPair p;
    p.electron_x_mm = c.num(row, 0);
    p.electron_y_mm = c.num(row, 1);
    p.electron_energy_kev = c.num(row, 2);
    p.electron_toa_ns = c.num(row, 3);
    p.photon_x_mm = c.num(row, 4);
    p.photon_y_mm = c.num(row, 5);
    p.photon_energy_kev = c.num(row, 6);
    p.photon_toa_ns = c.num(row, 7);
    out.push_back(p);
  }
  return out;
}

std::vector<Pose> poses_from_table(const CsvTable& table) {
  const Columns c(table, {"t_s", "px", "py", "pz", "qw", "qx", "qy", "qz"});
  std::vector<Pose> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const double t = c.num(row, 0);
    const Vec3 p(c.num(row, 1), c.num(row, 2), c.num(row, 3));
    const Eigen::Quaterniond q(c.num(row, 4), c.num(row, 5), c.num(row, 6), c.num(row, 7));
    if (!out.empty() && !(t > out.back().timestamp))
      throw OrderingError(table.source + ":" + std::to_string(row.line) +
                          ": pose timestamps must be strictly increasing");
    try {
      out.emplace_back(t, p, q);
    } catch (const InvalidInput& e) {
      throw ParseError(table.source, row.line, e.what());
    }
  }
  return out;
}

std::vector<Cone> cones_from_table(const CsvTable& table) {
  const Columns c(table, {"t_s", "ox", "oy", "oz", "dx", "dy", "dz", "theta_rad", "frame"});
  std::vector<Cone> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string& f = c.str(row, 8);
    if (f != "C" && f != "W") throw ParseError(table.source, row.line, "frame must be C or W");
    try {
      out.emplace_back(Vec3(c.num(row, 1), c.num(row, 2), c.num(row, 3)),
                       Vec3(c.num(row, 4), c.num(row, 5), c.num(row, 6)), c.num(row, 7),
                       f == "C" ? Frame::Camera : Frame::World, c.num(row, 0));
    } catch (const InvalidInput& e) {
      throw ParseError(table.source, row.line, e.what());
    }
  }
  return out;
}

std::string cones_to_csv(const std::vector<Cone>& cones) {
  std::string s = "t_s,ox,oy,oz,dx,dy,dz,theta_rad,frame\n";
  for (const auto& c : cones) {
    s += format_double(c.timestamp);
    for (int k = 0; k < 3; ++k) s += "," + format_double(c.origin(k));
    for (int k = 0; k < 3; ++k) s += "," + format_double(c.axis(k));
    s += "," + format_double(c.half_angle);
    s += c.frame == Frame::World ? ",W\n" : ",C\n";
  }
  return s;
}

std::string estimates_to_csv(const std::vector<EstimateRow>& rows) {
  std::string s = "t_s,x,y,z,cov_xx,cov_xy,cov_xz,cov_yy,cov_yz,cov_zz,status,action\n";
  for (const auto& r : rows) {
    s += format_double(r.t);
    if (r.x) {
      for (int k = 0; k < 3; ++k) s += "," + format_double((*r.x)(k));
      const Mat3& o = r.omega;
      for (double v : {o(0, 0), o(0, 1), o(0, 2), o(1, 1), o(1, 2), o(2, 2)}) s += "," + format_double(v);
    } else {
      s += ",,,,,,,,,";
    }
    s += "," + r.status + "," + r.action + "\n";
  }
  return s;
}

std::vector<EstimateRow> estimates_from_table(const CsvTable& table) {
  const Columns c(table, {"t_s", "x", "y", "z", "cov_xx", "cov_xy", "cov_xz", "cov_yy", "cov_yz",
                          "cov_zz", "status", "action"});
  std::vector<EstimateRow> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    EstimateRow r;
    r.t = c.num(row, 0);
    r.status = c.str(row, 10);
    r.action = c.str(row, 11);
    if (!c.str(row, 1).empty()) {
      r.x = Vec3(c.num(row, 1), c.num(row, 2), c.num(row, 3));
      const double xx = c.num(row, 4), xy = c.num(row, 5), xz = c.num(row, 6);
      const double yy = c.num(row, 7), yz = c.num(row, 8), zz = c.num(row, 9);
      r.omega << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TruthSample> truth_from_table(const CsvTable& table) {
  const Columns c(table, {"t_s", "x", "y", "z"});
  std::vector<TruthSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    TruthSample s{c.num(row, 0), Vec3(c.num(row, 1), c.num(row, 2), c.num(row, 3))};
    if (!out.empty() && !(s.t > out.back().t))
      throw OrderingError(table.source + ":" + std::to_string(row.line) +
                          ": truth timestamps must be strictly increasing");
    out.push_back(s);
  }
  return out;
}

std::optional<Vec3> interpolate_truth(const std::vector<TruthSample>& truth, double t) {
  if (truth.empty() || t < truth.front().t || t > truth.back().t) return std::nullopt;
  const auto it = std::lower_bound(truth.begin(), truth.end(), t,
                                   [](const TruthSample& s, double v) { return s.t < v; });
  if (it->t == t) return it->position;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * a.position + w * b.position;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InvalidInput("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace radloc::io
