#pragma once

// Text formats shared by the command-line tool: event, pose, cone, estimate
// and truth CSV files. Readers report the offending line on failure.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radloc/event_pipeline.hpp"
#include "radloc/types.hpp"

namespace radloc::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Parses a full field as a double; throws ParseError naming source and line.
double parse_double(std::string_view field, const std::string& source, std::size_t line);

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a header column; throws ParseError if missing.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a mandatory header line. Blank lines and
/// lines starting with '#' are skipped. Every row must have the header width.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, const std::string& source);

enum class EventFileKind { Hits, Pairs };

/// Decides the event format from the header columns.
EventFileKind detect_event_kind(const CsvTable& table);

std::vector<events::PixelHit> hits_from_table(const CsvTable& table);
std::vector<events::ComptonPair> pairs_from_table(const CsvTable& table);

/// Poses must be strictly increasing in time; otherwise OrderingError.
std::vector<Pose> poses_from_table(const CsvTable& table);
std::vector<Cone> cones_from_table(const CsvTable& table);

std::string cones_to_csv(const std::vector<Cone>& cones);

struct EstimateRow {
  double t = 0.0;
  std::optional<Vec3> x;  // empty while no hypothesis exists
  Mat3 omega = Mat3::Zero();
  std::string status;
  std::string action;
};

std::string estimates_to_csv(const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> estimates_from_table(const CsvTable& table);

struct TruthSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

/// Truth track `t_s,x,y,z`, strictly increasing in time.
std::vector<TruthSample> truth_from_table(const CsvTable& table);

/// Linear interpolation of the truth track; nullopt outside its time span.
std::optional<Vec3> interpolate_truth(const std::vector<TruthSample>& truth, double t);

/// Writes via a temporary sibling file and a rename, so readers never see a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace radloc::io
