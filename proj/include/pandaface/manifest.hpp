#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pandaface/csv.hpp"
#include "pandaface/error.hpp"
#include "pandaface/image_io.hpp"
#include "pandaface/recognition.hpp"

namespace pandaface {

struct ManifestRow {
  std::string path;  // as written in the manifest
  std::string panda_id;
  std::filesystem::path resolved;  // relative to the manifest's directory
};


/// Parses a `path,panda_id` manifest.
inline std::vector<ManifestRow> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + manifest_path);
  const auto base = std::filesystem::path(manifest_path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "manifest is empty: " + manifest_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (detail::split_csv_line(line) != std::vector<std::string>{"path", "panda_id"}) {
    throw Error(ErrorCode::IoError, "manifest header must be 'path,panda_id': " + manifest_path);
  }

  std::vector<ManifestRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::IoError,
                  manifest_path + ":" + std::to_string(lineno) + ": expected 'path,panda_id'");
    }
    rows.push_back({fields[0], fields[1], base / fields[0]});
  }
  return rows;
}

inline void write_manifest(const std::vector<ManifestRow>& rows, const std::string& manifest_path) {
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest_path);
  out << "path,panda_id\n";
  for (const auto& r : rows) out << detail::csv_field(r.path) << ',' << detail::csv_field(r.panda_id) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + manifest_path);
}

/// Loads every image listed in the manifest; the error names the failing path.
inline std::vector<LabeledImage> load_dataset(const std::string& manifest_path) {
  std::vector<LabeledImage> out;
  for (const auto& row : read_manifest(manifest_path)) {
    out.push_back({load_image(row.resolved.string()), row.panda_id, row.path});
  }
  return out;
}

}  // namespace pandaface
